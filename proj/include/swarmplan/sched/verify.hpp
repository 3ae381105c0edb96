// Independent constraint checker for assignments, plus log serialisation.

#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "swarmplan/sched/solver.hpp"

namespace swarm::sched {

struct Violation {
    std::string constraint;  // family name, see InfeasibleInstance
    std::string detail;
};

/// Checks every constraint family by direct arithmetic: robot counts and
/// pins, capabilities, precedence, per-robot sequencing without overlap, the risk budget, sequence consistency (one successor per
/// assigned subtask, the last one going to the virtual terminal), and
/// release times. Returns all violations.
std::vector<Violation> verify(const SchedInstance& inst, const Assignment& a);

nlohmann::json instance_to_json(const SchedInstance& inst);
SchedInstance instance_from_json(const nlohmann::json& j);
nlohmann::json assignment_to_json(const SchedInstance& inst, const Assignment& a);

}  // namespace swarm::sched
