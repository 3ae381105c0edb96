// Operator interventions as scripted-trace records.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "swarmplan/geometry.hpp"

namespace swarm::sim {

/// Kinds and payloads:
///   relabel_feature      {"feature": id, "type": feature type}
///   confirm_or_edit_plan {"approval": id, "action": "approve" | "edit", "schemes": stage III object}
///   select_scheme        {"task": id, "scheme": index}
///   reassign_subtask     {"subtask": id, "robot": id}
///   define_region        {"resource": type, "polygon": [[x, y], ...]} in metres
///   trigger_skill        {"robot": id, "skill": subtask skill}
struct Intervention {
    std::optional<Millis> time_ms;  // nullopt: live, applied on arrival
    std::string kind;
    nlohmann::json payload = nlohmann::json::object();
};

class InterventionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

const std::vector<std::string>& intervention_kinds();

/// Checks the kind and the payload shape. Throws InterventionError.
void validate_shape(const Intervention& iv);

/// Throws InterventionError.
Intervention intervention_from_json(const nlohmann::json& j);
nlohmann::json intervention_to_json(const Intervention& iv);

/// Accepts a JSON array, an object with an "interventions" array, or one
/// JSON object per line.
std::vector<Intervention> parse_intervention_trace(const std::string& text);
std::string write_intervention_trace(const std::vector<Intervention>& ivs);

}  // namespace swarm::sim
