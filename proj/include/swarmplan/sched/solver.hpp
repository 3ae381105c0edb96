// Exact makespan minimisation for one group's subtask window.
//
// Depth-first branch and bound over (subtask, robot set) placements, each
// placed at its earliest start behind the chosen robots' previous work. Any
// schedule can be replayed in start order this way without delaying a
// subtask, so the search space contains an optimum. Identical robots with
// equal ready times are interchangeable and only one choice among them is
// tried; repeated partial states are cut by a memo.

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "swarmplan/sched/instance.hpp"

namespace swarm::sched {

struct Assignment {
    std::vector<std::vector<std::size_t>> robots;    // per subtask, sorted robot indices
    std::vector<Millis> start_ms;                    // per subtask
    std::vector<std::vector<std::size_t>> sequence;  // per robot, subtasks by start time
    Millis makespan_ms = 0;
    bool optimal = true;
    std::size_t nodes = 0;

    bool x(std::size_t robot, std::size_t subtask) const;
    /// Next subtask of robot after `subtask`; nullopt stands for the robot's
    /// virtual terminal.
    std::optional<std::size_t> next(std::size_t robot, std::size_t subtask) const;
    Millis end_ms(const SchedInstance& inst, std::size_t subtask) const {
        return start_ms.at(subtask) + inst.subtasks.at(subtask).duration_ms;
    }
};

struct SolverOptions {
    std::size_t node_limit = 20'000'000;
    std::size_t memo_limit = 400'000;
};

/// Every subtask of the instance is assigned. Throws InfeasibleInstance for
/// a cyclic precedence, too few capable robots, a bad pin, or a total risk
/// above epsilon. When the node limit is hit the incumbent is returned with
/// optimal = false.
Assignment solve(const SchedInstance& inst, const SolverOptions& opts = {});

}  // namespace swarm::sched
