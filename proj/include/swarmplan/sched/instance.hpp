// Subtask assignment instances for one robot group.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "swarmplan/geometry.hpp"
#include "swarmplan/subtask/layered_dag.hpp"

namespace swarm::sched {

struct SchedRobot {
    std::string id;
    std::set<std::string> skills;  // subtask skills
    Millis available_ms = 0;       // free from this time on
    Vec2 position;                 // where it will be when free
    double velocity = 2.0;
};

struct SchedSubtask {
    std::string id;
    std::string skill;
    int robots = 1;  // units started together
    Millis duration_ms = 0;
    double p_success = 1.0;
    Millis release_ms = 0;            // earliest start from work outside the instance
    std::vector<std::string> pinned;  // robot ids that must take part
};

/// Violated constraint family. Names: "assignment", "capability",
/// "precedence", "overlap", "budget", "sequence", "release", "pinned".
class InfeasibleInstance : public std::runtime_error {
public:
    InfeasibleInstance(std::string constraint, const std::string& message)
        : std::runtime_error(message), constraint_(std::move(constraint)) {}
    const std::string& constraint() const { return constraint_; }

private:
    std::string constraint_;
};

struct SchedInstance {
    Millis now = 0;
    double epsilon = 0.3;
    Millis big_m = 0;
    std::vector<SchedRobot> robots;
    std::vector<SchedSubtask> subtasks;
    std::vector<std::pair<std::size_t, std::size_t>> precedence;  // (before, after)

    std::vector<std::size_t> capable(std::size_t s) const;
    std::optional<std::size_t> robot_index(const std::string& id) const;
    std::optional<std::size_t> subtask_index(const std::string& id) const;
    /// Sum over subtasks of (1 - p) * robots.
    double risk() const;
    /// Throws std::invalid_argument on malformed data (indices, durations,
    /// probabilities, epsilon outside (0, 1)).
    void validate() const;
};

/// now + total duration + the longest travel between any two robot or work
/// locations supplied.
Millis big_m_bound(Millis now, const std::vector<SchedSubtask>& subtasks, const std::vector<Vec2>& points,
                   double velocity);

struct ResourceSite {
    std::string type;
    Vec2 position;
};

/// A chosen scheme placed at its task site. Nodes listed in `skip` are
/// already finished and are left out together with their edges.
struct PlacedDag {
    std::string task;  // task instance id, prefix of subtask ids
    subtask::LayeredDag dag;
    Vec2 site;
    std::set<std::size_t> skip;
    std::map<std::size_t, std::vector<std::string>> pinned;
};

/// Where a node is carried out: the exploration region centre, else the
/// task site.
Vec2 node_location(const PlacedDag& p, std::size_t node);

/// Service time plus travel from the robot's position, by way of the
/// nearest instance of the consumed resource when one is known.
Millis staged_duration(const SchedRobot& r, const subtask::SubtaskNode& n, Vec2 location,
                       const std::vector<ResourceSite>& resources);

/// Subtask ids are "<task>/<node id>". Durations use the slowest capable
/// robot. Throws InfeasibleInstance("capability") naming the skill when too
/// few robots can perform it, and for an empty group with work to do.
SchedInstance build_instance(const std::vector<PlacedDag>& dags, const std::vector<SchedRobot>& group,
                             const std::vector<ResourceSite>& resources, double epsilon, Millis now);

}  // namespace swarm::sched
