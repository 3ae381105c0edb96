// Layered subtask graphs for one task, plus exploration insertion and
// structural validation.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "swarmplan/geometry.hpp"

namespace swarm::subtask {

struct SubtaskNode {
    std::string id;        // unique within the graph
    std::string skill;     // subtask skill
    std::string resource;  // resource type consumed, empty if none
    int robots = 1;
    Millis duration_ms = 0;  // service time, travel excluded
    double p_success = 1.0;
    bool exploration = false;
    std::vector<Vec2> region;  // exploration search area, empty: around the task site
};

struct LayeredDag {
    std::string task;  // task type
    int scheme = 0;    // candidate index
    std::vector<SubtaskNode> nodes;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // (before, after)

    std::vector<std::size_t> predecessors(std::size_t i) const;
    std::vector<std::size_t> successors(std::size_t i) const;
    /// Longest-path layer index per node; empty when the graph is cyclic.
    std::vector<int> layers() const;
    /// Kahn order with index tie-break; empty when cyclic (and nodes exist).
    std::vector<std::size_t> topological_order() const;
    bool acyclic() const;
    std::optional<std::size_t> index_of(const std::string& id) const;
    /// Indices of nodes that precede `i` transitively.
    std::set<std::size_t> ancestors(std::size_t i) const;
    double risk() const;  // sum of (1 - p) * robots
    std::string to_dot(const std::string& name = "scheme") const;
};

nlohmann::json dag_to_json(const LayeredDag& g);
/// Throws std::invalid_argument on shape errors.
LayeredDag dag_from_json(const nlohmann::json& j);

struct DagViolation {
    std::string kind;  // "cycle", "unknown skill", "missing resource", "bad edge", "robot count", "duplicate id"
    std::string detail;
};

/// All structural violations. `caps` is the group's subtask-skill union;
/// `known` the resource types with a known instance.
std::vector<DagViolation> validate_dag(const LayeredDag& g, const std::set<std::string>& caps,
                                       const std::set<std::string>& known);

struct ExplorationPriors {
    std::map<std::string, double> success;  // per resource type
    double default_success = 0.8;
    std::map<std::string, std::vector<Vec2>> regions;  // candidate search polygons
    Millis sweep_ms = 20000;

    double prior(const std::string& resource) const;
};

/// One exploration node per missing resource type, with no predecessors and
/// an edge to every consumer of that resource. Node ids are "explore_<type>".
LayeredDag insert_exploration(const LayeredDag& g, const std::set<std::string>& known,
                              const ExplorationPriors& priors);

Vec2 centroid(const std::vector<Vec2>& polygon);

}  // namespace swarm::subtask
