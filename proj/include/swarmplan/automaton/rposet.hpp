// Relaxed partial orders over mission tasks and their DAG rendering.
//
// Extraction walks configurations (automaton state, tasks seen so far) where
// a transition "takes" a task when its guard requires that proposition. Any
// path of satisfiable guards is a run on some word, so only configurations
// that lie on some accepting run are considered.

#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "swarmplan/automaton/nba.hpp"

namespace swarm::automaton {

class InfeasibleSpecification : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RPoset {
    std::vector<std::string> tasks;  // sorted
    std::set<std::pair<std::string, std::string>> precedence;
    std::set<std::pair<std::string, std::string>> exclusion;  // stored in both directions

    bool precedes(const std::string& h, const std::string& l) const { return precedence.count({h, l}) > 0; }
    bool excludes(const std::string& a, const std::string& b) const { return exclusion.count({a, b}) > 0; }
    bool has_task(const std::string& t) const;
    /// Tasks that must come no later than `t`.
    std::vector<std::string> predecessors(const std::string& t) const;

    /// Throws std::logic_error when precedence is cyclic or exclusion is
    /// reflexive or asymmetric.
    void validate() const;
};

/// (h, l) is a precedence pair when on every accepting run the first
/// transition taking l is not earlier than the first one taking h, except
/// pairs that are always taken together. (h, l) is an exclusion pair when no
/// accepting run takes both on one transition. Tasks never taken on an
/// accepting run are left out.
RPoset extract_rposet(const Nba& a, const std::vector<std::string>& tasks);

enum class EdgeKind { Precedes, Excludes };

struct DagEdge {
    std::string from;
    std::string to;
    EdgeKind kind = EdgeKind::Precedes;

    friend bool operator==(const DagEdge&, const DagEdge&) = default;
    friend auto operator<=>(const DagEdge&, const DagEdge&) = default;
};

struct TaskDag {
    std::vector<std::string> nodes;
    std::vector<DagEdge> edges;  // sorted; exclusion edges have from < to

    std::vector<DagEdge> precedence_edges() const;
    std::string to_dot(const std::string& name = "tasks") const;
    /// Plain node/edge list, one record per line: "node <id>" and
    /// "edge <from> <to> precedes|excludes".
    std::string to_text() const;
};

/// Transitive reduction of the precedence relation plus exclusion
/// annotations. Throws std::logic_error if precedence has a cycle.
TaskDag rposet_to_dag(const RPoset& p);

}  // namespace swarm::automaton
