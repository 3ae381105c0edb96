// Multiple-automaton guided tree search over task-to-group assignments.
//
// A node holds one ordered plan per robot group and one reachable set per
// mission automaton. Expanding a node appends one task instance to one
// group's plan and advances only the mission that owns the instance.

#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmplan/automaton/nba.hpp"
#include "swarmplan/automaton/rposet.hpp"
#include "swarmplan/geometry.hpp"

namespace swarm::search {

struct GroupProfile {
    int id = 0;
    std::vector<std::string> members;
    std::set<std::string> capabilities;  // task symbols the group can serve
    Vec2 home;
    double velocity = 2.0;  // slowest member, m/s
};

struct TaskSite {
    std::string symbol;
    Vec2 position;
    Millis service_ms = 0;
};

struct Mission {
    std::string name;
    automaton::Nba nba;
    automaton::RPoset poset;
    std::vector<TaskSite> sites;  // one per task symbol of this mission

    const TaskSite* site(const std::string& symbol) const;
};

struct TaskRef {
    std::size_t mission = 0;
    std::string symbol;

    std::string str() const { return symbol + "@" + std::to_string(mission); }
    friend bool operator==(const TaskRef&, const TaskRef&) = default;
    friend auto operator<=>(const TaskRef&, const TaskRef&) = default;
};

struct PlannedTask {
    TaskRef task;
    Millis travel_ms = 0;
    Millis duration_ms = 0;  // travel + service
    Millis start_ms = 0;
    Vec2 position;

    Millis end_ms() const { return start_ms + duration_ms; }
};

/// zeta = (T_1..T_M, C_1..C_M, psi_1..psi_K).
struct Profile {
    std::vector<Millis> makespan_ms;
    std::vector<Millis> cost_ms;
    std::vector<std::size_t> distance;

    std::vector<double> vector() const;
};

struct SearchNode {
    std::size_t id = 0;
    std::optional<std::size_t> parent;
    std::vector<std::vector<PlannedTask>> plans;  // per group
    std::vector<automaton::ReachableSet> reach;   // per mission
    std::vector<TaskRef> order;  // expansion order from the root
    Profile profile;
    bool complete = false;

    bool assigned(const TaskRef& t) const;
    /// Group index holding `t`, if assigned.
    std::optional<std::size_t> group_of(const TaskRef& t) const;
};

class Problem {
public:
    Problem(std::vector<Mission> missions, std::vector<GroupProfile> groups);

    const std::vector<Mission>& missions() const { return missions_; }
    const std::vector<GroupProfile>& groups() const { return groups_; }

private:
    std::vector<Mission> missions_;
    std::vector<GroupProfile> groups_;
};

struct SearchParams {
    double eta1 = 0.1;
    double eta2 = 5.0;
    std::size_t width = 8;       // H
    std::size_t budget = 10000;  // node limit
    std::size_t threads = 1;
};

/// chi(v) = max_m T_m + eta1 * sum_m C_m + eta2 * sum_k psi_k, in seconds;
/// +infinity when some psi_k is infinite.
double node_value(const Profile& z, double eta1, double eta2);

/// z1 <= z2 element-wise with at least one strict entry. Throws
/// std::invalid_argument on a dimension mismatch.
bool dominates(const std::vector<double>& z1, const std::vector<double>& z2);

SearchNode root_node(const Problem& p);

/// Task instances of any mission that group m may serve next: the symbol is
/// in the group's capabilities, not yet assigned, and some state of the
/// mission's reachable set has a transition on the singleton label.
std::vector<TaskRef> candidate_tasks(const Problem& p, const SearchNode& v, std::size_t group);

struct TaskDuration {
    TaskRef task;
    Millis duration_ms = 0;
};

struct StartSchedule {
    std::vector<std::vector<Millis>> start_ms;  // per group, per plan slot
    std::vector<Millis> makespan_ms;            // per group
};

class ScheduleCycle : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Earliest start times under within-group sequencing and the given
/// precedence pairs (upstream must end before downstream starts). Pairs
/// that mention unplanned tasks are ignored. Throws ScheduleCycle.
StartSchedule schedule_start_times(const std::vector<std::vector<TaskDuration>>& plans,
                                   const std::vector<std::pair<TaskRef, TaskRef>>& precedence);

/// Precedence pairs of every mission poset, as task instances.
std::vector<std::pair<TaskRef, TaskRef>> precedence_pairs(const Problem& p);

/// Child of v with `task` appended to group m's plan. Returns nullopt and
/// sets `reason` when the child is discarded: the mission's reachable set
/// becomes empty, a poset predecessor of the task is still unassigned, or a
/// poset successor is already assigned.
std::optional<SearchNode> expand(const Problem& p, const SearchNode& v, std::size_t group, const TaskRef& task,
                                 std::string* reason = nullptr);

struct TraceRecord {
    std::size_t parent = 0;
    std::optional<std::size_t> child;
    std::size_t group = 0;
    TaskRef task;
    std::vector<double> profile;
    bool pruned = false;
    std::string reason;
};

struct SearchResult {
    bool complete = false;  // false: best partial node returned
    SearchNode best;
    double value = 0.0;
    std::size_t nodes_created = 0;
    std::size_t expansions = 0;
    std::vector<TraceRecord> trace;
    std::vector<double> incumbent_history;  // incumbent value after each round
};

class InfeasibleMission : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

SearchResult search(const Problem& p, const SearchParams& params = {});

}  // namespace swarm::search
