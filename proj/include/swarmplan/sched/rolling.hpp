// Rolling-horizon dispatch and per-task scheme selection.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swarmplan/sched/solver.hpp"

namespace swarm::sched {

enum class UnitState { Pool, Dispatched, Running, Done };

const char* unit_state_name(UnitState s);

struct PoolEntry {
    SchedSubtask sub;
    std::vector<std::string> preds;  // subtask ids
    double risk() const { return (1.0 - sub.p_success) * sub.robots; }
};

struct RollingOptions {
    double epsilon = 0.3;
    std::size_t batch = 16;
    std::size_t resolve_after = 4;  // completions between re-solves
    SolverOptions solver;
};

struct WindowPlan {
    bool solved = false;  // false: nothing eligible, no solver call
    SchedInstance instance;
    Assignment assignment;
    std::vector<std::string> deferred;  // eligible but left out for the budget or batch size
    std::vector<std::string> blocked;   // risk alone above epsilon, never dispatchable
    double solve_ms = 0.0;              // wall clock
};

/// Recomputes a pool entry's duration against the current robot states.
using DurationFn = std::function<Millis(const PoolEntry&, const std::vector<SchedRobot>&)>;

/// Subtask bookkeeping for one robot group. Subtasks move
/// Pool -> Dispatched -> Running -> Done; a re-plan returns every dispatched
/// unit that has not started to the pool. Running units are frozen.
class RollingState {
public:
    explicit RollingState(RollingOptions opts = {});

    /// Throws std::invalid_argument for a duplicate id or an unknown pred.
    void add(PoolEntry e);
    bool has(const std::string& id) const { return entries_.count(id) > 0; }
    UnitState state(const std::string& id) const;
    const PoolEntry& entry(const std::string& id) const;
    std::vector<std::string> ids() const { return order_; }
    std::vector<std::string> ids_in(UnitState s) const;
    bool finished() const;

    /// Pool subtasks for the next solve in topological order: every pred is
    /// running, done, or taken earlier in the window; cumulative risk stays
    /// within epsilon and the count within the batch size.
    std::vector<std::string> window(std::vector<std::string>* deferred = nullptr,
                                    std::vector<std::string>* blocked = nullptr) const;

    /// Recalls unstarted units, solves the window and fills robot queues.
    /// `robots` carry when and where each robot is next free. Solver errors
    /// propagate after the recall.
    WindowPlan replan(Millis now, const std::vector<SchedRobot>& robots, const DurationFn& duration = {});

    /// Moves every dispatched unit back to the pool and clears the queues.
    std::vector<std::string> recall();

    const std::deque<std::string>& queue(const std::string& robot) const;
    std::optional<std::string> next(const std::string& robot) const;
    const std::vector<std::string>& robots_of(const std::string& id) const;

    void mark_started(const std::string& id, Millis t);
    void mark_done(const std::string& id, Millis t);
    /// Running -> Pool, for a unit stopped by a robot failure.
    void abort(const std::string& id);
    /// Requires `robots` to take part in a pool or dispatched unit; the pin
    /// applies from the next re-plan. Throws std::logic_error otherwise.
    void pin(const std::string& id, std::vector<std::string> robots);
    /// Replaces the success probability and duration estimate of a unit that
    /// has not started.
    void update(const std::string& id, double p_success, Millis duration_ms);
    /// Removes pool and dispatched entries matching pred; returns their ids.
    std::vector<std::string> drop_if(const std::function<bool(const PoolEntry&)>& pred);

    bool due() const { return completions_since_solve_ >= opts_.resolve_after; }
    std::size_t solves() const { return solves_; }
    Millis planned_start(const std::string& id) const;
    Millis planned_end(const std::string& id) const;
    std::optional<Millis> started_at(const std::string& id) const;
    std::optional<Millis> done_at(const std::string& id) const;
    const RollingOptions& options() const { return opts_; }

private:
    struct Slot {
        PoolEntry e;
        UnitState st = UnitState::Pool;
        std::vector<std::string> robots;
        Millis planned_start = 0, planned_end = 0;
        std::optional<Millis> started, done;
    };
    RollingOptions opts_;
    std::map<std::string, Slot> entries_;
    std::vector<std::string> order_;
    std::map<std::string, std::deque<std::string>> queues_;
    std::size_t completions_since_solve_ = 0;
    std::size_t solves_ = 0;
};

/// Builds an instance for one candidate.
using InstanceBuilder = std::function<SchedInstance(const subtask::LayeredDag&)>;

struct CandidateOutcome {
    std::size_t index = 0;
    bool feasible = false;
    Millis makespan_ms = 0;
    std::string constraint;  // failure family when infeasible
    std::string message;
};

class SchemeSelectionError : public std::runtime_error {
public:
    SchemeSelectionError(const std::string& msg, std::vector<CandidateOutcome> c)
        : std::runtime_error(msg), certificates(std::move(c)) {}
    std::vector<CandidateOutcome> certificates;
};

struct SchemeChoice {
    std::size_t index = 0;
    Assignment assignment;
    std::vector<CandidateOutcome> outcomes;
};

/// Solves one instance per candidate, concurrently when threads > 1, and
/// returns the smallest makespan, ties to the lower index.
SchemeChoice select_scheme(const std::vector<subtask::LayeredDag>& candidates, const InstanceBuilder& build,
                           unsigned threads = 1, const SolverOptions& opts = {});

}  // namespace swarm::sched
