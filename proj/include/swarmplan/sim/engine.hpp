// Discrete-event mission simulation with online adaptation.
//
// Events are ordered by (time, rank, enqueue index). Ranks: completions and
// arrivals, then discoveries and motion ticks, then adaptations, then
// approval timeouts, then interventions.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "swarmplan/monitor/sync.hpp"
#include "swarmplan/monitor/tracker.hpp"
#include "swarmplan/sim/intervention.hpp"
#include "swarmplan/sim/scenario.hpp"
#include "swarmplan/subtask/generation.hpp"
#include "swarmplan/subtask/plan_library.hpp"

namespace swarm::sim {

/// Module names used in invocation counts and log records.
inline constexpr const char* kTaskReasoning = "task_reasoning";
inline constexpr const char* kMissionSearch = "mission_search";
inline constexpr const char* kSubtaskGeneration = "subtask_generation";
inline constexpr const char* kSubtaskAssignment = "subtask_assignment";
inline constexpr const char* kGroupAllocation = "group_allocation";
inline constexpr const char* kResourceRegistry = "resource_registry";

const std::vector<std::string>& adaptation_kinds();
/// Module chain each adaptation kind is routed through. Throws
/// std::invalid_argument for an unroutable kind.
const std::vector<std::string>& adaptation_route(const std::string& kind);

struct RunMetrics {
    std::size_t tasks_total = 0;
    std::size_t tasks_completed = 0;
    std::size_t subtasks_dispatched = 0;
    std::size_t subtasks_completed = 0;
    std::map<std::string, std::size_t> invocations;
    std::map<std::string, std::size_t> interventions;  // accepted, per kind
    std::size_t interventions_rejected = 0;
    std::size_t approvals_auto = 0;
    std::size_t approvals_human = 0;
    Millis makespan_ms = 0;
    std::map<std::string, Millis> task_completion_ms;
    std::vector<double> solve_ms;  // wall clock per solver call
    std::map<std::string, double> distance_m;  // per robot

    nlohmann::json to_json() const;
};

struct EngineOptions {
    std::uint64_t seed = 1;
    bool human = true;  // false disables every approval gate
    std::shared_ptr<subtask::Backend> backend;  // null: from the scenario
    std::shared_ptr<const subtask::PlanLibrary> library;  // null: from the scenario
};

struct InterventionOutcome {
    bool accepted = false;
    std::string reason;
};

class Engine {
public:
    /// Throws std::invalid_argument for scenario problems the engine meets
    /// (formulas that do not parse, unknown feature ids).
    Engine(Scenario sc, EngineOptions opts = {});
    ~Engine();
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    /// Queues a scripted intervention; its time must be set.
    void schedule(const Intervention& iv);
    /// Applies an intervention at the current time and records it with that
    /// time, so the recorded copy replays the same run. Events already due
    /// at the current time run first. Throws InterventionError for a
    /// malformed intervention, which leaves the run untouched.
    InterventionOutcome apply_now(Intervention iv);

    /// Processes one event; false when the queue is empty or time is up.
    bool step();
    void run();
    /// Processes events up to and including time t, then sets the clock to t.
    void run_until(Millis t);
    bool finished() const;
    Millis now() const;
    /// Time of the next queued event, or -1.
    Millis next_event_ms() const;

    const std::vector<nlohmann::json>& log() const;
    std::string log_jsonl() const;
    const RunMetrics& metrics() const;
    /// Interventions in the order applied, with their application times.
    const std::vector<Intervention>& applied() const;

    std::vector<const monitor::MissionTracker*> trackers() const;
    std::vector<monitor::SyncRule> sync_rules() const;
    monitor::ObservedSchedule observed_schedule() const;
    std::vector<monitor::SyncViolation> sync_violations() const;

    nlohmann::json state_json() const;
    nlohmann::json approvals_json() const;
    nlohmann::json automata_json() const;
    /// Task-level and subtask-level rows.
    nlohmann::json gantt_json() const;
    std::string gantt_csv(bool subtasks) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace swarm::sim
