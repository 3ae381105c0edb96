// In-memory scenario description consumed by the simulation engine.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "swarmplan/geometry.hpp"
#include "swarmplan/subtask/layered_dag.hpp"
#include "swarmplan/subtask/skills.hpp"

namespace swarm::sim {

struct RobotSpec {
    std::string id;
    subtask::Platform platform = subtask::Platform::UGV;
    int group = 1;
    Vec2 position;
};

struct FeatureInstance {
    std::string id;
    std::string type;  // task feature type
    Vec2 position;
    bool known = true;  // false: found by sensing
};

struct ResourceInstance {
    std::string id;
    std::string type;
    Vec2 position;
    bool known = true;
};

struct MissionSpec {
    std::string name;
    std::string ltl;
    std::map<std::string, std::string> tasks;  // proposition -> feature id
};

/// Adaptation injected at a fixed time. Kinds: new_task_type,
/// new_task_instance, new_resource_type, new_resource_instance,
/// robot_failure. Payload: {"feature": {...}} / {"resource": {...}} /
/// {"robot": id}.
struct ScriptedEvent {
    Millis time_ms = 0;
    std::string kind;
    nlohmann::json payload;
};

struct PlannerParams {
    double eta1 = 0.1;
    double eta2 = 5.0;
    std::size_t width = 8;
    std::size_t budget = 10000;
    double epsilon = 0.3;
    std::size_t batch = 16;
    std::size_t resolve_after = 4;
    std::size_t max_schemes = 4;
    std::size_t solver_node_limit = 200000;
    unsigned threads = 1;
};

struct HumanSettings {
    bool scheme_approval = true;
    bool label_approval = true;
    Millis approval_timeout_ms = 10000;
};

struct Scenario {
    std::string name;
    Vec2 arena_min{0, 0};
    Vec2 arena_max{100, 100};
    std::vector<RobotSpec> robots;
    std::vector<FeatureInstance> features;
    std::vector<ResourceInstance> resources;
    std::vector<MissionSpec> missions;
    std::vector<ScriptedEvent> events;
    std::string plan_library;  // path; empty: built-in entries
    std::map<std::string, Millis> service_ms;
    Millis default_service_ms = 20000;
    std::map<std::string, double> skill_success;
    subtask::ExplorationPriors priors;
    PlannerParams planner;
    HumanSettings human;
    std::string backend = "rule";  // "rule" or "http"
    std::string backend_url;
    Millis backend_timeout_ms = 30000;
    double position_jitter_m = 0.0;  // seeded offset applied to robot start positions
    Millis max_time_ms = 3600000;
    Millis tick_ms = 1000;
    double sensing_ground_m = 5.0;
    double sensing_aerial_m = 15.0;
};

}  // namespace swarm::sim
