// Scenario files: JSON with a fixed schema and strict validation.
//
// Top-level keys (only "robots" is required):
//   name                 string
//   arena                {"min": [x, y], "max": [x, y]}  metres
//   robots               [{"id", "platform", "group", "position": [x, y]}]
//   features             [{"id", "type", "position", "known"}]
//   resources            [{"id", "type", "position", "known"}]
//   missions             [{"name", "ltl", "tasks": {proposition: feature id}}]
//   events               [{"time_ms", "kind", "payload"}]
//   plan_library         path, relative to the scenario file
//   service_ms           {subtask skill: ms}
//   default_service_ms   int
//   skill_success        {subtask skill: p}
//   exploration          {"success": {type: p}, "default_success", "regions": {type: [[x, y], ...]}, "sweep_ms"}
//   planner              {"eta1", "eta2", "width", "budget", "epsilon", "batch", "resolve_after",
//                         "max_schemes", "solver_node_limit", "threads"}
//   human                {"scheme_approval", "label_approval", "approval_timeout_ms"}
//   backend              {"kind": "rule" | "http", "url", "timeout_ms"}
//   position_jitter_m, max_time_ms, tick_ms
//   sensing              {"ground_m", "aerial_m"}
// Unknown keys are errors.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "swarmplan/sim/scenario.hpp"

namespace swarm::service {

struct Diagnostic {
    std::string path;  // JSON pointer into the file
    std::string code;  // "type", "missing", "unknown_key", "value", "reference", "duplicate", "ltl", "file", "syntax"
    std::string message;
};

class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(std::vector<Diagnostic> d);
    const std::vector<Diagnostic>& diagnostics() const { return diags_; }
    nlohmann::json to_json() const;

private:
    std::vector<Diagnostic> diags_;
};

/// `base_dir` resolves relative file paths. Throws ScenarioError listing
/// every problem found.
sim::Scenario parse_scenario(const nlohmann::json& j, const std::string& base_dir = ".");
sim::Scenario parse_scenario_text(const std::string& text, const std::string& base_dir = ".");
sim::Scenario load_scenario(const std::string& path);

}  // namespace swarm::service
