// Run-log persistence and offline re-checking.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "swarmplan/sim/intervention.hpp"
#include "swarmplan/sim/scenario.hpp"

namespace swarm::service {

std::vector<nlohmann::json> parse_jsonl(const std::string& text);
std::vector<nlohmann::json> read_jsonl(const std::string& path);
std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

struct LogViolation {
    std::string kind;  // "verdict", "precedence", "sync", "overlap", "failed_robot", "distance", "format", "end"
    std::string detail;
};

struct VerifyReport {
    std::size_t records = 0;
    std::map<std::string, std::string> verdicts;  // mission -> replayed final verdict
    std::vector<LogViolation> violations;
    std::optional<bool> replay_identical;  // set when a scenario was supplied
    std::string replay_detail;

    bool ok() const { return violations.empty() && replay_identical.value_or(true); }
    nlohmann::json to_json() const;
};

/// Re-derives every mission automaton from the logged formulas, replays the
/// task completions through fresh trackers and compares each logged
/// verdict; checks task ordering and synchronised starts, per-robot overlap,
/// that failed robots never start work again, and that the logged segment
/// lengths add up to the final odometers.
VerifyReport verify_log(const std::vector<nlohmann::json>& log);

/// Interventions recorded in a log, with their application times.
std::vector<sim::Intervention> logged_interventions(const std::vector<nlohmann::json>& log);

/// verify_log plus a fresh run of `sc` with the logged seed, approval mode
/// and interventions; the new log must match `text` byte for byte.
VerifyReport verify_log_text(const std::string& text, const sim::Scenario* sc);

}  // namespace swarm::service
