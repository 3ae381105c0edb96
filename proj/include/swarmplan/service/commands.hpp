// Command-line entry points. Exit codes: 0 success, 1 usage or I/O error,
// 2 invalid scenario or intervention trace, 3 run finished with a mission
// incomplete or a log that fails verification.

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "swarmplan/sim/intervention.hpp"
#include "swarmplan/sim/scenario.hpp"

namespace swarm::service {

struct RunArgs {
    std::string scenario;
    std::string interventions;  // optional trace path
    std::string out;            // artifact directory, created if missing
    std::uint64_t seed = 1;
    bool human = true;
};

/// Artifacts: log.jsonl, metrics.json, gantt_tasks.csv, gantt_subtasks.csv,
/// automata.json, one <mission>.dot per mission and interventions.jsonl
/// (the applied trace).
int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err);

/// Prints the verification report as JSON. With a scenario the run is
/// replayed and must reproduce the log byte for byte.
int cmd_verify(const std::string& log_path, const std::string& scenario_path, std::ostream& out, std::ostream& err);

/// Checks robot and feature references of a trace against a scenario;
/// returns one message per problem.
std::vector<std::string> check_trace(const std::vector<sim::Intervention>& trace, const sim::Scenario& sc);

struct BenchRow {
    std::string name;
    std::string kind;  // "sched" or "search"
    std::string size;  // "<subtasks>x<robots>" or "<tasks>x<groups>"
    double runtime_ms = 0.0;
    double objective = 0.0;  // makespan ms, or search value
    double bound = 0.0;      // lower bound (sched) or wide-search reference (search)
    bool optimal = false;    // proven by the solver
    double gap = 0.0;        // relative to bound
    std::string note;
};

/// Runs every *.json instance in `dir`, sorted by file name.
std::vector<BenchRow> run_bench(const std::string& dir);
std::string format_bench(const std::vector<BenchRow>& rows);
nlohmann::json bench_json(const std::vector<BenchRow>& rows);
int cmd_bench(const std::string& dir, bool as_json, std::ostream& out, std::ostream& err);

}  // namespace swarm::service
