// Acceptance run: one PASS/FAIL line per criterion. Exit 0 when all pass.
//   acceptance [data dir]

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "oracles/ltl_oracle.hpp"
#include "oracles/sched_oracle.hpp"
#include "oracles/search_oracle.hpp"
#include "swarmplan/ltl/semantics.hpp"
#include "swarmplan/sched/solver.hpp"
#include "swarmplan/sched/verify.hpp"
#include "swarmplan/service/commands.hpp"
#include "swarmplan/service/run_log.hpp"
#include "swarmplan/service/scenario_file.hpp"
#include "swarmplan/sim/engine.hpp"

using namespace swarm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string g_data;

sim::Scenario scenario(const std::string& name) { return service::load_scenario(g_data + "/scenarios/" + name); }

std::string verdict_of(const sim::Engine& e) {
    std::string v;
    for (const auto* t : e.trackers()) {
        std::string x = monitor::verdict_name(t->verdict());
        if (!v.empty() && v != x) return "mixed";
        v = x;
    }
    return v;
}

// ---- criteria ----

Outcome ltl_agreement() {
    auto t0 = Clock::now();
    auto corpus = oracle::load_corpus(g_data + "/ltl_corpus.txt");
    std::size_t words = 0, bad = 0, clauses = 0;
    for (const auto& e : corpus) {
        if (e.alphabet.size() > 3) return {false, "alphabet over 3 propositions: " + e.formula};
        if (e.formula.rfind("[](", 0) == 0 && e.formula.find("->") != std::string::npos) ++clauses;
        auto f = ltl::parse_ltl(e.formula);
        auto a = ltl::translate_to_nba(f);
        oracle::WordSemantics sem(f);
        oracle::each_lasso(e.alphabet, 4, 2, [&](const oracle::Lasso& w) {
            ++words;
            bool want = sem(w);
            if (a.accepts(ltl::LassoWord(w.prefix, w.loop)) != want || oracle::nba_accepts(a, w) != want) ++bad;
        });
    }
    double s = since(t0);
    std::ostringstream d;
    d << corpus.size() << " formulas, " << words << " words, " << bad << " disagreements, " << s << " s";
    return {corpus.size() >= 20 && bad == 0 && s < 60.0, d.str()};
}

Outcome search_optimality() {
    std::size_t ok = 0;
    double worst = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto c = oracle::random_search_case(seed);
        auto t0 = Clock::now();
        auto r = search::search(c.problem);
        double s = since(t0);
        worst = std::max(worst, s);
        auto want = oracle::brute_force_search(c.problem, search::SearchParams{}.eta1);
        if (r.complete && r.value == want.value && s < 1.0) ++ok;
    }
    std::ostringstream d;
    d << ok << "/50 exact, slowest " << worst << " s";
    return {ok == 50, d.str()};
}

Outcome milp_exactness() {
    auto corpus = oracle::exactness_corpus(50);
    std::size_t exact = 0, verified = 0, budget = 0;
    for (const auto& in : corpus) {
        auto a = sched::solve(in);
        exact += a.optimal && a.makespan_ms == oracle::brute_force_makespan(in) ? 1 : 0;
        verified += sched::verify(in, a).empty() ? 1 : 0;
        double risk = 0;
        for (std::size_t s = 0; s < in.subtasks.size(); ++s) risk += (1 - in.subtasks[s].p_success) * a.robots[s].size();
        budget += risk <= in.epsilon + 1e-12 ? 1 : 0;
    }
    std::ostringstream d;
    d << exact << "/50 exact, " << verified << "/50 verified, " << budget << "/50 within risk budget";
    return {exact == 50 && verified == 50 && budget == 50, d.str()};
}

Outcome rolling_speed() {
    // full windows at the batch size, solved the way the engine solves them
    sim::PlannerParams pp;
    sched::SolverOptions so;
    so.node_limit = pp.solver_node_limit;
    double worst = 0;
    std::size_t proven = 0;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        auto in = oracle::random_instance(16000 + s, pp.batch, 5);
        auto t0 = Clock::now();
        auto a = sched::solve(in, so);
        worst = std::max(worst, since(t0));
        proven += a.optimal ? 1 : 0;
    }
    // cycles inside simulated runs
    double run_worst_ms = 0;
    std::size_t cycles = 0;
    for (const char* f : {"mini_plant.json", "adapt_new_task_type.json", "adapt_robot_failure.json"}) {
        auto sc = scenario(f);
        if (sc.planner.batch > 16) return {false, std::string(f) + " uses a batch above 16"};
        sim::EngineOptions eo;
        eo.human = false;
        sim::Engine e(sc, eo);
        e.run();
        for (double ms : e.metrics().solve_ms) run_worst_ms = std::max(run_worst_ms, ms);
        cycles += e.metrics().solve_ms.size();
    }
    // full horizon 15 x 5 through the bench command
    bool full_ok = false;
    double full_ms = 0;
    for (const auto& r : service::run_bench(g_data + "/bench")) {
        if (r.size == "15x5") {
            full_ok = r.optimal && r.note == "verified";
            full_ms = r.runtime_ms;
        }
    }
    std::ostringstream d;
    d << "16-subtask windows: slowest " << worst << " s, " << proven << "/20 proven optimal; " << cycles
      << " run cycles, slowest " << run_worst_ms << " ms; 15x5 full horizon " << (full_ok ? "exact" : "NOT exact") << " in "
      << full_ms << " ms";
    return {worst <= 5.0 && run_worst_ms <= 5000.0 && full_ok, d.str()};
}

Outcome ordering_guarantee() {
    auto sc = scenario("mini_plant.json");
    std::size_t good = 0;
    std::string first_bad;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        sim::EngineOptions eo;
        eo.seed = seed;
        eo.human = false;
        sim::Engine e(sc, eo);
        e.run();
        std::map<std::string, Millis> first_start, last_end;
        for (const auto& r : e.log()) {
            if (r["kind"] == "subtask_started") {
                std::string t = r["task"];
                Millis at = r["t"];
                if (!first_start.count(t) || at < first_start[t]) first_start[t] = at;
            } else if (r["kind"] == "subtask_completed") {
                std::string t = r["task"];
                last_end[t] = std::max(last_end[t], r["t"].get<Millis>());
            }
        }
        bool ok = verdict_of(e) == "accepting" && e.sync_violations().empty() && first_start.size() == 7;
        if (ok) {
            Millis rescue = std::max(last_end["person_a"], last_end["person_b"]);
            for (const char* f : {"flame_gas", "flame_liquid", "flame_hv", "leak_h2s", "tank_3"}) ok = ok && first_start[f] >= rescue;
            ok = ok && first_start["flame_liquid"] >= last_end["flame_gas"];
        }
        if (ok) ++good;
        else if (first_bad.empty()) first_bad = " (first failure: seed " + std::to_string(seed) + ")";
    }
    return {good == 100, std::to_string(good) + "/100 runs accepting with ordering and sync intact" + first_bad};
}

Outcome adaptation_coverage() {
    std::size_t good = 0;
    std::string why;
    for (const auto& kind : sim::adaptation_kinds()) {
        auto sc = scenario("adapt_" + kind + ".json");
        sim::EngineOptions eo;
        eo.human = false;
        sim::Engine e(sc, eo);
        e.run();
        std::string id;
        std::string failed_robot;
        Millis failed_at = -1;
        for (const auto& r : e.log()) {
            if (r["kind"] == "adaptation" && r["adaptation"] == kind) id = r["id"];
            if (r["kind"] == "robot_failed") {
                failed_robot = r["robot"];
                failed_at = r["t"];
            }
        }
        std::vector<std::string> chain;
        bool reused = false;
        for (const auto& r : e.log()) {
            if (r["kind"] == "module" && r.value("cause", "") == id) {
                std::string m = r["module"];
                if (std::find(chain.begin(), chain.end(), m) == chain.end()) chain.push_back(m);
            }
            if (failed_at >= 0 && r["t"].get<Millis>() >= failed_at) {
                if (r["kind"] == "subtask_started") {
                    for (const auto& x : r["robots"]) reused = reused || x == failed_robot;
                }
                if (r["kind"] == "module" && r.value("op", "") == "dispatch") {
                    for (const auto& u : r["units"]) {
                        for (const auto& x : u["robots"]) reused = reused || x == failed_robot;
                    }
                }
            }
        }
        bool ok = !id.empty() && chain == sim::adaptation_route(kind) && verdict_of(e) == "accepting" && !reused;
        if (kind == "robot_failure") ok = ok && failed_at >= 0;
        if (ok) ++good;
        else why += " " + kind;
    }
    return {good == sim::adaptation_kinds().size(),
            std::to_string(good) + "/" + std::to_string(sim::adaptation_kinds().size()) + " kinds routed and accepting" +
                (why.empty() ? "" : "; failing:" + why)};
}

Outcome determinism() {
    auto sc = scenario("mini_plant.json");
    std::string first;
    std::size_t same = 0;
    for (int i = 0; i < 20; ++i) {
        sim::EngineOptions eo;
        eo.seed = 42;
        sim::Engine e(sc, eo);
        e.run();
        if (i == 0) first = e.log_jsonl();
        same += e.log_jsonl() == first ? 1 : 0;
    }
    return {same == 20, std::to_string(same) + "/20 byte-identical logs"};
}

Outcome log_replay() {
    fs::path dir = fs::path(g_data) / "logs";
    auto index = json::parse(service::read_text((dir / "index.json").string()));
    std::size_t ok = 0, monitor_bad = 0, total = 0;
    std::string why;
    for (const auto& e : index) {
        ++total;
        std::string text = service::read_text((dir / e["log"].get<std::string>()).string());
        auto sc = service::load_scenario((dir / e["scenario"].get<std::string>()).string());
        auto rep = service::verify_log_text(text, &sc);
        for (const auto& v : rep.violations) {
            if (v.kind == "verdict" || v.kind == "precedence" || v.kind == "sync") ++monitor_bad;
        }
        if (rep.ok()) ++ok;
        else why += " " + e["log"].get<std::string>();
    }
    std::ostringstream d;
    d << ok << "/" << total << " stored logs verified and replayed, " << monitor_bad << " monitor violations";
    if (!why.empty()) d << "; failing:" << why;
    return {total > 0 && ok == total && monitor_bad == 0, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
    g_data = argc > 1 ? argv[1] : SWARM_DATA_DIR;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"ltl-nba-agreement", ltl_agreement},
        {"search-optimality", search_optimality},
        {"milp-exactness", milp_exactness},
        {"rolling-horizon-speed", rolling_speed},
        {"end-to-end-ordering", ordering_guarantee},
        {"adaptation-coverage", adaptation_coverage},
        {"determinism", determinism},
        {"log-replay", log_replay},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
