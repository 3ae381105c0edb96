#include "swarmplan/service/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "swarmplan/automaton/rposet.hpp"
#include "swarmplan/ltl/parse.hpp"
#include "swarmplan/ltl/translate.hpp"
#include "swarmplan/sched/solver.hpp"
#include "swarmplan/sched/verify.hpp"
#include "swarmplan/search/mission_search.hpp"
#include "swarmplan/service/run_log.hpp"
#include "swarmplan/service/scenario_file.hpp"
#include "swarmplan/sim/engine.hpp"

namespace fs = std::filesystem;

namespace swarm::service {

using nlohmann::json;

namespace {

std::string safe_name(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out.empty() ? "mission" : out;
}

}  // namespace

std::vector<std::string> check_trace(const std::vector<sim::Intervention>& trace, const sim::Scenario& sc) {
    std::set<std::string> robots, features;
    for (const auto& r : sc.robots) robots.insert(r.id);
    for (const auto& f : sc.features) features.insert(f.id);
    for (const auto& e : sc.events) {
        if (e.payload.contains("feature") && e.payload["feature"].contains("id")) {
            features.insert(e.payload["feature"]["id"].get<std::string>());
        }
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& iv = trace[i];
        std::string at = "intervention " + std::to_string(i + 1) + " (" + iv.kind + ")";
        if (!iv.time_ms) out.push_back(at + ": scripted interventions need time_ms");
        if (iv.payload.contains("robot") && !robots.count(iv.payload["robot"].get<std::string>())) {
            out.push_back(at + ": unknown robot '" + iv.payload["robot"].get<std::string>() + "'");
        }
        if (iv.payload.contains("feature") && !features.count(iv.payload["feature"].get<std::string>())) {
            out.push_back(at + ": unknown feature '" + iv.payload["feature"].get<std::string>() + "'");
        }
    }
    return out;
}

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
    sim::Scenario sc;
    try {
        sc = load_scenario(a.scenario);
    } catch (const ScenarioError& e) {
        err << e.to_json().dump(2) << "\n";
        return 2;
    }
    std::vector<sim::Intervention> trace;
    if (!a.interventions.empty()) {
        try {
            trace = sim::parse_intervention_trace(read_text(a.interventions));
        } catch (const std::exception& e) {
            err << json{{"error", "trace_invalid"}, {"diagnostics", {{{"message", e.what()}}}}}.dump(2) << "\n";
            return 2;
        }
        auto probs = check_trace(trace, sc);
        if (!probs.empty()) {
            json d = json::array();
            for (const auto& p : probs) d.push_back({{"message", p}});
            err << json{{"error", "trace_invalid"}, {"diagnostics", d}}.dump(2) << "\n";
            return 2;
        }
    }
    sim::EngineOptions o;
    o.seed = a.seed;
    o.human = a.human;
    std::unique_ptr<sim::Engine> e;
    try {
        e = std::make_unique<sim::Engine>(sc, o);
        for (const auto& iv : trace) e->schedule(iv);
    } catch (const std::invalid_argument& x) {
        err << json{{"error", "scenario_invalid"}, {"diagnostics", {{{"message", x.what()}}}}}.dump(2) << "\n";
        return 2;
    }
    e->run();
    try {
        if (!a.out.empty()) {
            fs::create_directories(a.out);
            fs::path d(a.out);
            write_text((d / "log.jsonl").string(), e->log_jsonl());
            write_text((d / "metrics.json").string(), e->metrics().to_json().dump(2) + "\n");
            write_text((d / "gantt_tasks.csv").string(), e->gantt_csv(false));
            write_text((d / "gantt_subtasks.csv").string(), e->gantt_csv(true));
            write_text((d / "automata.json").string(), e->automata_json().dump(2) + "\n");
            for (const auto* t : e->trackers()) write_text((d / (safe_name(t->mission()) + ".dot")).string(), t->to_dot());
            write_text((d / "interventions.jsonl").string(), sim::write_intervention_trace(e->applied()));
        }
    } catch (const std::exception& x) {
        err << x.what() << "\n";
        return 1;
    }
    bool complete = true;
    json summary = {{"scenario", sc.name}, {"seed", a.seed}, {"makespan_ms", e->metrics().makespan_ms},
                    {"tasks_completed", e->metrics().tasks_completed}, {"tasks_total", e->metrics().tasks_total},
                    {"sync_violations", e->sync_violations().size()}};
    for (const auto* t : e->trackers()) {
        summary["missions"][t->mission()] = monitor::verdict_name(t->verdict());
        complete = complete && t->complete();
    }
    out << summary.dump() << "\n";
    return complete ? 0 : 3;
}

int cmd_verify(const std::string& log_path, const std::string& scenario_path, std::ostream& out, std::ostream& err) {
    std::string text;
    try {
        text = read_text(log_path);
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return 1;
    }
    std::optional<sim::Scenario> sc;
    if (!scenario_path.empty()) {
        try {
            sc = load_scenario(scenario_path);
        } catch (const ScenarioError& e) {
            err << e.to_json().dump(2) << "\n";
            return 2;
        }
    }
    auto rep = verify_log_text(text, sc ? &*sc : nullptr);
    out << rep.to_json().dump(2) << "\n";
    return rep.ok() ? 0 : 3;
}

// ---- bench ----

namespace {

Millis sched_lower_bound(const sched::SchedInstance& in) {
    const std::size_t n = in.subtasks.size();
    if (n == 0) return in.now;
    std::vector<std::vector<std::size_t>> preds(n);
    for (const auto& [a, b] : in.precedence) preds[b].push_back(a);
    std::vector<Millis> est(n, -1);
    std::function<Millis(std::size_t)> go = [&](std::size_t s) {
        if (est[s] >= 0) return est[s];
        Millis t = std::max(in.now, in.subtasks[s].release_ms);
        for (std::size_t p : preds[s]) t = std::max(t, go(p) + in.subtasks[p].duration_ms);
        return est[s] = t;
    };
    Millis lb = in.now;
    double work = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        lb = std::max(lb, go(s) + in.subtasks[s].duration_ms);
        work += static_cast<double>(in.subtasks[s].duration_ms) * in.subtasks[s].robots;
    }
    if (!in.robots.empty()) {
        Millis ready = std::numeric_limits<Millis>::max();
        for (const auto& r : in.robots) ready = std::min(ready, std::max(in.now, r.available_ms));
        lb = std::max(lb, ready + static_cast<Millis>(std::ceil(work / static_cast<double>(in.robots.size()))));
    }
    return lb;
}

search::Problem search_problem(const json& j) {
    std::vector<search::Mission> ms;
    for (const auto& m : j.at("missions")) {
        search::Mission x;
        x.name = m.at("name").get<std::string>();
        std::vector<std::string> syms;
        for (const auto& s : m.at("sites")) {
            search::TaskSite site;
            site.symbol = s.at("symbol").get<std::string>();
            site.position = {s.at("position").at(0).get<double>(), s.at("position").at(1).get<double>()};
            site.service_ms = s.value("service_ms", Millis{0});
            syms.push_back(site.symbol);
            x.sites.push_back(site);
        }
        ltl::TranslateOptions o;
        o.extra_propositions = syms;
        x.nba = ltl::translate_to_nba(ltl::parse_ltl(m.at("ltl").get<std::string>()), o);
        x.poset = automaton::extract_rposet(x.nba, syms);
        ms.push_back(std::move(x));
    }
    std::vector<search::GroupProfile> gs;
    for (const auto& g : j.at("groups")) {
        search::GroupProfile p;
        p.id = g.at("id").get<int>();
        p.capabilities = g.at("capabilities").get<std::set<std::string>>();
        p.home = {g.at("home").at(0).get<double>(), g.at("home").at(1).get<double>()};
        p.velocity = g.value("velocity", 2.0);
        p.members = g.value("members", std::vector<std::string>{});
        gs.push_back(std::move(p));
    }
    return search::Problem(std::move(ms), std::move(gs));
}

BenchRow bench_one(const std::string& name, const json& j) {
    BenchRow row;
    row.name = name;
    row.kind = j.at("kind").get<std::string>();
    if (row.kind == "sched") {
        auto in = sched::instance_from_json(j.at("instance"));
        row.size = std::to_string(in.subtasks.size()) + "x" + std::to_string(in.robots.size());
        sched::SolverOptions so;
        so.node_limit = j.value("node_limit", so.node_limit);
        auto t0 = std::chrono::steady_clock::now();
        auto a = sched::solve(in, so);
        row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        row.objective = static_cast<double>(a.makespan_ms);
        row.bound = static_cast<double>(sched_lower_bound(in));
        row.optimal = a.optimal;
        row.gap = a.optimal || row.objective <= 0 ? 0.0 : (row.objective - row.bound) / row.objective;
        auto v = sched::verify(in, a);
        row.note = v.empty() ? "verified" : "verify failed: " + v.front().constraint;
        if (j.contains("expected_makespan_ms")) {
            Millis want = j["expected_makespan_ms"].get<Millis>();
            if (a.makespan_ms != want) row.note += "; expected " + std::to_string(want);
        }
    } else if (row.kind == "search") {
        auto p = search_problem(j);
        std::size_t tasks = 0;
        for (const auto& m : p.missions()) tasks += m.sites.size();
        row.size = std::to_string(tasks) + "x" + std::to_string(p.groups().size());
        search::SearchParams sp;
        sp.width = j.value("width", sp.width);
        sp.budget = j.value("budget", sp.budget);
        auto t0 = std::chrono::steady_clock::now();
        auto r = search::search(p, sp);
        row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        row.objective = r.value;
        search::SearchParams wide = sp;
        wide.width = 1000000;
        wide.budget = 2000000;
        auto ref = search::search(p, wide);
        row.bound = ref.value;
        row.optimal = false;
        row.gap = ref.value > 0 ? (r.value - ref.value) / ref.value : 0.0;
        row.note = r.complete ? "complete" : "partial";
    } else {
        throw std::invalid_argument("unknown bench kind '" + row.kind + "'");
    }
    return row;
}

}  // namespace

std::vector<BenchRow> run_bench(const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<BenchRow> rows;
    for (const auto& f : files) {
        std::string name = f.stem().string();
        try {
            rows.push_back(bench_one(name, json::parse(read_text(f.string()))));
        } catch (const std::exception& e) {
            BenchRow r;
            r.name = name;
            r.kind = "error";
            r.note = e.what();
            rows.push_back(r);
        }
    }
    return rows;
}

std::string format_bench(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-28s %-7s %-7s %12s %14s %14s %-8s %8s  %s\n", "instance", "kind", "size",
                  "runtime_ms", "objective", "bound", "optimal", "gap", "note");
    os << buf;
    double total = 0, worst = 0;
    std::size_t ok = 0;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-28s %-7s %-7s %12.3f %14.1f %14.1f %-8s %8.4f  %s\n", r.name.c_str(),
                      r.kind.c_str(), r.size.c_str(), r.runtime_ms, r.objective, r.bound, r.optimal ? "yes" : "no",
                      r.gap, r.note.c_str());
        os << buf;
        total += r.runtime_ms;
        worst = std::max(worst, r.runtime_ms);
        ok += r.kind != "error" ? 1 : 0;
    }
    std::snprintf(buf, sizeof buf, "summary instances=%zu solved=%zu total_ms=%.3f max_ms=%.3f\n", rows.size(), ok, total,
                  worst);
    os << buf;
    return os.str();
}

json bench_json(const std::vector<BenchRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"instance", r.name}, {"kind", r.kind}, {"size", r.size}, {"runtime_ms", r.runtime_ms},
                       {"objective", r.objective}, {"bound", r.bound}, {"optimal", r.optimal}, {"gap", r.gap},
                       {"note", r.note}});
    }
    return {{"rows", out}, {"summary", {{"instances", rows.size()}}}};
}

int cmd_bench(const std::string& dir, bool as_json, std::ostream& out, std::ostream& err) {
    if (!fs::is_directory(dir)) {
        err << "corpus directory '" << dir << "' not found\n";
        return 1;
    }
    auto rows = run_bench(dir);
    out << (as_json ? bench_json(rows).dump(2) + "\n" : format_bench(rows));
    return 0;
}

}  // namespace swarm::service
