#include "swarmplan/service/run_log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "swarmplan/automaton/rposet.hpp"
#include "swarmplan/ltl/parse.hpp"
#include "swarmplan/ltl/translate.hpp"
#include "swarmplan/monitor/sync.hpp"
#include "swarmplan/monitor/tracker.hpp"
#include "swarmplan/sim/engine.hpp"

namespace swarm::service {

using nlohmann::json;

std::vector<json> parse_jsonl(const std::string& text) {
    std::vector<json> out;
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw std::invalid_argument("line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

std::vector<json> read_jsonl(const std::string& path) { return parse_jsonl(read_text(path)); }

json VerifyReport::to_json() const {
    json v = json::array();
    for (const auto& x : violations) v.push_back({{"kind", x.kind}, {"detail", x.detail}});
    json j = {{"records", records}, {"verdicts", verdicts}, {"violations", v},
              {"monitor_violations", violations.size()}, {"ok", ok()}};
    if (replay_identical) {
        j["replay_identical"] = *replay_identical;
        if (!replay_detail.empty()) j["replay_detail"] = replay_detail;
    }
    return j;
}

namespace {

struct MissionReplay {
    std::map<std::string, std::string> tasks;
    automaton::RPoset poset;
    std::unique_ptr<monitor::MissionTracker> tracker;
};

struct UnitRecord {
    std::string task;
    std::vector<std::string> robots;
    Millis start = 0;
    std::optional<Millis> end;
};

}  // namespace

VerifyReport verify_log(const std::vector<json>& log) {
    VerifyReport rep;
    rep.records = log.size();
    auto bad = [&](const std::string& kind, const std::string& detail) { rep.violations.push_back({kind, detail}); };
    if (log.empty() || log.front().value("kind", "") != "header") {
        bad("format", "log does not start with a header record");
        return rep;
    }
    std::map<std::string, MissionReplay> missions;
    std::map<std::string, UnitRecord> units;
    std::map<std::string, Millis> failed_at;
    std::map<std::string, double> moved;
    const json* end = nullptr;
    Millis last_t = 0;

    for (std::size_t i = 0; i < log.size(); ++i) {
        const json& r = log[i];
        std::string kind = r.value("kind", "");
        Millis t = r.value("t", Millis{0});
        std::string where = "record " + std::to_string(i + 1);
        if (t < last_t) bad("format", where + " goes back in time");
        last_t = std::max(last_t, t);
        try {
            if (kind == "mission") {
                MissionReplay m;
                m.tasks = r.at("tasks").get<std::map<std::string, std::string>>();
                std::vector<std::string> syms;
                for (const auto& [s, _] : m.tasks) syms.push_back(s);
                ltl::TranslateOptions o;
                o.extra_propositions = syms;
                auto nba = std::make_shared<const automaton::Nba>(
                    ltl::translate_to_nba(ltl::parse_ltl(r.at("ltl").get<std::string>()), o));
                m.poset = automaton::extract_rposet(*nba, syms);
                std::set<std::pair<std::string, std::string>> logged;
                for (const auto& p : r.at("precedence")) logged.emplace(p.at(0).get<std::string>(), p.at(1).get<std::string>());
                if (logged != m.poset.precedence) {
                    bad("precedence", "mission " + r.at("name").get<std::string>() + " logs a different task order");
                }
                m.tracker = std::make_unique<monitor::MissionTracker>(
                    r.at("name").get<std::string>(), nba, std::set<std::string>(syms.begin(), syms.end()));
                missions[r.at("name").get<std::string>()] = std::move(m);
            } else if (kind == "task_completed") {
                auto it = missions.find(r.at("mission").get<std::string>());
                if (it == missions.end()) {
                    bad("format", where + " completes a task of an unknown mission");
                    continue;
                }
                auto v = it->second.tracker->observe(t, {r.at("symbol").get<std::string>()});
                if (v == monitor::Verdict::Violated || v == monitor::Verdict::Unreachable) {
                    bad("verdict", "mission " + it->first + " is " + monitor::verdict_name(v) + " after " +
                                       r.at("task").get<std::string>());
                }
            } else if (kind == "observe") {
                auto it = missions.find(r.at("mission").get<std::string>());
                if (it == missions.end()) {
                    bad("format", where + " observes an unknown mission");
                    continue;
                }
                std::string mine = monitor::verdict_name(it->second.tracker->verdict());
                if (mine != r.at("verdict").get<std::string>()) {
                    bad("verdict", where + ": logged " + r.at("verdict").get<std::string>() + ", replayed " + mine);
                }
                std::size_t d = it->second.tracker->distance();
                const json& ld = r.at("distance");
                bool same = ld.is_null() ? d == automaton::kInfiniteDistance : ld.get<std::size_t>() == d;
                if (!same) bad("verdict", where + ": logged distance differs from the replay");
            } else if (kind == "subtask_started") {
                UnitRecord u;
                u.task = r.at("task").get<std::string>();
                u.robots = r.at("robots").get<std::vector<std::string>>();
                u.start = t;
                for (const auto& rb : u.robots) {
                    auto f = failed_at.find(rb);
                    if (f != failed_at.end()) bad("failed_robot", rb + " starts " + r.at("unit").get<std::string>() + " after failing");
                }
                units[r.at("unit").get<std::string>()] = u;
            } else if (kind == "subtask_completed") {
                auto it = units.find(r.at("unit").get<std::string>());
                if (it == units.end()) {
                    bad("format", where + " completes a unit that never started");
                    continue;
                }
                it->second.end = t;
            } else if (kind == "subtask_aborted") {
                units.erase(r.at("unit").get<std::string>());
            } else if (kind == "robot_failed") {
                failed_at[r.at("robot").get<std::string>()] = t;
            } else if (kind == "travel") {
                if (failed_at.count(r.at("robot").get<std::string>())) {
                    bad("failed_robot", r.at("robot").get<std::string>() + " travels after failing");
                }
            } else if (kind == "module" && r.value("op", "") == "dispatch") {
                for (const auto& u : r.at("units")) {
                    for (const auto& rb : u.at("robots")) {
                        if (failed_at.count(rb.get<std::string>())) {
                            bad("failed_robot", rb.get<std::string>() + " assigned " + u.at("unit").get<std::string>() +
                                                    " after failing");
                        }
                    }
                }
            } else if (kind == "move") {
                moved[r.at("robot").get<std::string>()] += r.at("length_m").get<double>();
            } else if (kind == "end") {
                end = &r;
            }
        } catch (const json::exception& e) {
            bad("format", where + ": " + e.what());
        } catch (const std::exception& e) {
            bad("format", where + ": " + e.what());
        }
    }

    for (const auto& [name, m] : missions) rep.verdicts[name] = monitor::verdict_name(m.tracker->verdict());
    if (!end) {
        bad("end", "log has no end record");
    } else {
        for (const auto& [name, m] : missions) {
            if (!m.tracker->complete()) bad("end", "mission " + name + " did not complete");
            auto lm = end->value("missions", json::object());
            if (!lm.contains(name) || lm[name].value("verdict", "") != rep.verdicts[name]) {
                bad("verdict", "end record disagrees on mission " + name);
            }
        }
        auto dist = end->value("distance_m", json::object());
        for (const auto& [rb, d] : dist.items()) {
            double sum = moved.count(rb) ? moved[rb] : 0.0;
            if (std::abs(sum - d.get<double>()) > 1e-9) {
                bad("distance", rb + " odometer " + std::to_string(d.get<double>()) + " vs segments " + std::to_string(sum));
            }
        }
    }

    // Per-robot overlap and synchronisation over finished units.
    std::map<std::string, std::vector<std::pair<Millis, Millis>>> per_robot;
    monitor::ObservedSchedule sched;
    std::vector<monitor::SyncRule> rules;
    for (const auto& [id, u] : units) {
        Millis e = u.end.value_or(last_t);
        for (const auto& rb : u.robots) per_robot[rb].push_back({u.start, e});
        if (!u.end) continue;
        for (const auto& rb : u.robots) {
            sched[id][rb] = {u.start, e};
            auto& task = sched[u.task];
            auto it = task.find(rb);
            if (it == task.end()) {
                task[rb] = {u.start, e};
            } else {
                it->second.start_ms = std::min(it->second.start_ms, u.start);
                it->second.end_ms = std::max(it->second.end_ms, e);
            }
        }
        if (u.robots.size() > 1) rules.push_back({monitor::SyncKind::Simultaneous, id, id});
    }
    for (auto& [rb, iv] : per_robot) {
        std::sort(iv.begin(), iv.end());
        for (std::size_t i = 1; i < iv.size(); ++i) {
            if (iv[i].first < iv[i - 1].second) {
                bad("overlap", rb + " works two units at " + std::to_string(iv[i].first));
            }
        }
    }
    for (const auto& [_, m] : missions) {
        auto r = monitor::precedence_rules(m.poset, m.tasks);
        rules.insert(rules.end(), r.begin(), r.end());
    }
    for (const auto& v : monitor::check_sync(rules, sched)) bad("sync", v.detail);
    return rep;
}

std::vector<sim::Intervention> logged_interventions(const std::vector<json>& log) {
    std::vector<sim::Intervention> out;
    for (const auto& r : log) {
        if (r.value("kind", "") != "intervention") continue;
        sim::Intervention iv;
        iv.time_ms = r.at("t").get<Millis>();
        iv.kind = r.at("intervention").get<std::string>();
        iv.payload = r.at("payload");
        out.push_back(std::move(iv));
    }
    return out;
}

VerifyReport verify_log_text(const std::string& text, const sim::Scenario* sc) {
    VerifyReport rep;
    std::vector<json> log;
    try {
        log = parse_jsonl(text);
    } catch (const std::exception& e) {
        rep.violations.push_back({"format", e.what()});
        return rep;
    }
    rep = verify_log(log);
    if (!sc || log.empty()) return rep;
    const json& h = log.front();
    sim::EngineOptions o;
    o.seed = h.value("seed", std::uint64_t{1});
    o.human = h.value("human", true);
    try {
        sim::Engine e(*sc, o);
        for (const auto& iv : logged_interventions(log)) e.schedule(iv);
        e.run();
        std::string fresh = e.log_jsonl();
        rep.replay_identical = fresh == text;
        if (!*rep.replay_identical) {
            auto a = parse_jsonl(fresh);
            std::size_t i = 0;
            while (i < a.size() && i < log.size() && a[i] == log[i]) ++i;
            rep.replay_detail = "first difference at record " + std::to_string(i + 1);
        }
    } catch (const std::exception& e) {
        rep.replay_identical = false;
        rep.replay_detail = e.what();
    }
    return rep;
}

}  // namespace swarm::service
