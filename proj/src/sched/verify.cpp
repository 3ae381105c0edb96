#include "swarmplan/sched/verify.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace swarm::sched {

std::vector<Violation> verify(const SchedInstance& inst, const Assignment& a) {
    std::vector<Violation> out;
    const std::size_t n = inst.subtasks.size();
    const std::size_t m = inst.robots.size();
    if (a.robots.size() != n || a.start_ms.size() != n || a.sequence.size() != m) {
        out.push_back({"assignment", "assignment shape does not match the instance"});
        return out;
    }
    auto end = [&](std::size_t s) { return a.start_ms[s] + inst.subtasks[s].duration_ms; };
    double risk = 0.0;
    Millis makespan = n == 0 ? inst.now : 0;
    for (std::size_t s = 0; s < n; ++s) {
        const auto& t = inst.subtasks[s];
        const auto& rs = a.robots[s];
        std::set<std::size_t> uniq(rs.begin(), rs.end());
        if (uniq.size() != rs.size() || static_cast<int>(rs.size()) != t.robots) {
            out.push_back({"assignment", t.id + " has " + std::to_string(rs.size()) + " robots, needs " +
                                             std::to_string(t.robots)});
        }
        for (std::size_t r : rs) {
            if (r >= m) {
                out.push_back({"assignment", t.id + " names robot index " + std::to_string(r)});
                continue;
            }
            if (!inst.robots[r].skills.count(t.skill)) {
                out.push_back({"capability", inst.robots[r].id + " cannot " + t.skill + " for " + t.id});
            }
            if (a.start_ms[s] < inst.robots[r].available_ms) {
                out.push_back({"release", t.id + " starts before " + inst.robots[r].id + " is free"});
            }
        }
        for (const auto& pid : t.pinned) {
            auto r = inst.robot_index(pid);
            if (!r || !uniq.count(*r)) out.push_back({"pinned", t.id + " is not bound to pinned robot " + pid});
        }
        if (a.start_ms[s] < inst.now || a.start_ms[s] < t.release_ms) {
            out.push_back({"release", t.id + " starts at " + std::to_string(a.start_ms[s]) + " before its release"});
        }
        risk += (1.0 - t.p_success) * static_cast<double>(rs.size());
        makespan = std::max(makespan, end(s));
    }
    for (const auto& [p, q] : inst.precedence) {
        if (a.start_ms[q] < end(p)) {
            out.push_back({"precedence", inst.subtasks[q].id + " starts at " + std::to_string(a.start_ms[q]) +
                                             " before " + inst.subtasks[p].id + " ends at " + std::to_string(end(p))});
        }
    }
    if (risk > inst.epsilon + 1e-12) {
        out.push_back({"budget", "risk " + std::to_string(risk) + " exceeds " + std::to_string(inst.epsilon)});
    }
    for (std::size_t r = 0; r < m; ++r) {
        const auto& seq = a.sequence[r];
        std::set<std::size_t> in_seq(seq.begin(), seq.end());
        if (in_seq.size() != seq.size()) out.push_back({"sequence", inst.robots[r].id + " repeats a subtask"});
        for (std::size_t s = 0; s < n; ++s) {
            bool bound = std::find(a.robots[s].begin(), a.robots[s].end(), r) != a.robots[s].end();
            if (bound != (in_seq.count(s) > 0)) {
                out.push_back({"sequence", inst.robots[r].id + " sequence disagrees with binding of " + inst.subtasks[s].id});
            }
        }
        // y(r, s, s') = 1 for consecutive entries: s' >= s + d - M (1 - y).
        for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
            std::size_t s = seq[i], t = seq[i + 1];
            if (s >= n || t >= n) continue;
            if (a.start_ms[t] < end(s)) {
                out.push_back({"overlap", inst.robots[r].id + " runs " + inst.subtasks[t].id + " before " +
                                              inst.subtasks[s].id + " ends"});
            }
        }
        // Pairwise check independent of the listed order.
        for (std::size_t i = 0; i < seq.size(); ++i) {
            for (std::size_t j = i + 1; j < seq.size(); ++j) {
                std::size_t s = seq[i], t = seq[j];
                if (s >= n || t >= n) continue;
                bool apart = end(s) <= a.start_ms[t] || end(t) <= a.start_ms[s];
                if (!apart && i + 1 != j) {
                    out.push_back({"overlap", inst.robots[r].id + " overlaps " + inst.subtasks[s].id + " and " +
                                                  inst.subtasks[t].id});
                }
            }
        }
    }
    if (a.makespan_ms != makespan) {
        out.push_back({"assignment", "reported makespan " + std::to_string(a.makespan_ms) + " differs from " +
                                         std::to_string(makespan)});
    }
    return out;
}

nlohmann::json instance_to_json(const SchedInstance& inst) {
    nlohmann::json j;
    j["now_ms"] = inst.now;
    j["epsilon"] = inst.epsilon;
    j["big_m_ms"] = inst.big_m;
    j["robots"] = nlohmann::json::array();
    for (const auto& r : inst.robots) {
        j["robots"].push_back({{"id", r.id},
                               {"skills", r.skills},
                               {"available_ms", r.available_ms},
                               {"x_mm", std::llround(r.position.x * 1000)},
                               {"y_mm", std::llround(r.position.y * 1000)},
                               {"velocity_mm_s", std::llround(r.velocity * 1000)}});
    }
    j["subtasks"] = nlohmann::json::array();
    for (const auto& s : inst.subtasks) {
        j["subtasks"].push_back({{"id", s.id},
                                 {"skill", s.skill},
                                 {"robots", s.robots},
                                 {"duration_ms", s.duration_ms},
                                 {"p_success_ppm", std::llround(s.p_success * 1e6)},
                                 {"release_ms", s.release_ms},
                                 {"pinned", s.pinned}});
    }
    j["precedence"] = nlohmann::json::array();
    for (const auto& [a, b] : inst.precedence) j["precedence"].push_back({inst.subtasks[a].id, inst.subtasks[b].id});
    return j;
}

SchedInstance instance_from_json(const nlohmann::json& j) {
    SchedInstance inst;
    inst.now = j.value("now_ms", Millis{0});
    inst.epsilon = j.value("epsilon", 0.3);
    inst.big_m = j.value("big_m_ms", Millis{0});
    for (const auto& r : j.at("robots")) {
        SchedRobot x;
        x.id = r.at("id").get<std::string>();
        x.skills = r.at("skills").get<std::set<std::string>>();
        x.available_ms = r.value("available_ms", Millis{0});
        x.position = {r.value("x_mm", 0LL) / 1000.0, r.value("y_mm", 0LL) / 1000.0};
        x.velocity = r.value("velocity_mm_s", 2000LL) / 1000.0;
        inst.robots.push_back(std::move(x));
    }
    for (const auto& s : j.at("subtasks")) {
        SchedSubtask x;
        x.id = s.at("id").get<std::string>();
        x.skill = s.at("skill").get<std::string>();
        x.robots = s.value("robots", 1);
        x.duration_ms = s.at("duration_ms").get<Millis>();
        x.p_success = s.value("p_success_ppm", 1000000LL) / 1e6;
        x.release_ms = s.value("release_ms", inst.now);
        if (s.contains("pinned")) x.pinned = s.at("pinned").get<std::vector<std::string>>();
        inst.subtasks.push_back(std::move(x));
    }
    if (j.contains("precedence")) {
        for (const auto& e : j.at("precedence")) {
            auto a = inst.subtask_index(e.at(0).get<std::string>());
            auto b = inst.subtask_index(e.at(1).get<std::string>());
            if (!a || !b) throw std::invalid_argument("precedence names an unknown subtask");
            inst.precedence.emplace_back(*a, *b);
        }
    }
    if (inst.big_m == 0) {
        std::vector<Vec2> pts;
        for (const auto& r : inst.robots) pts.push_back(r.position);
        inst.big_m = big_m_bound(inst.now, inst.subtasks, pts, 2.0);
    }
    return inst;
}

nlohmann::json assignment_to_json(const SchedInstance& inst, const Assignment& a) {
    nlohmann::json j;
    j["makespan_ms"] = a.makespan_ms;
    j["optimal"] = a.optimal;
    j["subtasks"] = nlohmann::json::array();
    for (std::size_t s = 0; s < inst.subtasks.size(); ++s) {
        std::vector<std::string> rs;
        for (std::size_t r : a.robots[s]) rs.push_back(inst.robots[r].id);
        j["subtasks"].push_back({{"id", inst.subtasks[s].id},
                                 {"robots", rs},
                                 {"start_ms", a.start_ms[s]},
                                 {"end_ms", a.end_ms(inst, s)}});
    }
    return j;
}

}  // namespace swarm::sched
