// Exhaustive scheduling oracle and a seeded instance generator.
//
// Enumerates every order in which the subtasks can be started together with
// every robot set for each one, placing each as early as its robots, preds
// and release allow. The only cut is a candidate whose running makespan
// already reaches the best complete one.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "swarmplan/sched/instance.hpp"

namespace oracle {

using swarm::Millis;
using swarm::sched::SchedInstance;

inline void subsets(const std::vector<std::size_t>& pool, int k, std::vector<std::vector<std::size_t>>& out) {
    std::vector<std::size_t> cur;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (static_cast<int>(cur.size()) == k) {
            out.push_back(cur);
            return;
        }
        if (i == pool.size()) return;
        cur.push_back(pool[i]);
        rec(i + 1);
        cur.pop_back();
        rec(i + 1);
    };
    rec(0);
}

inline Millis brute_force_makespan(const SchedInstance& in) {
    const std::size_t n = in.subtasks.size(), m = in.robots.size();
    if (n == 0) return in.now;
    std::vector<std::vector<std::vector<std::size_t>>> sets(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<std::size_t> cap;
        for (std::size_t r = 0; r < m; ++r) {
            if (in.robots[r].skills.count(in.subtasks[s].skill)) cap.push_back(r);
        }
        std::vector<std::vector<std::size_t>> all;
        subsets(cap, in.subtasks[s].robots, all);
        for (auto& rs : all) {
            bool pins_ok = true;
            for (const auto& pid : in.subtasks[s].pinned) {
                bool hit = false;
                for (std::size_t r : rs) hit = hit || in.robots[r].id == pid;
                pins_ok = pins_ok && hit;
            }
            if (pins_ok) sets[s].push_back(rs);
        }
    }
    std::vector<Millis> avail(m), end(n, -1);
    for (std::size_t r = 0; r < m; ++r) avail[r] = std::max(in.now, in.robots[r].available_ms);
    Millis best = std::numeric_limits<Millis>::max();
    std::function<void(std::size_t, Millis)> rec = [&](std::size_t placed, Millis span) {
        if (span >= best) return;
        if (placed == n) {
            best = span;
            return;
        }
        for (std::size_t s = 0; s < n; ++s) {
            if (end[s] >= 0) continue;
            Millis est = std::max(in.now, in.subtasks[s].release_ms);
            bool ready = true;
            for (auto [a, b] : in.precedence) {
                if (b != s) continue;
                if (end[a] < 0) ready = false;
                else est = std::max(est, end[a]);
            }
            if (!ready) continue;
            for (const auto& rs : sets[s]) {
                Millis st = est;
                for (std::size_t r : rs) st = std::max(st, avail[r]);
                Millis e = st + in.subtasks[s].duration_ms;
                std::vector<Millis> saved;
                for (std::size_t r : rs) {
                    saved.push_back(avail[r]);
                    avail[r] = e;
                }
                end[s] = e;
                rec(placed + 1, std::max(span, e));
                end[s] = -1;
                for (std::size_t i = 0; i < rs.size(); ++i) avail[rs[i]] = saved[i];
            }
        }
    };
    rec(0, 0);
    return best;
}

/// Feasible instance with n subtasks and m robots over skills a, b, c.
inline SchedInstance random_instance(std::uint64_t seed, std::size_t n, std::size_t m) {
    std::mt19937_64 rng(seed);
    auto uni = [&](std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng); };
    const std::vector<std::string> skills = {"a", "b", "c"};
    SchedInstance in;
    in.now = uni(0, 2) * 1000;
    in.epsilon = 0.3;
    for (std::size_t r = 0; r < m; ++r) {
        swarm::sched::SchedRobot x;
        x.id = "r" + std::to_string(r);
        for (const auto& k : skills) {
            if (uni(0, 1)) x.skills.insert(k);
        }
        if (x.skills.empty()) x.skills.insert(skills[uni(0, 2)]);
        x.available_ms = in.now + uni(0, 4) * 500;
        in.robots.push_back(x);
    }
    double risk = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        swarm::sched::SchedSubtask t;
        t.id = "s" + std::to_string(s);
        const auto& r = in.robots[uni(0, static_cast<std::int64_t>(m) - 1)];
        std::vector<std::string> own(r.skills.begin(), r.skills.end());
        t.skill = own[uni(0, static_cast<std::int64_t>(own.size()) - 1)];
        std::size_t cap = 0;
        for (const auto& q : in.robots) cap += q.skills.count(t.skill);
        t.robots = cap >= 2 && uni(0, 3) == 0 ? 2 : 1;
        t.duration_ms = uni(2, 30) * 500;
        t.release_ms = uni(0, 3) == 0 ? in.now + uni(1, 6) * 1000 : in.now;
        const double ps[] = {1.0, 0.98, 0.95};
        t.p_success = ps[uni(0, 2)];
        if (risk + (1.0 - t.p_success) * t.robots > in.epsilon) t.p_success = 1.0;
        risk += (1.0 - t.p_success) * t.robots;
        in.subtasks.push_back(t);
    }
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (uni(0, 99) < 20) in.precedence.emplace_back(a, b);
        }
    }
    std::vector<swarm::Vec2> pts(m);
    in.big_m = swarm::sched::big_m_bound(in.now, in.subtasks, pts, 2.0);
    return in;
}

/// The corpus used by the exactness checks: sizes cycle through 1..8
/// subtasks and 1..3 robots.
inline std::vector<SchedInstance> exactness_corpus(std::size_t count = 50) {
    std::vector<SchedInstance> out;
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t n = 1 + (i * 5 + i / 8) % 8;
        std::size_t m = 1 + i % 3;
        out.push_back(random_instance(1000 + i, n, m));
    }
    return out;
}

}  // namespace oracle
