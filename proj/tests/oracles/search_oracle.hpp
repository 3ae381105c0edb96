// Exhaustive reference for the mission search: every sequence of
// (group, task) assignments allowed by capabilities, the mission posets and
// the automata, scored with its own timing pass.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "swarmplan/automaton/rposet.hpp"
#include "swarmplan/ltl/parse.hpp"
#include "swarmplan/ltl/translate.hpp"
#include "swarmplan/search/mission_search.hpp"

namespace oracle {

struct SearchCase {
    std::vector<std::string> formulas;  // one per mission
    swarm::search::Problem problem;
};

inline swarm::search::Mission make_mission(const std::string& name, const std::string& ltl,
                                           std::vector<swarm::search::TaskSite> sites) {
    std::vector<std::string> syms;
    for (const auto& s : sites) syms.push_back(s.symbol);
    swarm::ltl::TranslateOptions o;
    o.extra_propositions = syms;
    swarm::search::Mission m;
    m.name = name;
    m.nba = swarm::ltl::translate_to_nba(swarm::ltl::parse_ltl(ltl), o);
    m.poset = swarm::automaton::extract_rposet(m.nba, syms);
    m.sites = std::move(sites);
    return m;
}

// Up to 6 tasks over 1 or 2 missions and 1 to 3 groups. Every task has at
// least one capable group.
inline SearchCase random_search_case(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](int lo, int hi) { return static_cast<int>(lo + rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
    int tasks = pick(1, 6);
    int missions = tasks >= 2 && pick(0, 2) == 0 ? 2 : 1;
    int groups = pick(1, 3);
    std::vector<std::vector<std::string>> syms(missions);
    for (int t = 0; t < tasks; ++t) syms[t % missions].push_back("t" + std::to_string(t));

    std::vector<std::string> formulas;
    std::vector<swarm::search::Mission> ms;
    for (int k = 0; k < missions; ++k) {
        auto& s = syms[k];
        std::vector<std::string> order = s;
        std::shuffle(order.begin(), order.end(), rng);
        std::string f;
        auto add = [&](const std::string& c) { f += (f.empty() ? "" : " && ") + c; };
        std::size_t i = 0;
        if (s.size() >= 2 && pick(0, 3) == 0) {
            add("(<>" + order[0] + " || <>" + order[1] + ")");
            i = 2;
        }
        for (; i < s.size(); ++i) add("<>" + order[i]);
        for (std::size_t a = 0; a + 1 < order.size(); ++a) {
            if (pick(0, 2) == 0) add("(!" + order[a + 1] + " U " + order[a] + ")");
        }
        if (s.size() >= 3 && pick(0, 3) == 0) add("<>(" + order[0] + " && <>" + order.back() + ")");
        std::vector<swarm::search::TaskSite> sites;
        for (const auto& sym : s) {
            sites.push_back({sym, {static_cast<double>(pick(0, 60)), static_cast<double>(pick(0, 60))},
                             static_cast<swarm::Millis>(pick(1, 20) * 500)});
        }
        formulas.push_back(f);
        ms.push_back(make_mission("m" + std::to_string(k), f, sites));
    }

    std::vector<swarm::search::GroupProfile> gs(groups);
    for (int g = 0; g < groups; ++g) {
        gs[g].id = g + 1;
        gs[g].members = {"r" + std::to_string(g)};
        gs[g].home = {static_cast<double>(pick(0, 60)), static_cast<double>(pick(0, 60))};
        gs[g].velocity = static_cast<double>(pick(1, 4));
    }
    for (int t = 0; t < tasks; ++t) {
        std::string sym = "t" + std::to_string(t);
        bool any = false;
        for (auto& g : gs) {
            if (pick(0, 1) == 1) {
                g.capabilities.insert(sym);
                any = true;
            }
        }
        if (!any) gs[static_cast<std::size_t>(pick(0, groups - 1))].capabilities.insert(sym);
    }
    for (auto& g : gs) {
        if (g.capabilities.empty()) g.capabilities.insert("t" + std::to_string(pick(0, tasks - 1)));
    }
    return SearchCase{formulas, swarm::search::Problem(std::move(ms), std::move(gs))};
}

struct BruteResult {
    double value = std::numeric_limits<double>::infinity();
    std::size_t complete_nodes = 0;
};

class BruteForce {
public:
    BruteForce(const swarm::search::Problem& p, double eta1) : p_(p), eta1_(eta1) {
        for (std::size_t k = 0; k < p.missions().size(); ++k) {
            const auto& m = p.missions()[k];
            for (std::size_t s = 0; s < m.sites.size(); ++s) tasks_.push_back({k, s});
        }
        end_.assign(tasks_.size(), 0);
        done_.assign(tasks_.size(), 0);
        for (std::size_t k = 0; k < p.missions().size(); ++k) {
            const auto& a = p.missions()[k].nba;
            std::vector<char> r(a.size(), 0);
            for (auto q : a.initial()) r[q] = 1;
            reach_.push_back(r);
        }
        for (const auto& g : p.groups()) {
            pos_.push_back(g.home);
            finish_.push_back(0);
        }
        cost_.assign(p.groups().size(), 0);
    }

    BruteResult run() {
        res_ = {};
        if (all_accepting()) score();
        else dfs();
        return res_;
    }

private:
    struct Slot {
        std::size_t mission, site;
    };

    const std::string& sym(std::size_t t) const { return p_.missions()[tasks_[t].mission].sites[tasks_[t].site].symbol; }

    bool accepting(std::size_t k) const {
        const auto& a = p_.missions()[k].nba;
        for (std::size_t q = 0; q < a.size(); ++q) {
            if (reach_[k][q] && a.accepting(static_cast<swarm::automaton::StateId>(q))) return true;
        }
        return false;
    }

    bool all_accepting() const {
        for (std::size_t k = 0; k < reach_.size(); ++k) {
            if (!accepting(k)) return false;
        }
        return true;
    }

    std::vector<char> step(std::size_t k, const std::string& s) const {
        const auto& a = p_.missions()[k].nba;
        std::uint64_t letter = 0;
        for (std::size_t b = 0; b < a.propositions().size(); ++b) {
            if (a.propositions()[b] == s) letter |= std::uint64_t{1} << b;
        }
        std::vector<char> out(a.size(), 0);
        for (std::size_t q = 0; q < a.size(); ++q) {
            if (!reach_[k][q]) continue;
            for (const auto& t : a.transitions(static_cast<swarm::automaton::StateId>(q))) {
                if ((letter & t.guard.pos) == t.guard.pos && (letter & t.guard.neg) == 0) out[t.target] = 1;
            }
        }
        return out;
    }

    std::optional<std::size_t> task_index(std::size_t k, const std::string& s) const {
        for (std::size_t t = 0; t < tasks_.size(); ++t) {
            if (tasks_[t].mission == k && sym(t) == s) return t;
        }
        return std::nullopt;
    }

    void score() {
        swarm::Millis tmax = 0, csum = 0;
        for (auto f : finish_) tmax = std::max(tmax, f);
        for (auto c : cost_) csum += c;
        double v = static_cast<double>(tmax) / 1000.0 + eta1_ * (static_cast<double>(csum) / 1000.0);
        ++res_.complete_nodes;
        res_.value = std::min(res_.value, v);
    }

    void dfs() {
        for (std::size_t g = 0; g < p_.groups().size(); ++g) {
            const auto& grp = p_.groups()[g];
            for (std::size_t t = 0; t < tasks_.size(); ++t) {
                if (done_[t] || !grp.capabilities.count(sym(t))) continue;
                std::size_t k = tasks_[t].mission;
                const auto& poset = p_.missions()[k].poset;
                bool ok = true;
                swarm::Millis ready = finish_[g];
                for (const auto& [h, l] : poset.precedence) {
                    if (l == sym(t)) {
                        auto ht = task_index(k, h);
                        if (ht && !done_[*ht]) ok = false;
                        if (ht && done_[*ht]) ready = std::max(ready, end_[*ht]);
                    }
                    if (h == sym(t)) {
                        auto lt = task_index(k, l);
                        if (lt && done_[*lt]) ok = false;
                    }
                }
                if (!ok) continue;
                auto next = step(k, sym(t));
                if (std::find(next.begin(), next.end(), 1) == next.end()) continue;

                const auto& site = p_.missions()[k].sites[tasks_[t].site];
                double dx = site.position.x - pos_[g].x, dy = site.position.y - pos_[g].y;
                double metres = std::sqrt(dx * dx + dy * dy);
                swarm::Millis dur = static_cast<swarm::Millis>(std::llround(metres / grp.velocity * 1000.0)) + site.service_ms;

                auto saved_reach = reach_[k];
                auto saved_pos = pos_[g];
                auto saved_finish = finish_[g];
                reach_[k] = next;
                pos_[g] = site.position;
                end_[t] = ready + dur;
                finish_[g] = end_[t];
                cost_[g] += dur;
                done_[t] = 1;
                if (all_accepting()) score();
                else dfs();
                done_[t] = 0;
                cost_[g] -= dur;
                finish_[g] = saved_finish;
                pos_[g] = saved_pos;
                reach_[k] = saved_reach;
            }
        }
    }

    const swarm::search::Problem& p_;
    double eta1_;
    std::vector<Slot> tasks_;
    std::vector<swarm::Millis> end_;
    std::vector<char> done_;
    std::vector<std::vector<char>> reach_;
    std::vector<swarm::Vec2> pos_;
    std::vector<swarm::Millis> finish_;
    std::vector<swarm::Millis> cost_;
    BruteResult res_;
};

inline BruteResult brute_force_search(const swarm::search::Problem& p, double eta1) { return BruteForce(p, eta1).run(); }

}  // namespace oracle
