#include "swarmplan/sched/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <unordered_map>

namespace swarm::sched {

bool Assignment::x(std::size_t robot, std::size_t subtask) const {
    const auto& rs = robots.at(subtask);
    return std::binary_search(rs.begin(), rs.end(), robot);
}

std::optional<std::size_t> Assignment::next(std::size_t robot, std::size_t subtask) const {
    const auto& seq = sequence.at(robot);
    auto it = std::find(seq.begin(), seq.end(), subtask);
    if (it == seq.end() || it + 1 == seq.end()) return std::nullopt;
    return *(it + 1);
}

namespace {

struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& v) const {
        std::uint64_t h = 1469598103934665603ull;
        for (auto x : v) {
            h ^= static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

constexpr Millis kInf = std::numeric_limits<Millis>::max() / 4;

class Search {
public:
    Search(const SchedInstance& inst, const SolverOptions& opts) : in_(inst), opts_(opts) { prepare(); }

    Assignment run() {
        Assignment a;
        const std::size_t n = in_.subtasks.size();
        a.robots.assign(n, {});
        a.start_ms.assign(n, 0);
        a.sequence.assign(in_.robots.size(), {});
        if (n == 0) {
            a.makespan_ms = in_.now;
            return a;
        }
        dfs(0, in_.now);
        a.nodes = nodes_;
        a.optimal = !aborted_;
        a.makespan_ms = best_;
        a.start_ms = best_start_;
        a.robots = best_robots_;
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t r : a.robots[s]) a.sequence[r].push_back(s);
        }
        for (auto& seq : a.sequence) {
            std::sort(seq.begin(), seq.end(), [&](std::size_t p, std::size_t q) {
                return a.start_ms[p] != a.start_ms[q] ? a.start_ms[p] < a.start_ms[q] : p < q;
            });
        }
        return a;
    }

private:
    const SchedInstance& in_;
    SolverOptions opts_;
    std::size_t n_ = 0, m_ = 0;
    std::vector<Millis> d_, rel_, tail_;
    std::vector<int> k_;
    std::vector<std::vector<std::size_t>> preds_, succs_, capable_, pinned_;
    std::vector<std::size_t> topo_, cls_;
    std::vector<std::string> skills_;
    std::vector<std::size_t> skill_of_;

    std::vector<Millis> avail_, start_, end_;
    std::vector<std::vector<std::size_t>> chosen_;
    std::uint64_t placed_ = 0;

    Millis best_ = kInf;
    std::vector<Millis> best_start_;
    std::vector<std::vector<std::size_t>> best_robots_;
    std::size_t nodes_ = 0;
    bool aborted_ = false;
    std::unordered_map<std::vector<std::int64_t>, Millis, KeyHash> memo_;

    void prepare() {
        in_.validate();
        n_ = in_.subtasks.size();
        m_ = in_.robots.size();
        if (n_ > 64) throw std::invalid_argument("at most 64 subtasks per instance");
        d_.resize(n_);
        rel_.resize(n_);
        k_.resize(n_);
        preds_.assign(n_, {});
        succs_.assign(n_, {});
        capable_.assign(n_, {});
        pinned_.assign(n_, {});
        std::vector<char> is_pinned(m_, 0);
        std::map<std::string, std::size_t> skill_ids;
        skill_of_.resize(n_);
        for (std::size_t s = 0; s < n_; ++s) {
            const auto& t = in_.subtasks[s];
            d_[s] = t.duration_ms;
            rel_[s] = std::max(in_.now, t.release_ms);
            k_[s] = t.robots;
            capable_[s] = in_.capable(s);
            auto [it, fresh] = skill_ids.emplace(t.skill, skills_.size());
            if (fresh) skills_.push_back(t.skill);
            skill_of_[s] = it->second;
            for (const auto& pid : t.pinned) {
                auto r = in_.robot_index(pid);
                if (!r) throw InfeasibleInstance("pinned", "subtask " + t.id + " is pinned to unknown robot " + pid);
                if (!in_.robots[*r].skills.count(t.skill)) {
                    throw InfeasibleInstance("capability", "pinned robot " + pid + " cannot " + t.skill);
                }
                if (std::find(pinned_[s].begin(), pinned_[s].end(), *r) == pinned_[s].end()) pinned_[s].push_back(*r);
                is_pinned[*r] = 1;
            }
            if (pinned_[s].size() > static_cast<std::size_t>(k_[s])) {
                throw InfeasibleInstance("pinned", "subtask " + t.id + " has more pinned robots than it needs");
            }
            if (capable_[s].size() < static_cast<std::size_t>(k_[s])) {
                throw InfeasibleInstance("capability", "not enough robots can " + t.skill + " for " + t.id);
            }
        }
        for (const auto& [a, b] : in_.precedence) {
            succs_[a].push_back(b);
            preds_[b].push_back(a);
        }
        // Kahn order; a leftover means a cycle.
        std::vector<std::size_t> indeg(n_, 0);
        for (std::size_t s = 0; s < n_; ++s) indeg[s] = preds_[s].size();
        std::vector<std::size_t> ready;
        for (std::size_t s = n_; s-- > 0;) {
            if (indeg[s] == 0) ready.push_back(s);
        }
        while (!ready.empty()) {
            std::size_t s = ready.back();
            ready.pop_back();
            topo_.push_back(s);
            for (std::size_t t : succs_[s]) {
                if (--indeg[t] == 0) ready.push_back(t);
            }
        }
        if (topo_.size() != n_) throw InfeasibleInstance("precedence", "subtask precedence is cyclic");
        if (in_.risk() > in_.epsilon + 1e-12) {
            throw InfeasibleInstance("budget", "total risk " + std::to_string(in_.risk()) + " exceeds budget " +
                                                   std::to_string(in_.epsilon));
        }
        tail_.assign(n_, 0);
        for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
            Millis t = 0;
            for (std::size_t s : succs_[*it]) t = std::max(t, tail_[s]);
            tail_[*it] = d_[*it] + t;
        }
        cls_.resize(m_);
        for (std::size_t r = 0; r < m_; ++r) {
            cls_[r] = r;
            if (is_pinned[r]) continue;
            for (std::size_t q = 0; q < r; ++q) {
                if (!is_pinned[q] && in_.robots[q].skills == in_.robots[r].skills) {
                    cls_[r] = cls_[q];
                    break;
                }
            }
        }
        avail_.resize(m_);
        for (std::size_t r = 0; r < m_; ++r) avail_[r] = std::max(in_.now, in_.robots[r].available_ms);
        start_.assign(n_, 0);
        end_.assign(n_, 0);
        chosen_.assign(n_, {});
    }

    bool placed(std::size_t s) const { return (placed_ >> s) & 1u; }

    // Smallest integer T with sum over robots of max(0, T - a) >= work.
    static Millis load_bound(std::vector<Millis> a, Millis work) {
        if (work <= 0 || a.empty()) return 0;
        auto enough = [&](Millis t) {
            Millis sum = 0;
            for (Millis x : a) {
                if (t > x) sum += t - x;
                if (sum >= work) return true;
            }
            return false;
        };
        Millis lo = *std::min_element(a.begin(), a.end());
        Millis hi = *std::max_element(a.begin(), a.end()) + work;
        while (lo < hi) {
            Millis mid = lo + (hi - lo) / 2;
            if (enough(mid)) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        return lo;
    }

    Millis lower_bound(Millis partial) const {
        Millis lb = partial;
        std::vector<Millis> head(n_, 0);
        for (std::size_t s : topo_) {
            if (placed(s)) continue;
            std::vector<Millis> av;
            for (std::size_t r : capable_[s]) av.push_back(avail_[r]);
            std::nth_element(av.begin(), av.begin() + (k_[s] - 1), av.end());
            Millis h = std::max(rel_[s], av[k_[s] - 1]);
            for (std::size_t r : pinned_[s]) h = std::max(h, avail_[r]);
            for (std::size_t p : preds_[s]) h = std::max(h, placed(p) ? end_[p] : head[p] + d_[p]);
            head[s] = h;
            lb = std::max(lb, h + tail_[s]);
        }
        std::vector<Millis> work(skills_.size(), 0);
        Millis total = 0;
        for (std::size_t s = 0; s < n_; ++s) {
            if (placed(s)) continue;
            work[skill_of_[s]] += d_[s] * k_[s];
            total += d_[s] * k_[s];
        }
        std::vector<char> useful(m_, 0);
        for (std::size_t k = 0; k < skills_.size(); ++k) {
            if (work[k] == 0) continue;
            std::vector<Millis> a;
            for (std::size_t r = 0; r < m_; ++r) {
                if (in_.robots[r].skills.count(skills_[k])) {
                    a.push_back(avail_[r]);
                    useful[r] = 1;
                }
            }
            lb = std::max(lb, load_bound(a, work[k]));
        }
        std::vector<Millis> a;
        for (std::size_t r = 0; r < m_; ++r) {
            if (useful[r]) a.push_back(avail_[r]);
        }
        lb = std::max(lb, load_bound(a, total));
        return lb;
    }

    std::vector<std::int64_t> state_key() const {
        std::vector<std::int64_t> key;
        key.push_back(static_cast<std::int64_t>(placed_));
        std::map<std::size_t, std::vector<Millis>> by_class;
        for (std::size_t r = 0; r < m_; ++r) by_class[cls_[r]].push_back(avail_[r]);
        for (auto& [c, v] : by_class) {
            std::sort(v.begin(), v.end());
            key.push_back(-1);
            key.insert(key.end(), v.begin(), v.end());
        }
        key.push_back(-2);
        for (std::size_t s = 0; s < n_; ++s) {
            if (!placed(s)) continue;
            bool gates = std::any_of(succs_[s].begin(), succs_[s].end(), [&](std::size_t t) { return !placed(t); });
            if (gates) key.push_back(end_[s]);
        }
        return key;
    }

    // Robot sets for s: pinned robots plus one representative per
    // (class, ready time) bucket.
    void robot_sets(std::size_t s, std::vector<std::vector<std::size_t>>& out) const {
        std::map<std::pair<std::size_t, Millis>, std::vector<std::size_t>> buckets;
        for (std::size_t r : capable_[s]) {
            if (std::find(pinned_[s].begin(), pinned_[s].end(), r) != pinned_[s].end()) continue;
            buckets[{cls_[r], avail_[r]}].push_back(r);
        }
        std::vector<std::vector<std::size_t>> lists;
        for (auto& [_, v] : buckets) lists.push_back(v);
        const int need = k_[s] - static_cast<int>(pinned_[s].size());
        std::vector<std::size_t> cur = pinned_[s];
        std::function<void(std::size_t, int)> rec = [&](std::size_t b, int left) {
            if (left == 0) {
                auto sorted = cur;
                std::sort(sorted.begin(), sorted.end());
                out.push_back(sorted);
                return;
            }
            if (b == lists.size()) return;
            for (int take = std::min<int>(left, static_cast<int>(lists[b].size())); take >= 0; --take) {
                for (int i = 0; i < take; ++i) cur.push_back(lists[b][i]);
                rec(b + 1, left - take);
                for (int i = 0; i < take; ++i) cur.pop_back();
            }
        };
        rec(0, need);
    }

    void dfs(std::size_t depth, Millis partial) {
        ++nodes_;
        if (depth == n_) {
            if (partial < best_) {
                best_ = partial;
                best_start_ = start_;
                best_robots_ = chosen_;
            }
            return;
        }
        if (best_ < kInf && nodes_ > opts_.node_limit) {
            aborted_ = true;
            return;
        }
        if (lower_bound(partial) >= best_) return;
        {
            auto key = state_key();
            auto it = memo_.find(key);
            if (it != memo_.end()) {
                if (it->second <= partial) return;
                it->second = partial;
            } else if (memo_.size() < opts_.memo_limit) {
                memo_.emplace(std::move(key), partial);
            }
        }
        struct Child {
            Millis start;
            std::size_t s;
            std::vector<std::size_t> robots;
        };
        std::vector<Child> kids;
        for (std::size_t s = 0; s < n_; ++s) {
            if (placed(s)) continue;
            bool ready = std::all_of(preds_[s].begin(), preds_[s].end(), [&](std::size_t p) { return placed(p); });
            if (!ready) continue;
            Millis est = rel_[s];
            for (std::size_t p : preds_[s]) est = std::max(est, end_[p]);
            std::vector<std::vector<std::size_t>> sets;
            robot_sets(s, sets);
            for (auto& rs : sets) {
                Millis st = est;
                for (std::size_t r : rs) st = std::max(st, avail_[r]);
                kids.push_back({st, s, std::move(rs)});
            }
        }
        std::sort(kids.begin(), kids.end(), [&](const Child& a, const Child& b) {
            if (a.start != b.start) return a.start < b.start;
            if (tail_[a.s] != tail_[b.s]) return tail_[a.s] > tail_[b.s];
            if (a.s != b.s) return a.s < b.s;
            return a.robots < b.robots;
        });
        std::vector<Millis> saved(m_);
        for (const auto& c : kids) {
            if (aborted_) return;
            Millis e = c.start + d_[c.s];
            if (std::max(partial, e + tail_[c.s] - d_[c.s]) >= best_) continue;
            for (std::size_t r : c.robots) {
                saved[r] = avail_[r];
                avail_[r] = e;
            }
            start_[c.s] = c.start;
            end_[c.s] = e;
            chosen_[c.s] = c.robots;
            placed_ |= std::uint64_t{1} << c.s;
            dfs(depth + 1, std::max(partial, e));
            placed_ &= ~(std::uint64_t{1} << c.s);
            chosen_[c.s].clear();
            for (std::size_t r : c.robots) avail_[r] = saved[r];
        }
    }
};

}  // namespace

Assignment solve(const SchedInstance& inst, const SolverOptions& opts) {
    Search s(inst, opts);
    return s.run();
}

}  // namespace swarm::sched
