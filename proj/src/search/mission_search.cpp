#include "swarmplan/search/mission_search.hpp"

#include <algorithm>
#include <future>
#include <limits>
#include <map>
#include <sstream>

namespace swarm::search {

using automaton::kInfiniteDistance;
using automaton::ReachableSet;

const TaskSite* Mission::site(const std::string& symbol) const {
    for (const auto& s : sites) {
        if (s.symbol == symbol) return &s;
    }
    return nullptr;
}

bool SearchNode::assigned(const TaskRef& t) const { return group_of(t).has_value(); }

std::optional<std::size_t> SearchNode::group_of(const TaskRef& t) const {
    for (std::size_t g = 0; g < plans.size(); ++g) {
        for (const auto& pt : plans[g]) {
            if (pt.task == t) return g;
        }
    }
    return std::nullopt;
}

std::vector<double> Profile::vector() const {
    std::vector<double> z;
    for (Millis t : makespan_ms) z.push_back(static_cast<double>(t) / 1000.0);
    for (Millis c : cost_ms) z.push_back(static_cast<double>(c) / 1000.0);
    for (std::size_t d : distance) {
        z.push_back(d == kInfiniteDistance ? std::numeric_limits<double>::infinity() : static_cast<double>(d));
    }
    return z;
}

Problem::Problem(std::vector<Mission> missions, std::vector<GroupProfile> groups)
    : missions_(std::move(missions)), groups_(std::move(groups)) {
    std::set<std::string> members;
    for (const auto& g : groups_) {
        if (g.capabilities.empty()) throw std::invalid_argument("group " + std::to_string(g.id) + " has no capabilities");
        if (g.velocity <= 0) throw std::invalid_argument("group velocity must be positive");
        for (const auto& m : g.members) {
            if (!members.insert(m).second) throw std::invalid_argument("robot " + m + " belongs to two groups");
        }
    }
    for (const auto& m : missions_) {
        std::set<std::string> seen;
        for (const auto& s : m.sites) {
            if (!seen.insert(s.symbol).second) {
                throw std::invalid_argument("mission " + m.name + " lists task " + s.symbol + " twice");
            }
        }
    }
}

double node_value(const Profile& z, double eta1, double eta2) {
    Millis tmax = 0;
    for (Millis t : z.makespan_ms) tmax = std::max(tmax, t);
    Millis csum = 0;
    for (Millis c : z.cost_ms) csum += c;
    double dsum = 0.0;
    for (std::size_t d : z.distance) {
        if (d == kInfiniteDistance) return std::numeric_limits<double>::infinity();
        dsum += static_cast<double>(d);
    }
    return static_cast<double>(tmax) / 1000.0 + eta1 * (static_cast<double>(csum) / 1000.0) + eta2 * dsum;
}

bool dominates(const std::vector<double>& z1, const std::vector<double>& z2) {
    if (z1.size() != z2.size()) throw std::invalid_argument("profile dimensions differ");
    bool strict = false;
    for (std::size_t i = 0; i < z1.size(); ++i) {
        if (z1[i] > z2[i]) return false;
        if (z1[i] < z2[i]) strict = true;
    }
    return strict;
}

namespace {

Profile make_profile(const Problem& p, const SearchNode& v) {
    Profile z;
    for (std::size_t g = 0; g < p.groups().size(); ++g) {
        Millis t = 0;
        Millis c = 0;
        for (const auto& pt : v.plans[g]) {
            t = std::max(t, pt.end_ms());
            c += pt.duration_ms;
        }
        z.makespan_ms.push_back(t);
        z.cost_ms.push_back(c);
    }
    for (std::size_t k = 0; k < p.missions().size(); ++k) {
        z.distance.push_back(automaton::min_distance(p.missions()[k].nba, v.reach[k]));
    }
    return z;
}

bool is_complete(const Problem& p, const SearchNode& v) {
    for (std::size_t k = 0; k < p.missions().size(); ++k) {
        if (!automaton::intersects_accepting(p.missions()[k].nba, v.reach[k])) return false;
    }
    return true;
}

}  // namespace

SearchNode root_node(const Problem& p) {
    SearchNode v;
    v.plans.resize(p.groups().size());
    for (std::size_t k = 0; k < p.missions().size(); ++k) {
        v.reach.push_back(automaton::initial_reachable(p.missions()[k].nba, k));
    }
    v.profile = make_profile(p, v);
    v.complete = is_complete(p, v);
    return v;
}

std::vector<TaskRef> candidate_tasks(const Problem& p, const SearchNode& v, std::size_t group) {
    std::vector<TaskRef> out;
    const auto& caps = p.groups().at(group).capabilities;
    for (std::size_t k = 0; k < p.missions().size(); ++k) {
        const auto& m = p.missions()[k];
        for (const auto& s : m.sites) {
            if (!caps.count(s.symbol)) continue;
            TaskRef t{k, s.symbol};
            if (v.assigned(t)) continue;
            automaton::LabelMask obs = m.nba.encode({s.symbol});
            bool enabled = false;
            for (auto q : v.reach[k].states) {
                for (const auto& tr : m.nba.transitions(q)) {
                    if (tr.guard.admits(obs)) {
                        enabled = true;
                        break;
                    }
                }
                if (enabled) break;
            }
            if (enabled) out.push_back(t);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

StartSchedule schedule_start_times(const std::vector<std::vector<TaskDuration>>& plans,
                                   const std::vector<std::pair<TaskRef, TaskRef>>& precedence) {
    // Nodes are plan slots; edges carry the upstream duration as the lag.
    std::map<TaskRef, std::pair<std::size_t, std::size_t>> where;
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    for (std::size_t g = 0; g < plans.size(); ++g) {
        for (std::size_t i = 0; i < plans[g].size(); ++i) {
            if (!where.emplace(plans[g][i].task, std::make_pair(g, i)).second) {
                throw std::invalid_argument("task " + plans[g][i].task.str() + " planned twice");
            }
            slots.emplace_back(g, i);
        }
    }
    const std::size_t n = slots.size();
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index[slots[i]] = i;
    std::vector<std::vector<std::size_t>> succ(n);
    std::vector<std::size_t> indeg(n, 0);
    auto add = [&](std::size_t a, std::size_t b) {
        succ[a].push_back(b);
        ++indeg[b];
    };
    for (std::size_t g = 0; g < plans.size(); ++g) {
        for (std::size_t i = 1; i < plans[g].size(); ++i) add(index[{g, i - 1}], index[{g, i}]);
    }
    for (const auto& [h, l] : precedence) {
        auto a = where.find(h);
        auto b = where.find(l);
        if (a == where.end() || b == where.end()) continue;
        add(index[a->second], index[b->second]);
    }
    std::vector<Millis> start(n, 0);
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (indeg[i] == 0) ready.push_back(i);
    }
    std::size_t done = 0;
    while (!ready.empty()) {
        std::size_t a = ready.back();
        ready.pop_back();
        ++done;
        Millis end = start[a] + plans[slots[a].first][slots[a].second].duration_ms;
        for (std::size_t b : succ[a]) {
            start[b] = std::max(start[b], end);
            if (--indeg[b] == 0) ready.push_back(b);
        }
    }
    if (done != n) throw ScheduleCycle("precedence and plan order form a cycle");
    StartSchedule s;
    s.start_ms.resize(plans.size());
    s.makespan_ms.assign(plans.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto [g, k] = slots[i];
        if (s.start_ms[g].size() < plans[g].size()) s.start_ms[g].resize(plans[g].size());
        s.start_ms[g][k] = start[i];
        s.makespan_ms[g] = std::max(s.makespan_ms[g], start[i] + plans[g][k].duration_ms);
    }
    return s;
}

std::vector<std::pair<TaskRef, TaskRef>> precedence_pairs(const Problem& p) {
    std::vector<std::pair<TaskRef, TaskRef>> out;
    for (std::size_t k = 0; k < p.missions().size(); ++k) {
        for (const auto& [h, l] : p.missions()[k].poset.precedence) out.push_back({TaskRef{k, h}, TaskRef{k, l}});
    }
    return out;
}

std::optional<SearchNode> expand(const Problem& p, const SearchNode& v, std::size_t group, const TaskRef& task,
                                 std::string* reason) {
    auto fail = [&](const std::string& why) -> std::optional<SearchNode> {
        if (reason) *reason = why;
        return std::nullopt;
    };
    const auto& m = p.missions().at(task.mission);
    const TaskSite* site = m.site(task.symbol);
    if (!site) return fail("unknown task " + task.str());
    if (!p.groups().at(group).capabilities.count(task.symbol)) return fail("group lacks capability");
    if (v.assigned(task)) return fail("task already assigned");
    for (const auto& [h, l] : m.poset.precedence) {
        if (l == task.symbol && !v.assigned(TaskRef{task.mission, h})) return fail("predecessor " + h + " unassigned");
        if (h == task.symbol && v.assigned(TaskRef{task.mission, l})) return fail("successor " + l + " already assigned");
    }
    ReachableSet next = automaton::advance(m.nba, v.reach[task.mission], m.nba.encode({task.symbol}));
    if (next.empty()) return fail("mission automaton has no run");

    SearchNode c;
    c.parent = v.id;
    c.plans = v.plans;
    c.reach = v.reach;
    c.reach[task.mission] = std::move(next);
    c.order = v.order;
    c.order.push_back(task);

    const auto& gp = p.groups()[group];
    Vec2 from = c.plans[group].empty() ? gp.home : c.plans[group].back().position;
    PlannedTask pt;
    pt.task = task;
    pt.position = site->position;
    pt.travel_ms = travel_ms(distance(from, site->position), gp.velocity);
    pt.duration_ms = pt.travel_ms + site->service_ms;
    c.plans[group].push_back(pt);

    std::vector<std::vector<TaskDuration>> durations(c.plans.size());
    for (std::size_t g = 0; g < c.plans.size(); ++g) {
        for (const auto& x : c.plans[g]) durations[g].push_back({x.task, x.duration_ms});
    }
    StartSchedule sched;
    try {
        sched = schedule_start_times(durations, precedence_pairs(p));
    } catch (const ScheduleCycle&) {
        return fail("schedule infeasible");
    }
    for (std::size_t g = 0; g < c.plans.size(); ++g) {
        for (std::size_t i = 0; i < c.plans[g].size(); ++i) c.plans[g][i].start_ms = sched.start_ms[g][i];
    }
    c.profile = make_profile(p, c);
    c.complete = is_complete(p, c);
    return c;
}

namespace {

// Nodes with equal signatures have identical futures up to time offsets.
std::string signature(const SearchNode& v) {
    std::ostringstream os;
    for (const auto& r : v.reach) {
        os << '[';
        for (auto q : r.states) os << q << ',';
        os << ']';
    }
    for (const auto& plan : v.plans) {
        std::vector<TaskRef> ts;
        for (const auto& pt : plan) ts.push_back(pt.task);
        std::sort(ts.begin(), ts.end());
        os << '{';
        for (const auto& t : ts) os << t.str() << ',';
        os << '|' << (plan.empty() ? std::string("-") : plan.back().task.str()) << '}';
    }
    return os.str();
}

// Profile extended with end times of assigned tasks that still gate an
// unassigned successor; comparable only between equal signatures.
std::vector<double> extended_profile(const Problem& p, const SearchNode& v) {
    std::vector<double> z = v.profile.vector();
    std::vector<std::pair<TaskRef, Millis>> gates;
    for (const auto& plan : v.plans) {
        for (const auto& pt : plan) {
            const auto& poset = p.missions()[pt.task.mission].poset;
            for (const auto& [h, l] : poset.precedence) {
                if (h == pt.task.symbol && !v.assigned(TaskRef{pt.task.mission, l})) {
                    gates.emplace_back(pt.task, pt.end_ms());
                    break;
                }
            }
        }
    }
    std::sort(gates.begin(), gates.end());
    for (const auto& g : gates) z.push_back(static_cast<double>(g.second) / 1000.0);
    return z;
}

struct Expansion {
    std::size_t group;
    TaskRef task;
    std::optional<SearchNode> child;
    std::string reason;
};

std::vector<Expansion> expand_all(const Problem& p, const SearchNode& v) {
    std::vector<Expansion> out;
    for (std::size_t g = 0; g < p.groups().size(); ++g) {
        for (const auto& t : candidate_tasks(p, v, g)) {
            Expansion e{g, t, std::nullopt, {}};
            e.child = expand(p, v, g, t, &e.reason);
            out.push_back(std::move(e));
        }
    }
    return out;
}

}  // namespace

SearchResult search(const Problem& p, const SearchParams& params) {
    SearchResult res;
    std::vector<SearchNode> nodes;
    std::vector<char> alive, expanded;
    std::vector<double> value;
    std::vector<double> bound;  // value ignoring the distance term
    std::map<std::string, std::vector<std::size_t>> by_signature;
    std::vector<std::vector<double>> ext;

    auto insert = [&](SearchNode v) {
        v.id = nodes.size();
        double chi = node_value(v.profile, params.eta1, params.eta2);
        Profile lb = v.profile;
        std::fill(lb.distance.begin(), lb.distance.end(), 0);
        bound.push_back(node_value(lb, params.eta1, params.eta2));
        value.push_back(chi);
        alive.push_back(1);
        expanded.push_back(0);
        ext.push_back(extended_profile(p, v));
        by_signature[signature(v)].push_back(v.id);
        nodes.push_back(std::move(v));
        return nodes.back().id;
    };

    SearchNode root = root_node(p);
    for (std::size_t k = 0; k < p.missions().size(); ++k) {
        if (root.profile.distance[k] == kInfiniteDistance) {
            throw InfeasibleMission("mission " + p.missions()[k].name + " cannot reach acceptance");
        }
    }
    insert(std::move(root));

    std::optional<std::size_t> incumbent;
    auto consider = [&](std::size_t id) {
        if (!nodes[id].complete) return;
        if (!incumbent || value[id] < value[*incumbent] || (value[id] == value[*incumbent] && id < *incumbent)) {
            incumbent = id;
        }
    };
    consider(0);

    while (nodes.size() < params.budget) {
        std::vector<std::size_t> pick;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!alive[i] || expanded[i] || nodes[i].complete) continue;
            if (value[i] == std::numeric_limits<double>::infinity()) continue;
            if (incumbent && bound[i] >= value[*incumbent]) continue;
            pick.push_back(i);
        }
        if (pick.empty()) break;
        std::sort(pick.begin(), pick.end(), [&](std::size_t a, std::size_t b) {
            if (value[a] != value[b]) return value[a] < value[b];
            return a < b;
        });
        if (pick.size() > params.width) pick.resize(params.width);

        std::vector<std::vector<Expansion>> batches(pick.size());
        if (params.threads > 1 && pick.size() > 1) {
            std::vector<std::future<std::vector<Expansion>>> fs;
            for (std::size_t i : pick) {
                fs.push_back(std::async(std::launch::async, [&p, &nodes, i] { return expand_all(p, nodes[i]); }));
            }
            for (std::size_t j = 0; j < fs.size(); ++j) batches[j] = fs[j].get();
        } else {
            for (std::size_t j = 0; j < pick.size(); ++j) batches[j] = expand_all(p, nodes[pick[j]]);
        }

        bool out_of_budget = false;
        for (std::size_t j = 0; j < pick.size(); ++j) {
            expanded[pick[j]] = 1;
            ++res.expansions;
            for (auto& e : batches[j]) {
                TraceRecord tr;
                tr.parent = pick[j];
                tr.group = e.group;
                tr.task = e.task;
                if (!e.child) {
                    tr.pruned = true;
                    tr.reason = e.reason;
                    res.trace.push_back(std::move(tr));
                    continue;
                }
                tr.profile = e.child->profile.vector();
                if (out_of_budget || nodes.size() >= params.budget) {
                    out_of_budget = true;
                    tr.pruned = true;
                    tr.reason = "node budget reached";
                    res.trace.push_back(std::move(tr));
                    continue;
                }
                std::vector<double> z = extended_profile(p, *e.child);
                std::string sig = signature(*e.child);
                bool dominated = false;
                auto it = by_signature.find(sig);
                if (it != by_signature.end()) {
                    for (std::size_t o : it->second) {
                        if (alive[o] && (ext[o] == z || dominates(ext[o], z))) {
                            dominated = true;
                            break;
                        }
                    }
                }
                if (dominated) {
                    tr.pruned = true;
                    tr.reason = "dominated";
                    res.trace.push_back(std::move(tr));
                    continue;
                }
                if (it != by_signature.end()) {
                    for (std::size_t o : it->second) {
                        if (alive[o] && dominates(z, ext[o])) alive[o] = 0;
                    }
                }
                std::size_t id = insert(std::move(*e.child));
                tr.child = id;
                res.trace.push_back(std::move(tr));
                consider(id);
            }
        }
        res.incumbent_history.push_back(incumbent ? value[*incumbent] : std::numeric_limits<double>::infinity());
        if (out_of_budget) break;
    }

    res.nodes_created = nodes.size();
    if (incumbent) {
        res.complete = true;
        res.best = nodes[*incumbent];
        res.value = value[*incumbent];
    } else {
        std::size_t best = 0;
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            if (alive[i] && (value[i] < value[best] || !alive[best])) best = i;
        }
        res.best = nodes[best];
        res.value = value[best];
    }
    return res;
}

}  // namespace swarm::search
