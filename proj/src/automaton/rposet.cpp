#include "swarmplan/automaton/rposet.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

namespace swarm::automaton {

bool RPoset::has_task(const std::string& t) const { return std::binary_search(tasks.begin(), tasks.end(), t); }

std::vector<std::string> RPoset::predecessors(const std::string& t) const {
    std::vector<std::string> out;
    for (const auto& [h, l] : precedence) {
        if (l == t) out.push_back(h);
    }
    return out;
}

namespace {

// Kahn's algorithm; returns false on a cycle.
bool topological(const std::vector<std::string>& nodes, const std::set<std::pair<std::string, std::string>>& edges,
                 std::vector<std::string>* order) {
    std::map<std::string, int> indeg;
    for (const auto& n : nodes) indeg[n] = 0;
    for (const auto& [a, b] : edges) ++indeg[b];
    std::set<std::string> ready;
    for (const auto& [n, d] : indeg) {
        if (d == 0) ready.insert(n);
    }
    std::vector<std::string> out;
    while (!ready.empty()) {
        std::string n = *ready.begin();
        ready.erase(ready.begin());
        out.push_back(n);
        for (const auto& [a, b] : edges) {
            if (a == n && --indeg[b] == 0) ready.insert(b);
        }
    }
    if (order) *order = out;
    return out.size() == indeg.size();
}

}  // namespace

void RPoset::validate() const {
    if (!topological(tasks, precedence, nullptr)) throw std::logic_error("precedence relation is cyclic");
    for (const auto& [a, b] : exclusion) {
        if (a == b) throw std::logic_error("exclusion relation is reflexive on " + a);
        if (!exclusion.count({b, a})) throw std::logic_error("exclusion relation is not symmetric");
    }
}

RPoset extract_rposet(const Nba& a, const std::vector<std::string>& task_list) {
    std::vector<std::string> tasks(task_list.begin(), task_list.end());
    std::sort(tasks.begin(), tasks.end());
    tasks.erase(std::unique(tasks.begin(), tasks.end()), tasks.end());
    if (tasks.size() > 64) throw std::invalid_argument("at most 64 tasks supported");

    std::vector<LabelMask> task_prop(tasks.size(), 0);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (auto idx = a.proposition_index(tasks[i])) task_prop[i] = LabelMask{1} << *idx;
    }
    // Tasks a transition requires, as a mask over `tasks`.
    auto required = [&](const Guard& g) {
        std::uint64_t m = 0;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (g.pos & task_prop[i]) m |= std::uint64_t{1} << i;
        }
        return m;
    };

    // Reachable configuration graph.
    using Config = std::pair<StateId, std::uint64_t>;
    std::map<Config, std::size_t> ids;
    std::vector<Config> configs;
    struct Edge {
        std::size_t to;
        std::uint64_t tasks;
    };
    std::vector<std::vector<Edge>> out;
    std::deque<std::size_t> queue;
    auto config_of = [&](Config c) {
        auto it = ids.find(c);
        if (it != ids.end()) return it->second;
        std::size_t id = configs.size();
        ids.emplace(c, id);
        configs.push_back(c);
        out.emplace_back();
        queue.push_back(id);
        return id;
    };
    for (StateId q : a.initial()) config_of({q, 0});
    while (!queue.empty()) {
        std::size_t c = queue.front();
        queue.pop_front();
        auto [q, seen] = configs[c];
        std::vector<Edge> es;
        for (const auto& t : a.transitions(q)) {
            std::uint64_t r = required(t.guard);
            es.push_back({config_of({t.target, seen | r}), r});
        }
        out[c] = std::move(es);
    }

    // Configurations on an accepting cycle, then everything that reaches one.
    const std::size_t n = configs.size();
    std::vector<char> live(n, 0);
    {
        std::vector<std::size_t> index(n, SIZE_MAX), low(n, 0), stack;
        std::vector<char> on(n, 0);
        std::size_t counter = 0;
        struct Frame {
            std::size_t v;
            std::size_t e;
        };
        for (std::size_t root = 0; root < n; ++root) {
            if (index[root] != SIZE_MAX) continue;
            std::vector<Frame> call{{root, 0}};
            index[root] = low[root] = counter++;
            stack.push_back(root);
            on[root] = 1;
            while (!call.empty()) {
                Frame& fr = call.back();
                if (fr.e < out[fr.v].size()) {
                    std::size_t w = out[fr.v][fr.e++].to;
                    if (index[w] == SIZE_MAX) {
                        index[w] = low[w] = counter++;
                        stack.push_back(w);
                        on[w] = 1;
                        call.push_back({w, 0});
                    } else if (on[w]) {
                        low[fr.v] = std::min(low[fr.v], index[w]);
                    }
                    continue;
                }
                std::size_t v = fr.v;
                if (low[v] == index[v]) {
                    std::vector<std::size_t> comp;
                    while (true) {
                        std::size_t x = stack.back();
                        stack.pop_back();
                        on[x] = 0;
                        comp.push_back(x);
                        if (x == v) break;
                    }
                    bool cyclic = comp.size() > 1 ||
                                  std::any_of(out[v].begin(), out[v].end(), [&](const Edge& e) { return e.to == v; });
                    bool acc = std::any_of(comp.begin(), comp.end(), [&](std::size_t x) { return a.accepting(configs[x].first); });
                    if (cyclic && acc) {
                        for (std::size_t x : comp) live[x] = 1;
                    }
                }
                call.pop_back();
                if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            }
        }
    }
    std::vector<std::vector<std::size_t>> rev(n);
    for (std::size_t c = 0; c < n; ++c) {
        for (const auto& e : out[c]) rev[e.to].push_back(c);
    }
    std::deque<std::size_t> back;
    for (std::size_t c = 0; c < n; ++c) {
        if (live[c]) back.push_back(c);
    }
    while (!back.empty()) {
        std::size_t c = back.front();
        back.pop_front();
        for (std::size_t p : rev[c]) {
            if (!live[p]) {
                live[p] = 1;
                back.push_back(p);
            }
        }
    }
    bool any_initial = false;
    for (StateId q : a.initial()) any_initial |= live[ids.at({q, 0})] != 0;
    if (!any_initial) throw InfeasibleSpecification("mission automaton has no accepting run");

    // Scan useful steps.
    const std::size_t k = tasks.size();
    std::vector<char> occurs(k, 0);
    // violates[h][l]: some useful step first requires l while h is unseen.
    std::vector<std::vector<char>> violates(k, std::vector<char>(k, 0));
    std::vector<std::vector<char>> together(k, std::vector<char>(k, 0));
    for (std::size_t c = 0; c < n; ++c) {
        if (!live[c]) continue;
        std::uint64_t seen = configs[c].second;
        for (const auto& e : out[c]) {
            if (!live[e.to]) continue;
            std::uint64_t tb = e.tasks;
            std::uint64_t now = seen | tb;
            for (std::size_t l = 0; l < k; ++l) {
                if (!(tb >> l & 1)) continue;
                occurs[l] = 1;
                for (std::size_t m = 0; m < k; ++m) {
                    if (m != l && (tb >> m & 1)) together[l][m] = 1;
                }
                if (seen >> l & 1) continue;
                for (std::size_t h = 0; h < k; ++h) {
                    if (h != l && !(now >> h & 1)) violates[h][l] = 1;
                }
            }
        }
    }

    RPoset p;
    for (std::size_t i = 0; i < k; ++i) {
        if (occurs[i]) p.tasks.push_back(tasks[i]);
    }
    for (std::size_t h = 0; h < k; ++h) {
        for (std::size_t l = 0; l < k; ++l) {
            if (h == l || !occurs[h] || !occurs[l]) continue;
            bool hl = !violates[h][l];
            bool lh = !violates[l][h];
            if (hl && !lh) p.precedence.insert({tasks[h], tasks[l]});
            if (!together[h][l]) p.exclusion.insert({tasks[h], tasks[l]});
        }
    }
    p.validate();
    return p;
}

std::vector<DagEdge> TaskDag::precedence_edges() const {
    std::vector<DagEdge> out;
    for (const auto& e : edges) {
        if (e.kind == EdgeKind::Precedes) out.push_back(e);
    }
    return out;
}

TaskDag rposet_to_dag(const RPoset& p) {
    std::vector<std::string> order;
    if (!topological(p.tasks, p.precedence, &order)) throw std::logic_error("precedence relation is cyclic");
    // Reachability closure, then keep (a, b) only when no c sits between.
    std::map<std::string, std::set<std::string>> reach;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        auto& r = reach[*it];
        for (const auto& [a, b] : p.precedence) {
            if (a == *it) {
                r.insert(b);
                r.insert(reach[b].begin(), reach[b].end());
            }
        }
    }
    TaskDag d;
    d.nodes = p.tasks;
    for (const auto& [a, b] : p.precedence) {
        bool implied = false;
        for (const auto& c : reach[a]) {
            if (c != b && reach[c].count(b)) {
                implied = true;
                break;
            }
        }
        if (!implied) d.edges.push_back({a, b, EdgeKind::Precedes});
    }
    for (const auto& [a, b] : p.exclusion) {
        if (a < b) d.edges.push_back({a, b, EdgeKind::Excludes});
    }
    std::sort(d.edges.begin(), d.edges.end());
    return d;
}

std::string TaskDag::to_dot(const std::string& name) const {
    std::ostringstream os;
    os << "digraph \"" << name << "\" {\n  rankdir=TB;\n";
    for (const auto& n : nodes) os << "  \"" << n << "\";\n";
    for (const auto& e : edges) {
        if (e.kind == EdgeKind::Precedes) {
            os << "  \"" << e.from << "\" -> \"" << e.to << "\";\n";
        } else {
            os << "  \"" << e.from << "\" -> \"" << e.to << "\" [dir=none, style=dashed, label=\"!=\"];\n";
        }
    }
    os << "}\n";
    return os.str();
}

std::string TaskDag::to_text() const {
    std::ostringstream os;
    for (const auto& n : nodes) os << "node " << n << "\n";
    for (const auto& e : edges) {
        os << "edge " << e.from << " " << e.to << " " << (e.kind == EdgeKind::Precedes ? "precedes" : "excludes")
           << "\n";
    }
    return os.str();
}

}  // namespace swarm::automaton
