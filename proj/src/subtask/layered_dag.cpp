#include "swarmplan/subtask/layered_dag.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <stdexcept>

#include "swarmplan/subtask/skills.hpp"

namespace swarm::subtask {

std::vector<std::size_t> LayeredDag::predecessors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (const auto& [a, b] : edges) {
        if (b == i) out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::size_t> LayeredDag::successors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (const auto& [a, b] : edges) {
        if (a == i) out.push_back(b);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::size_t> LayeredDag::topological_order() const {
    const std::size_t n = nodes.size();
    std::vector<std::size_t> indeg(n, 0);
    for (const auto& [a, b] : edges) {
        if (a < n && b < n) ++indeg[b];
    }
    std::set<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (indeg[i] == 0) ready.insert(i);
    }
    std::vector<std::size_t> out;
    while (!ready.empty()) {
        std::size_t i = *ready.begin();
        ready.erase(ready.begin());
        out.push_back(i);
        for (const auto& [a, b] : edges) {
            if (a == i && b < n && --indeg[b] == 0) ready.insert(b);
        }
    }
    if (out.size() != n) return {};
    return out;
}

bool LayeredDag::acyclic() const { return nodes.empty() || !topological_order().empty(); }

std::vector<int> LayeredDag::layers() const {
    auto order = topological_order();
    if (order.size() != nodes.size()) return {};
    std::vector<int> layer(nodes.size(), 0);
    for (std::size_t i : order) {
        for (std::size_t p : predecessors(i)) layer[i] = std::max(layer[i], layer[p] + 1);
    }
    return layer;
}

std::optional<std::size_t> LayeredDag::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id == id) return i;
    }
    return std::nullopt;
}

std::set<std::size_t> LayeredDag::ancestors(std::size_t i) const {
    std::set<std::size_t> seen;
    std::deque<std::size_t> q{i};
    while (!q.empty()) {
        std::size_t x = q.front();
        q.pop_front();
        for (std::size_t p : predecessors(x)) {
            if (seen.insert(p).second) q.push_back(p);
        }
    }
    seen.erase(i);
    return seen;
}

double LayeredDag::risk() const {
    double r = 0.0;
    for (const auto& n : nodes) r += (1.0 - n.p_success) * n.robots;
    return r;
}

std::string LayeredDag::to_dot(const std::string& name) const {
    std::ostringstream os;
    os << "digraph \"" << name << "\" {\n  rankdir=LR;\n";
    auto layer = layers();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        os << "  \"" << n.id << "\" [label=\"" << n.skill;
        if (!n.resource.empty()) os << "(" << n.resource << ")";
        os << " x" << n.robots << "\"";
        if (n.exploration) os << ", style=dashed";
        if (!layer.empty()) os << ", rank=" << layer[i];
        os << "];\n";
    }
    for (const auto& [a, b] : edges) os << "  \"" << nodes.at(a).id << "\" -> \"" << nodes.at(b).id << "\";\n";
    os << "}\n";
    return os.str();
}

nlohmann::json dag_to_json(const LayeredDag& g) {
    nlohmann::json j;
    j["task"] = g.task;
    j["scheme"] = g.scheme;
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : g.nodes) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& p : n.region) r.push_back({p.x, p.y});
        j["nodes"].push_back({{"id", n.id},
                              {"skill", n.skill},
                              {"resource", n.resource},
                              {"robots", n.robots},
                              {"duration_ms", n.duration_ms},
                              {"p_success", n.p_success},
                              {"exploration", n.exploration},
                              {"region", r}});
    }
    j["edges"] = nlohmann::json::array();
    for (const auto& [a, b] : g.edges) j["edges"].push_back({g.nodes.at(a).id, g.nodes.at(b).id});
    return j;
}

LayeredDag dag_from_json(const nlohmann::json& j) {
    try {
        LayeredDag g;
        g.task = j.value("task", std::string{});
        g.scheme = j.value("scheme", 0);
        for (const auto& n : j.at("nodes")) {
            SubtaskNode s;
            s.id = n.at("id").get<std::string>();
            s.skill = n.at("skill").get<std::string>();
            s.resource = n.value("resource", std::string{});
            s.robots = n.value("robots", 1);
            s.duration_ms = n.value("duration_ms", Millis{0});
            s.p_success = n.value("p_success", 1.0);
            s.exploration = n.value("exploration", false);
            if (n.contains("region")) {
                for (const auto& p : n.at("region")) s.region.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            }
            g.nodes.push_back(std::move(s));
        }
        if (j.contains("edges")) {
            for (const auto& e : j.at("edges")) {
                auto a = g.index_of(e.at(0).get<std::string>());
                auto b = g.index_of(e.at(1).get<std::string>());
                if (!a || !b) throw std::invalid_argument("edge names an unknown node");
                g.edges.emplace_back(*a, *b);
            }
        }
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed scheme graph: ") + e.what());
    }
}

std::vector<DagViolation> validate_dag(const LayeredDag& g, const std::set<std::string>& caps,
                                       const std::set<std::string>& known) {
    std::vector<DagViolation> out;
    const std::size_t n = g.nodes.size();
    std::set<std::string> ids;
    for (const auto& s : g.nodes) {
        if (!ids.insert(s.id).second) out.push_back({"duplicate id", s.id});
    }
    bool edges_ok = true;
    for (const auto& [a, b] : g.edges) {
        if (a >= n || b >= n || a == b) {
            out.push_back({"bad edge", std::to_string(a) + "->" + std::to_string(b)});
            edges_ok = false;
        }
    }
    if (edges_ok && !g.acyclic()) out.push_back({"cycle", "precedence edges form a cycle"});
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = g.nodes[i];
        if (!is_subtask_skill(s.skill)) {
            out.push_back({"unknown skill", s.id + ": " + s.skill});
        } else if (!caps.count(s.skill)) {
            out.push_back({"missing capability", s.id + ": " + s.skill});
        }
        if (s.robots < 1) out.push_back({"robot count", s.id + ": " + std::to_string(s.robots)});
        if (s.exploration || s.resource.empty() || known.count(s.resource)) continue;
        bool guarded = false;
        if (edges_ok) {
            for (std::size_t a : g.ancestors(i)) {
                if (g.nodes[a].exploration && g.nodes[a].resource == s.resource) guarded = true;
            }
        }
        if (!guarded) out.push_back({"missing resource", s.id + ": " + s.resource});
    }
    return out;
}

double ExplorationPriors::prior(const std::string& resource) const {
    auto it = success.find(resource);
    return it == success.end() ? default_success : it->second;
}

LayeredDag insert_exploration(const LayeredDag& g, const std::set<std::string>& known,
                              const ExplorationPriors& priors) {
    LayeredDag out = g;
    std::map<std::string, std::vector<std::size_t>> consumers;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const auto& s = g.nodes[i];
        if (s.exploration || s.resource.empty() || known.count(s.resource)) continue;
        consumers[s.resource].push_back(i);
    }
    for (const auto& [r, users] : consumers) {
        // A graph may already hold a search node for r (regeneration).
        std::optional<std::size_t> existing;
        for (std::size_t i = 0; i < out.nodes.size(); ++i) {
            if (out.nodes[i].exploration && out.nodes[i].resource == r) existing = i;
        }
        std::size_t e;
        if (existing) {
            e = *existing;
        } else {
            SubtaskNode x;
            x.id = "explore_" + r;
            x.skill = kExploreSkill;
            x.resource = r;
            x.robots = 1;
            x.duration_ms = priors.sweep_ms;
            x.p_success = priors.prior(r);
            x.exploration = true;
            auto reg = priors.regions.find(r);
            if (reg != priors.regions.end()) x.region = reg->second;
            e = out.nodes.size();
            out.nodes.push_back(std::move(x));
        }
        for (std::size_t u : users) {
            if (std::find(out.edges.begin(), out.edges.end(), std::make_pair(e, u)) == out.edges.end()) {
                out.edges.emplace_back(e, u);
            }
        }
    }
    return out;
}

Vec2 centroid(const std::vector<Vec2>& polygon) {
    if (polygon.empty()) return {};
    double x = 0, y = 0;
    for (const auto& p : polygon) {
        x += p.x;
        y += p.y;
    }
    return {x / static_cast<double>(polygon.size()), y / static_cast<double>(polygon.size())};
}

}  // namespace swarm::subtask
