#include "swarmplan/automaton/nba.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace swarm::automaton {

Nba::Nba(std::vector<std::string> propositions, std::vector<NbaState> states, std::vector<StateId> initial,
         std::vector<std::vector<Transition>> transitions)
    : props_(std::move(propositions)),
      states_(std::move(states)),
      initial_(std::move(initial)),
      out_(std::move(transitions)) {
    if (props_.size() > kMaxPropositions) {
        throw std::invalid_argument("automaton supports at most 64 propositions");
    }
    if (out_.size() != states_.size()) throw std::invalid_argument("transition table size mismatch");
    for (StateId q : initial_) {
        if (q >= states_.size()) throw std::invalid_argument("initial state out of range");
    }
    std::sort(initial_.begin(), initial_.end());
    initial_.erase(std::unique(initial_.begin(), initial_.end()), initial_.end());
    for (auto& ts : out_) {
        ts.erase(std::remove_if(ts.begin(), ts.end(), [](const Transition& t) { return !t.guard.satisfiable(); }),
                 ts.end());
        for (const auto& t : ts) {
            if (t.target >= states_.size()) throw std::invalid_argument("transition target out of range");
        }
        std::sort(ts.begin(), ts.end());
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    }

    // Reverse BFS from the accepting set.
    std::vector<std::vector<StateId>> rev(states_.size());
    for (StateId q = 0; q < states_.size(); ++q) {
        for (const auto& t : out_[q]) rev[t.target].push_back(q);
    }
    dist_.assign(states_.size(), kInfiniteDistance);
    std::deque<StateId> queue;
    for (StateId q = 0; q < states_.size(); ++q) {
        if (states_[q].accepting) {
            dist_[q] = 0;
            queue.push_back(q);
        }
    }
    while (!queue.empty()) {
        StateId q = queue.front();
        queue.pop_front();
        for (StateId p : rev[q]) {
            if (dist_[p] == kInfiniteDistance) {
                dist_[p] = dist_[q] + 1;
                queue.push_back(p);
            }
        }
    }
}

std::optional<std::size_t> Nba::proposition_index(const std::string& name) const {
    auto it = std::find(props_.begin(), props_.end(), name);
    if (it == props_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - props_.begin());
}

LabelMask Nba::encode(const Label& label) const {
    LabelMask m = 0;
    for (std::size_t i = 0; i < props_.size(); ++i) {
        if (label.count(props_[i])) m |= LabelMask{1} << i;
    }
    return m;
}

Label Nba::decode(LabelMask mask) const {
    Label out;
    for (std::size_t i = 0; i < props_.size(); ++i) {
        if (mask & (LabelMask{1} << i)) out.insert(props_[i]);
    }
    return out;
}

std::string Nba::guard_str(const Guard& g) const {
    if (g.is_true()) return "true";
    std::string s;
    for (std::size_t i = 0; i < props_.size(); ++i) {
        LabelMask bit = LabelMask{1} << i;
        if (g.pos & bit) s += (s.empty() ? "" : " && ") + props_[i];
        if (g.neg & bit) s += (s.empty() ? "!" : " && !") + props_[i];
    }
    return s;
}

std::size_t Nba::transition_count() const {
    std::size_t n = 0;
    for (const auto& ts : out_) n += ts.size();
    return n;
}

std::vector<StateId> Nba::accepting_states() const {
    std::vector<StateId> out;
    for (StateId q = 0; q < states_.size(); ++q) {
        if (states_[q].accepting) out.push_back(q);
    }
    return out;
}

bool Nba::accepts(const ltl::LassoWord& w) const {
    const std::size_t n = w.length();
    if (w.loop.empty()) throw std::invalid_argument("lasso loop must be non-empty");
    std::vector<LabelMask> letters(n);
    for (std::size_t i = 0; i < n; ++i) letters[i] = encode(w.at(i));

    const std::size_t total = states_.size() * n;
    auto id = [n](StateId q, std::size_t pos) { return static_cast<std::size_t>(q) * n + pos; };

    // Iterative Tarjan over the reachable product; a non-trivial SCC with an
    // accepting state witnesses an accepting lasso run.
    std::vector<std::size_t> index(total, kInfiniteDistance), low(total, 0);
    std::vector<char> on_stack(total, 0);
    std::vector<std::size_t> stack;
    std::size_t counter = 0;

    struct Frame {
        std::size_t node;
        std::size_t edge;
    };

    auto successors = [&](std::size_t node, std::vector<std::size_t>& out) {
        out.clear();
        StateId q = static_cast<StateId>(node / n);
        std::size_t pos = node % n;
        std::size_t next = w.successor(pos);
        for (const auto& t : out_[q]) {
            if (t.guard.admits(letters[pos])) out.push_back(id(t.target, next));
        }
    };

    std::vector<std::vector<std::size_t>> succ_cache(total);
    std::vector<char> expanded(total, 0);

    for (StateId q0 : initial_) {
        std::size_t root = id(q0, 0);
        if (index[root] != kInfiniteDistance) continue;
        std::vector<Frame> call;
        call.push_back({root, 0});
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            Frame& fr = call.back();
            if (!expanded[fr.node]) {
                successors(fr.node, succ_cache[fr.node]);
                expanded[fr.node] = 1;
            }
            const auto& succ = succ_cache[fr.node];
            if (fr.edge < succ.size()) {
                std::size_t m = succ[fr.edge++];
                if (index[m] == kInfiniteDistance) {
                    index[m] = low[m] = counter++;
                    stack.push_back(m);
                    on_stack[m] = 1;
                    call.push_back({m, 0});
                } else if (on_stack[m]) {
                    low[fr.node] = std::min(low[fr.node], index[m]);
                }
                continue;
            }
            std::size_t v = fr.node;
            if (low[v] == index[v]) {
                std::vector<std::size_t> comp;
                while (true) {
                    std::size_t x = stack.back();
                    stack.pop_back();
                    on_stack[x] = 0;
                    comp.push_back(x);
                    if (x == v) break;
                }
                bool nontrivial = comp.size() > 1;
                if (!nontrivial) {
                    for (std::size_t s : succ_cache[v]) {
                        if (s == v) nontrivial = true;
                    }
                }
                if (nontrivial) {
                    for (std::size_t x : comp) {
                        if (states_[x / n].accepting) return true;
                    }
                }
            }
            call.pop_back();
            if (!call.empty()) {
                std::size_t parent = call.back().node;
                low[parent] = std::min(low[parent], low[v]);
            }
        }
    }
    return false;
}

std::string Nba::to_dot(const std::string& name, const std::vector<StateId>& highlight) const {
    std::ostringstream os;
    os << "digraph \"" << name << "\" {\n  rankdir=LR;\n  node [shape=circle];\n";
    for (StateId q = 0; q < states_.size(); ++q) {
        bool hl = std::find(highlight.begin(), highlight.end(), q) != highlight.end();
        std::string label = states_[q].descriptor;
        std::string escaped;
        for (char c : label) {
            if (c == '"') escaped += "\\\"";
            else escaped += c;
        }
        os << "  q" << q << " [label=\"q" << q << "\\n" << escaped << "\\nd=";
        if (dist_[q] == kInfiniteDistance) os << "inf";
        else os << dist_[q];
        os << "\"";
        if (states_[q].accepting) os << ", shape=doublecircle";
        if (hl) os << ", style=filled, fillcolor=\"#9be49b\"";
        os << "];\n";
    }
    for (StateId q : initial_) os << "  init" << q << " [shape=point];\n  init" << q << " -> q" << q << ";\n";
    for (StateId q = 0; q < states_.size(); ++q) {
        for (const auto& t : out_[q]) {
            os << "  q" << q << " -> q" << t.target << " [label=\"" << guard_str(t.guard) << "\"];\n";
        }
    }
    os << "}\n";
    return os.str();
}

bool ReachableSet::contains(StateId q) const { return std::binary_search(states.begin(), states.end(), q); }

ReachableSet initial_reachable(const Nba& a, std::size_t mission) {
    ReachableSet r;
    r.mission = mission;
    r.states = a.initial();
    return r;
}

ReachableSet advance(const Nba& a, const ReachableSet& r, LabelMask obs) {
    ReachableSet out;
    out.mission = r.mission;
    for (StateId q : r.states) {
        for (const auto& t : a.transitions(q)) {
            if (t.guard.admits(obs)) out.states.push_back(t.target);
        }
    }
    std::sort(out.states.begin(), out.states.end());
    out.states.erase(std::unique(out.states.begin(), out.states.end()), out.states.end());
    return out;
}

ReachableSet advance(const Nba& a, const ReachableSet& r, const Label& obs) { return advance(a, r, a.encode(obs)); }

std::size_t distance_to_accept(const Nba& a, StateId q) { return a.distance(q); }

std::size_t min_distance(const Nba& a, const ReachableSet& r) {
    std::size_t best = kInfiniteDistance;
    for (StateId q : r.states) best = std::min(best, a.distance(q));
    return best;
}

bool intersects_accepting(const Nba& a, const ReachableSet& r) {
    return std::any_of(r.states.begin(), r.states.end(), [&](StateId q) { return a.accepting(q); });
}

ReachableSet set_union(const ReachableSet& a, const ReachableSet& b) {
    ReachableSet out;
    out.mission = a.mission;
    std::set_union(a.states.begin(), a.states.end(), b.states.begin(), b.states.end(),
                   std::back_inserter(out.states));
    return out;
}

}  // namespace swarm::automaton
