#include "swarmplan/ltl/translate.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

namespace swarm::ltl {

using automaton::Guard;
using automaton::LabelMask;
using automaton::Nba;
using automaton::NbaState;
using automaton::StateId;
using automaton::Transition;

StateBudgetExceeded::StateBudgetExceeded(std::size_t states_built, std::size_t budget, std::size_t formula_size)
    : std::runtime_error("automaton translation exceeded state budget: " + std::to_string(states_built) +
                         " states built, budget " + std::to_string(budget) + ", formula size " +
                         std::to_string(formula_size)),
      states_built_(states_built),
      budget_(budget),
      formula_size_(formula_size) {}

namespace {

struct Sub {
    Kind kind;
    int a = -1;
    int b = -1;
    int prop = -1;
    bool eventuality = false;
};

// One way of meeting a set of obligations on the current letter: a literal
// conjunction that must hold now and the obligations passed to the suffix.
struct Cover {
    Guard guard;
    std::vector<int> next;  // sorted

    friend bool operator==(const Cover&, const Cover&) = default;
    friend auto operator<=>(const Cover&, const Cover&) = default;
};

bool weaker_or_equal(const Guard& a, const Guard& b) {
    return (a.pos & ~b.pos) == 0 && (a.neg & ~b.neg) == 0;
}

bool subsumes(const Cover& a, const Cover& b) {
    return weaker_or_equal(a.guard, b.guard) &&
           std::includes(b.next.begin(), b.next.end(), a.next.begin(), a.next.end());
}

std::size_t weight(const Cover& c) {
    return static_cast<std::size_t>(__builtin_popcountll(c.guard.pos) + __builtin_popcountll(c.guard.neg)) +
           c.next.size();
}

void normalize(std::vector<Cover>& cs, bool subsume) {
    std::sort(cs.begin(), cs.end());
    cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
    if (!subsume) return;
    // A strict subsumer is lighter, so scanning by weight only needs to test
    // against covers already kept.
    std::stable_sort(cs.begin(), cs.end(), [](const Cover& a, const Cover& b) { return weight(a) < weight(b); });
    std::vector<Cover> kept;
    for (auto& c : cs) {
        bool drop = std::any_of(kept.begin(), kept.end(), [&](const Cover& k) { return subsumes(k, c); });
        if (!drop) kept.push_back(std::move(c));
    }
    std::sort(kept.begin(), kept.end());
    cs = std::move(kept);
}

std::vector<Cover> product(const std::vector<Cover>& x, const std::vector<Cover>& y, bool subsume) {
    std::vector<Cover> out;
    for (const auto& a : x) {
        for (const auto& b : y) {
            Guard g{a.guard.pos | b.guard.pos, a.guard.neg | b.guard.neg};
            if (!g.satisfiable()) continue;
            Cover c;
            c.guard = g;
            std::set_union(a.next.begin(), a.next.end(), b.next.begin(), b.next.end(), std::back_inserter(c.next));
            out.push_back(std::move(c));
        }
    }
    normalize(out, subsume);
    return out;
}

// Covers are built bottom-up per subformula and memoized, so a state's cover
// set is the product of its obligations' cover sets. A transition meets an
// eventuality when it does not pass that eventuality on as deferred.
class Tableau {
public:
    Tableau(const Formula& f, const std::vector<std::string>& props, bool subsume)
        : props_(props), subsume_(subsume) {
        root_ = intern(f);
        mark(root_, false);
        for (std::size_t id = 0; id < subs_.size(); ++id) {
            if (!subs_[id].eventuality) continue;
            if (recurrent_[id]) recurrent_marks_.push_back(static_cast<int>(id));
            else has_transient_ = true;
        }
        if (acceptance_marks() > 64) throw std::invalid_argument("formula has too many recurring eventualities");
    }

    int root() const { return root_; }
    /// One mark per eventuality that can be re-armed infinitely often, plus
    /// one shared mark for all the others (each of those is armed finitely
    /// often, so it suffices that none is being deferred).
    std::size_t acceptance_marks() const { return recurrent_marks_.size() + (has_transient_ ? 1 : 0); }
    const Formula& formula(int id) const { return formulas_[id]; }

    // The shared mark comes first: it stays unmet until the one-shot
    // obligations are all gone, so the level counter does not multiply
    // that part of the automaton.
    std::uint64_t marks(const std::vector<int>& next) const {
        std::uint64_t m = 0;
        std::size_t shift = 0;
        if (has_transient_) {
            bool pending = std::any_of(next.begin(), next.end(),
                                       [&](int id) { return subs_[id].eventuality && !recurrent_[id]; });
            if (!pending) m |= 1;
            shift = 1;
        }
        for (std::size_t i = 0; i < recurrent_marks_.size(); ++i) {
            if (!std::binary_search(next.begin(), next.end(), recurrent_marks_[i])) {
                m |= std::uint64_t{1} << (i + shift);
            }
        }
        return m;
    }

    const std::vector<Cover>& state_covers(const std::vector<int>& obligations) {
        auto it = state_cache_.find(obligations);
        if (it != state_cache_.end()) return it->second;
        std::vector<Cover> acc{Cover{}};
        for (int id : obligations) acc = product(acc, covers(id), subsume_);
        return state_cache_.emplace(obligations, std::move(acc)).first->second;
    }

private:
    int intern(const Formula& f) {
        auto it = ids_.find(f);
        if (it != ids_.end()) return it->second;
        Sub s;
        s.kind = f.kind();
        if (f.children().size() >= 1) s.a = intern(f.child(0));
        if (f.children().size() >= 2) s.b = intern(f.child(1));
        if (f.kind() == Kind::Atom) {
            s.prop = static_cast<int>(std::find(props_.begin(), props_.end(), f.name()) - props_.begin());
        }
        s.eventuality = f.kind() == Kind::Until || f.kind() == Kind::Eventually;
        int id = static_cast<int>(subs_.size());
        subs_.push_back(s);
        recurrent_.push_back(0);
        formulas_.push_back(f);
        memo_.emplace_back();
        done_.push_back(0);
        ids_.emplace(f, id);
        return id;
    }

    // An occurrence is recurrent when some ancestor is re-expanded on
    // unboundedly many steps: the body of [] or the left side of U.
    void mark(int id, bool recurrent) {
        if (recurrent) {
            if (recurrent_[id]) return;
            recurrent_[id] = 1;
        }
        const Sub& s = subs_[id];
        if (s.kind == Kind::Always) {
            mark(s.a, true);
        } else if (s.kind == Kind::Until) {
            mark(s.a, true);
            mark(s.b, recurrent);
        } else {
            if (s.a >= 0) mark(s.a, recurrent);
            if (s.b >= 0) mark(s.b, recurrent);
        }
    }

    static Cover defer(int id) {
        Cover c;
        c.next.push_back(id);
        return c;
    }

    const std::vector<Cover>& covers(int id) {
        if (done_[id]) return memo_[id];
        const Sub s = subs_[id];
        std::vector<Cover> out;
        switch (s.kind) {
            case Kind::True:
                out.push_back(Cover{});
                break;
            case Kind::False:
                break;
            case Kind::Atom: {
                Cover c;
                c.guard.pos = LabelMask{1} << s.prop;
                out.push_back(c);
                break;
            }
            case Kind::Not: {
                const Sub& c = subs_[s.a];
                if (c.kind == Kind::False) {
                    out.push_back(Cover{});
                } else if (c.kind == Kind::Atom) {
                    Cover k;
                    k.guard.neg = LabelMask{1} << c.prop;
                    out.push_back(k);
                } else if (c.kind != Kind::True) {
                    throw std::logic_error("tableau expects negation normal form");
                }
                break;
            }
            case Kind::And:
                out = product(covers(s.a), covers(s.b), subsume_);
                break;
            case Kind::Or:
                out = covers(s.a);
                for (const auto& c : covers(s.b)) out.push_back(c);
                normalize(out, subsume_);
                break;
            case Kind::Next:
                out.push_back(defer(s.a));
                break;
            case Kind::Until:
                out = covers(s.b);
                for (const auto& c : product(covers(s.a), {defer(id)}, subsume_)) out.push_back(c);
                normalize(out, subsume_);
                break;
            case Kind::Eventually:
                out = covers(s.a);
                out.push_back(defer(id));
                normalize(out, subsume_);
                break;
            case Kind::Always:
                out = product(covers(s.a), {defer(id)}, subsume_);
                break;
            case Kind::Implies:
                throw std::logic_error("tableau expects negation normal form");
        }
        memo_[id] = std::move(out);
        done_[id] = 1;
        return memo_[id];
    }

    std::vector<std::string> props_;
    bool subsume_;
    std::vector<Sub> subs_;
    std::vector<Formula> formulas_;
    std::map<Formula, int> ids_;
    std::vector<char> recurrent_;
    std::vector<int> recurrent_marks_;
    bool has_transient_ = false;
    std::vector<std::vector<Cover>> memo_;
    std::vector<char> done_;
    std::map<std::vector<int>, std::vector<Cover>> state_cache_;
    int root_ = -1;
};

// Shrinks a state's edge list without changing the accepted letters per
// target: drops guards implied by a weaker guard to the same target and
// joins pairs that differ only in the polarity of one literal.
void simplify_edges(std::vector<Transition>& ts) {
    auto literals = [](const Guard& g) { return __builtin_popcountll(g.pos) + __builtin_popcountll(g.neg); };
    bool changed = true;
    while (changed) {
        changed = false;
        std::sort(ts.begin(), ts.end(), [&](const Transition& a, const Transition& b) {
            if (a.target != b.target) return a.target < b.target;
            if (literals(a.guard) != literals(b.guard)) return literals(a.guard) < literals(b.guard);
            return a.guard < b.guard;
        });
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
        std::vector<Transition> kept;
        std::size_t group = 0;
        for (const auto& t : ts) {
            if (!kept.empty() && kept.back().target != t.target) group = kept.size();
            bool drop = false;
            for (std::size_t k = group; k < kept.size() && !drop; ++k) {
                drop = weaker_or_equal(kept[k].guard, t.guard);
            }
            if (!drop) kept.push_back(t);
        }
        ts = std::move(kept);
        std::vector<char> used(ts.size(), 0);
        std::vector<Transition> merged;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            if (used[i]) continue;
            for (std::size_t j = i + 1; j < ts.size(); ++j) {
                if (ts[i].target != ts[j].target) break;
                if (used[j]) continue;
                const Guard& a = ts[i].guard;
                const Guard& b = ts[j].guard;
                LabelMask flip = a.pos ^ b.pos;
                if (flip == 0 || (flip & (flip - 1)) != 0) continue;
                if ((a.neg ^ b.neg) != flip) continue;
                if (((a.pos | b.pos) & flip) != flip || ((a.neg | b.neg) & flip) != flip) continue;
                if ((a.pos & ~flip) != (b.pos & ~flip) || (a.neg & ~flip) != (b.neg & ~flip)) continue;
                merged.push_back({Guard{a.pos & ~flip, a.neg & ~flip}, ts[i].target});
                used[i] = used[j] = 1;
                changed = true;
                break;
            }
        }
        for (std::size_t i = 0; i < ts.size(); ++i) {
            if (!used[i]) merged.push_back(ts[i]);
        }
        ts = std::move(merged);
    }
    std::sort(ts.begin(), ts.end());
}

std::string describe(const Tableau& t, const std::vector<int>& obligations) {
    if (obligations.empty()) return "true";
    std::vector<std::string> parts;
    for (int id : obligations) parts.push_back(t.formula(id).str());
    std::sort(parts.begin(), parts.end());
    std::string s;
    for (const auto& p : parts) {
        if (!s.empty()) s += " && ";
        s += p;
    }
    return s;
}

// Intermediate automaton whose states carry an acceptance colour: the mark
// vector before degeneralization, the accepting flag after it.
struct Graph {
    std::vector<std::string> descriptor;
    std::vector<std::uint64_t> colour;
    std::vector<std::vector<Transition>> out;
    StateId initial = 0;

    std::size_t size() const { return colour.size(); }
};

// Quotient by the coarsest partition that respects colours and guarded
// edges; states in one block are bisimilar, so the language is unchanged.
// Blocks are numbered by BFS order from the initial state.
Graph quotient(const Graph& g) {
    const std::size_t n = g.size();
    std::vector<std::size_t> block(n);
    {
        std::map<std::uint64_t, std::size_t> c;
        for (StateId q = 0; q < n; ++q) block[q] = c.emplace(g.colour[q], c.size()).first->second;
    }
    std::size_t blocks = 0;
    while (true) {
        std::map<std::pair<std::size_t, std::vector<std::pair<Guard, std::size_t>>>, std::size_t> sig;
        std::vector<std::size_t> next(n);
        for (StateId q = 0; q < n; ++q) {
            std::vector<std::pair<Guard, std::size_t>> edges;
            for (const auto& t : g.out[q]) edges.emplace_back(t.guard, block[t.target]);
            std::sort(edges.begin(), edges.end());
            edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
            auto key = std::make_pair(block[q], std::move(edges));
            auto it = sig.find(key);
            if (it == sig.end()) it = sig.emplace(std::move(key), sig.size()).first;
            next[q] = it->second;
        }
        std::size_t count = sig.size();
        block = std::move(next);
        if (count == blocks) break;
        blocks = count;
    }
    std::vector<StateId> rep;
    std::map<std::size_t, StateId> renum;
    std::deque<StateId> queue{g.initial};
    renum[block[g.initial]] = 0;
    rep.push_back(g.initial);
    while (!queue.empty()) {
        StateId q = queue.front();
        queue.pop_front();
        for (const auto& t : g.out[q]) {
            if (renum.emplace(block[t.target], static_cast<StateId>(rep.size())).second) {
                rep.push_back(t.target);
                queue.push_back(t.target);
            }
        }
    }
    Graph r;
    r.initial = 0;
    for (StateId q : rep) {
        r.descriptor.push_back(g.descriptor[q]);
        r.colour.push_back(g.colour[q]);
        std::vector<Transition> ts;
        for (const auto& t : g.out[q]) ts.push_back({t.guard, renum.at(block[t.target])});
        simplify_edges(ts);
        r.out.push_back(std::move(ts));
    }
    return r;
}

}  // namespace

Nba translate_to_nba(const Formula& input, const TranslateOptions& options) {
    Formula f = is_nnf(input) ? input : to_nnf(input);
    std::set<std::string> prop_set = f.propositions();
    for (const auto& p : options.extra_propositions) prop_set.insert(p);
    std::vector<std::string> props(prop_set.begin(), prop_set.end());
    if (props.size() > automaton::kMaxPropositions) {
        throw std::invalid_argument("formula uses more than 64 propositions");
    }

    Tableau tab(f, props, options.subsume);
    const bool co_safe = is_co_safe(f);
    const std::size_t top = co_safe ? 0 : tab.acceptance_marks();

    // Obligation-set automaton. Marks are a function of the obligation set
    // because a transition meets an eventuality exactly when its target no
    // longer owes it.
    Graph gba;
    {
        std::map<std::vector<int>, StateId> ids;
        std::vector<std::vector<int>> keys;
        std::deque<StateId> queue;
        auto state_of = [&](const std::vector<int>& k) -> StateId {
            auto it = ids.find(k);
            if (it != ids.end()) return it->second;
            if (keys.size() >= options.state_budget) {
                throw StateBudgetExceeded(keys.size() + 1, options.state_budget, f.size());
            }
            StateId id = static_cast<StateId>(keys.size());
            ids.emplace(k, id);
            keys.push_back(k);
            gba.descriptor.push_back(describe(tab, k));
            gba.colour.push_back(co_safe ? (k.empty() ? 1 : 0) : tab.marks(k));
            gba.out.emplace_back();
            queue.push_back(id);
            return id;
        };
        std::vector<int> init_obl;
        if (f.kind() != Kind::True) init_obl.push_back(tab.root());
        gba.initial = state_of(init_obl);
        while (!queue.empty()) {
            StateId q = queue.front();
            queue.pop_front();
            std::vector<Transition> ts;
            for (const auto& c : tab.state_covers(keys[q])) ts.push_back({c.guard, state_of(c.next)});
            if (options.subsume) simplify_edges(ts);
            gba.out[q] = std::move(ts);
        }
    }
    TranslateStats st;
    st.acceptance_marks = top;
    st.obligation_states = gba.size();
    if (options.merge_equivalent) gba = quotient(gba);
    st.merged_obligation_states = gba.size();
    st.degeneralized_states = gba.size();

    Graph nba;
    if (co_safe || top == 0) {
        nba = gba;
        if (top == 0 && !co_safe) std::fill(nba.colour.begin(), nba.colour.end(), 1);
    } else {
        // Counter degeneralization: level i waits for mark i; reaching the
        // top level means every mark was met since the last visit.
        std::map<std::pair<StateId, std::size_t>, StateId> ids;
        std::vector<std::pair<StateId, std::size_t>> keys;
        std::deque<StateId> queue;
        auto state_of = [&](StateId g, std::size_t level) -> StateId {
            auto key = std::make_pair(g, level);
            auto it = ids.find(key);
            if (it != ids.end()) return it->second;
            if (keys.size() >= options.state_budget) {
                throw StateBudgetExceeded(keys.size() + 1, options.state_budget, f.size());
            }
            StateId id = static_cast<StateId>(keys.size());
            ids.emplace(key, id);
            keys.push_back(key);
            nba.descriptor.push_back(gba.descriptor[g] + " [" + std::to_string(level) + "/" + std::to_string(top) + "]");
            nba.colour.push_back(level == top ? 1 : 0);
            nba.out.emplace_back();
            queue.push_back(id);
            return id;
        };
        auto climb = [&](std::size_t from, std::uint64_t marks) {
            std::size_t level = from == top ? 0 : from;
            while (level < top && (marks >> level & 1)) ++level;
            return level;
        };
        nba.initial = state_of(gba.initial, 0);
        while (!queue.empty()) {
            StateId q = queue.front();
            queue.pop_front();
            auto [g, level] = keys[q];
            std::vector<Transition> ts;
            for (const auto& t : gba.out[g]) {
                ts.push_back({t.guard, state_of(t.target, climb(level, gba.colour[t.target]))});
            }
            nba.out[q] = std::move(ts);
        }
        st.degeneralized_states = nba.size();
        if (options.merge_equivalent) nba = quotient(nba);
    }
    if (options.stats) *options.stats = st;

    std::vector<NbaState> states;
    for (std::size_t q = 0; q < nba.size(); ++q) states.push_back({nba.descriptor[q], nba.colour[q] != 0});
    return Nba(props, std::move(states), {nba.initial}, std::move(nba.out));
}

}  // namespace swarm::ltl
