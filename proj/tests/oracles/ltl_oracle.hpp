// Reference LTL semantics and Büchi acceptance for lasso words, written
// against the formula tree and transition table only. Meant to cross-check
// ltl::satisfies and Nba::accepts, so it shares no code with either.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmplan/automaton/nba.hpp"
#include "swarmplan/ltl/formula.hpp"

namespace oracle {

using Letter = std::set<std::string>;

struct Lasso {
    std::vector<Letter> prefix;
    std::vector<Letter> loop;

    std::size_t size() const { return prefix.size() + loop.size(); }
    const Letter& at(std::size_t i) const { return i < prefix.size() ? prefix[i] : loop[i - prefix.size()]; }
    std::size_t next(std::size_t i) const { return i + 1 < size() ? i + 1 : prefix.size(); }
};

// Recursive evaluation with explicit witness search. From position i the
// suffix visits at most size() distinct folded positions before repeating,
// so witnesses for U and F are searched within that horizon and G checks
// that same window.
class WordSemantics {
public:
    explicit WordSemantics(const swarm::ltl::Formula& f) { root_ = index(f); }

    bool operator()(const Lasso& w) {
        w_ = &w;
        memo_.assign(subs_.size() * w.size(), -1);
        return holds(root_, 0);
    }

private:
    struct Sub {
        swarm::ltl::Kind kind;
        std::string name;
        std::size_t a = 0, b = 0;
    };

    std::size_t index(const swarm::ltl::Formula& f) {
        auto it = ids_.find(f);
        if (it != ids_.end()) return it->second;
        Sub s{f.kind(), f.name()};
        if (!f.children().empty()) s.a = index(f.child(0));
        if (f.children().size() > 1) s.b = index(f.child(1));
        subs_.push_back(s);
        ids_.emplace(f, subs_.size() - 1);
        return subs_.size() - 1;
    }

    bool holds(std::size_t f, std::size_t i) {
        using swarm::ltl::Kind;
        const Lasso& w = *w_;
        signed char m = memo_[f * w.size() + i];
        if (m >= 0) return m;
        const Sub& s = subs_[f];
        bool r = false;
        std::size_t n = w.size();
        switch (s.kind) {
            case Kind::True: r = true; break;
            case Kind::False: r = false; break;
            case Kind::Atom: r = w.at(i).count(s.name) > 0; break;
            case Kind::Not: r = !holds(s.a, i); break;
            case Kind::And: r = holds(s.a, i) && holds(s.b, i); break;
            case Kind::Or: r = holds(s.a, i) || holds(s.b, i); break;
            case Kind::Implies: r = !holds(s.a, i) || holds(s.b, i); break;
            case Kind::Next: r = holds(s.a, w.next(i)); break;
            case Kind::Until: {
                std::size_t j = i;
                for (std::size_t k = 0; k <= n; ++k) {
                    if (holds(s.b, j)) {
                        r = true;
                        break;
                    }
                    if (!holds(s.a, j)) break;
                    j = w.next(j);
                }
                break;
            }
            case Kind::Eventually: {
                std::size_t j = i;
                for (std::size_t k = 0; k <= n && !r; ++k, j = w.next(j)) r = holds(s.a, j);
                break;
            }
            case Kind::Always: {
                r = true;
                std::size_t j = i;
                for (std::size_t k = 0; k <= n && r; ++k, j = w.next(j)) r = holds(s.a, j);
                break;
            }
        }
        memo_[f * w.size() + i] = r ? 1 : 0;
        return r;
    }

    const Lasso* w_ = nullptr;
    std::vector<Sub> subs_;
    std::map<swarm::ltl::Formula, std::size_t> ids_;
    std::size_t root_ = 0;
    std::vector<signed char> memo_;
};

inline bool satisfies(const swarm::ltl::Formula& f, const Lasso& w) { return WordSemantics(f)(w); }

// Product of automaton states and folded word positions. Accepting iff an
// accepting product node whose position lies in the loop is reachable from
// an initial node and reaches itself again.
inline bool nba_accepts(const swarm::automaton::Nba& a, const Lasso& w) {
    if (w.loop.empty()) throw std::invalid_argument("lasso loop must be non-empty");
    const std::size_t n = w.size();
    const auto& props = a.propositions();
    std::vector<std::uint64_t> letter(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t b = 0; b < props.size(); ++b) {
            if (w.at(i).count(props[b])) letter[i] |= std::uint64_t{1} << b;
        }
    }
    auto id = [n](std::size_t q, std::size_t i) { return q * n + i; };
    auto succ = [&](std::size_t x, std::vector<std::size_t>& out) {
        out.clear();
        std::size_t q = x / n, i = x % n;
        for (const auto& t : a.transitions(static_cast<swarm::automaton::StateId>(q))) {
            if ((letter[i] & t.guard.pos) == t.guard.pos && (letter[i] & t.guard.neg) == 0) {
                out.push_back(id(t.target, w.next(i)));
            }
        }
    };
    std::vector<char> seen(a.size() * n, 0);
    std::vector<std::size_t> stack, buf, order;
    for (auto q : a.initial()) {
        if (!seen[id(q, 0)]) {
            seen[id(q, 0)] = 1;
            stack.push_back(id(q, 0));
        }
    }
    while (!stack.empty()) {
        std::size_t x = stack.back();
        stack.pop_back();
        order.push_back(x);
        succ(x, buf);
        for (std::size_t y : buf) {
            if (!seen[y]) {
                seen[y] = 1;
                stack.push_back(y);
            }
        }
    }
    // Accepting loop nodes that can come back to themselves.
    std::vector<char> back(a.size() * n);
    for (std::size_t x : order) {
        std::size_t q = x / n, i = x % n;
        if (!a.accepting(static_cast<swarm::automaton::StateId>(q)) || i < w.prefix.size()) continue;
        std::fill(back.begin(), back.end(), 0);
        succ(x, buf);
        stack.assign(buf.begin(), buf.end());
        for (std::size_t y : buf) back[y] = 1;
        while (!stack.empty()) {
            std::size_t y = stack.back();
            stack.pop_back();
            if (y == x) return true;
            succ(y, buf);
            for (std::size_t z : buf) {
                if (!back[z]) {
                    back[z] = 1;
                    stack.push_back(z);
                }
            }
        }
    }
    return false;
}

// Every lasso with |prefix| <= max_prefix and 1 <= |loop| <= max_loop over
// all subsets of `props`.
template <typename F>
void each_lasso(const std::vector<std::string>& props, std::size_t max_prefix, std::size_t max_loop, F&& f) {
    std::vector<Letter> letters;
    for (std::size_t m = 0; m < (std::size_t{1} << props.size()); ++m) {
        Letter l;
        for (std::size_t b = 0; b < props.size(); ++b) {
            if ((m >> b) & 1u) l.insert(props[b]);
        }
        letters.push_back(l);
    }
    std::size_t k = letters.size();
    for (std::size_t p = 0; p <= max_prefix; ++p) {
        for (std::size_t q = 1; q <= max_loop; ++q) {
            std::size_t len = p + q;
            std::size_t total = 1;
            for (std::size_t i = 0; i < len; ++i) total *= k;
            std::vector<std::size_t> digit(len, 0);
            for (std::size_t c = 0; c < total; ++c) {
                std::size_t x = c;
                for (std::size_t i = 0; i < len; ++i) {
                    digit[i] = x % k;
                    x /= k;
                }
                Lasso w;
                for (std::size_t i = 0; i < p; ++i) w.prefix.push_back(letters[digit[i]]);
                for (std::size_t i = p; i < len; ++i) w.loop.push_back(letters[digit[i]]);
                f(w);
            }
        }
    }
}

struct CorpusEntry {
    std::string formula;
    std::vector<std::string> alphabet;  // at most 3 propositions
};

// One entry per line: "formula ; p q r". Lines starting with # are skipped.
inline std::vector<CorpusEntry> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<CorpusEntry> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto semi = line.rfind(';');
        if (semi == std::string::npos) throw std::runtime_error("corpus line without alphabet: " + line);
        CorpusEntry e;
        e.formula = line.substr(0, semi);
        std::istringstream ps(line.substr(semi + 1));
        std::string p;
        while (ps >> p) e.alphabet.push_back(p);
        out.push_back(e);
    }
    return out;
}

}  // namespace oracle
