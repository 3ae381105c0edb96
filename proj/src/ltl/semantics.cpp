#include "swarmplan/ltl/semantics.hpp"

#include <sstream>
#include <stdexcept>

namespace swarm::ltl {

LassoWord::LassoWord(std::vector<Label> p, std::vector<Label> l) : prefix(std::move(p)), loop(std::move(l)) {
    if (loop.empty()) throw std::invalid_argument("lasso loop must be non-empty");
}

const Label& LassoWord::at(std::size_t position) const {
    if (position < prefix.size()) return prefix[position];
    return loop.at(position - prefix.size());
}

std::size_t LassoWord::successor(std::size_t position) const {
    return position + 1 < length() ? position + 1 : prefix.size();
}

std::string LassoWord::str() const {
    auto letters = [](const std::vector<Label>& ls) {
        std::string s;
        for (const auto& l : ls) {
            s += "{";
            bool first = true;
            for (const auto& p : l) {
                if (!first) s += ",";
                s += p;
                first = false;
            }
            s += "}";
        }
        return s;
    };
    return letters(prefix) + "(" + letters(loop) + ")^w";
}

namespace {

using Truth = std::vector<char>;

Truth eval(const Formula& f, const LassoWord& w) {
    const std::size_t n = w.length();
    Truth out(n, 0);
    switch (f.kind()) {
        case Kind::True:
            out.assign(n, 1);
            return out;
        case Kind::False:
            return out;
        case Kind::Atom:
            for (std::size_t i = 0; i < n; ++i) out[i] = w.at(i).count(f.name()) ? 1 : 0;
            return out;
        case Kind::Not: {
            Truth a = eval(f.lhs(), w);
            for (std::size_t i = 0; i < n; ++i) out[i] = !a[i];
            return out;
        }
        case Kind::And:
        case Kind::Or:
        case Kind::Implies: {
            Truth a = eval(f.lhs(), w);
            Truth b = eval(f.rhs(), w);
            for (std::size_t i = 0; i < n; ++i) {
                if (f.kind() == Kind::And) out[i] = a[i] && b[i];
                else if (f.kind() == Kind::Or) out[i] = a[i] || b[i];
                else out[i] = !a[i] || b[i];
            }
            return out;
        }
        case Kind::Next: {
            Truth a = eval(f.lhs(), w);
            for (std::size_t i = 0; i < n; ++i) out[i] = a[w.successor(i)];
            return out;
        }
        case Kind::Until:
        case Kind::Eventually: {
            Truth a = f.kind() == Kind::Until ? eval(f.lhs(), w) : Truth(n, 1);
            Truth b = eval(f.kind() == Kind::Until ? f.rhs() : f.lhs(), w);
            // Least fixpoint of X = b | (a & X[succ]); n+1 sweeps reach it.
            for (std::size_t sweep = 0; sweep <= n; ++sweep) {
                bool changed = false;
                for (std::size_t k = n; k-- > 0;) {
                    char v = b[k] || (a[k] && out[w.successor(k)]);
                    if (v != out[k]) {
                        out[k] = v;
                        changed = true;
                    }
                }
                if (!changed) break;
            }
            return out;
        }
        case Kind::Always: {
            Truth a = eval(f.lhs(), w);
            out.assign(n, 1);
            // Greatest fixpoint of X = a & X[succ].
            for (std::size_t sweep = 0; sweep <= n; ++sweep) {
                bool changed = false;
                for (std::size_t k = n; k-- > 0;) {
                    char v = a[k] && out[w.successor(k)];
                    if (v != out[k]) {
                        out[k] = v;
                        changed = true;
                    }
                }
                if (!changed) break;
            }
            return out;
        }
    }
    return out;
}

}  // namespace

bool satisfies(const Formula& f, const LassoWord& w) {
    if (w.loop.empty()) throw std::invalid_argument("lasso loop must be non-empty");
    return eval(f, w)[0] != 0;
}

}  // namespace swarm::ltl
