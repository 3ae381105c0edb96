#include "swarmplan/ltl/formula.hpp"

#include <functional>
#include <sstream>

namespace swarm::ltl {

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::True: return "True";
        case Kind::False: return "False";
        case Kind::Atom: return "Atom";
        case Kind::Not: return "Not";
        case Kind::And: return "And";
        case Kind::Or: return "Or";
        case Kind::Implies: return "Implies";
        case Kind::Next: return "Next";
        case Kind::Until: return "Until";
        case Kind::Eventually: return "Eventually";
        case Kind::Always: return "Always";
    }
    return "?";
}

std::size_t arity(Kind k) {
    switch (k) {
        case Kind::True:
        case Kind::False:
        case Kind::Atom:
            return 0;
        case Kind::Not:
        case Kind::Next:
        case Kind::Eventually:
        case Kind::Always:
            return 1;
        case Kind::And:
        case Kind::Or:
        case Kind::Implies:
        case Kind::Until:
            return 2;
    }
    return 0;
}

Formula Formula::make(Kind kind, std::vector<Formula> children, std::string name) {
    if (children.size() != arity(kind)) {
        throw std::invalid_argument(std::string("wrong number of operands for ") + kind_name(kind));
    }
    if (kind == Kind::Atom && name.empty()) {
        throw std::invalid_argument("atomic proposition needs a name");
    }
    std::size_t h = std::hash<int>{}(static_cast<int>(kind)) * 0x9e3779b97f4a7c15ULL;
    h ^= std::hash<std::string>{}(name) + 0x9e3779b9 + (h << 6) + (h >> 2);
    for (const auto& c : children) {
        h ^= c.hash() + 0x9e3779b9 + (h << 6) + (h >> 2);
    }
    auto node = std::make_shared<Node>(Node{kind, std::move(name), std::move(children), h});
    return Formula(std::move(node));
}

Formula Formula::truth() {
    static const Formula t = make(Kind::True, {});
    return t;
}
Formula Formula::falsity() {
    static const Formula f = make(Kind::False, {});
    return f;
}
Formula Formula::atom(std::string name) { return make(Kind::Atom, {}, std::move(name)); }
Formula Formula::negation(Formula f) { return make(Kind::Not, {std::move(f)}); }
Formula Formula::conj(Formula a, Formula b) { return make(Kind::And, {std::move(a), std::move(b)}); }
Formula Formula::disj(Formula a, Formula b) { return make(Kind::Or, {std::move(a), std::move(b)}); }
Formula Formula::implies(Formula a, Formula b) {
    return make(Kind::Implies, {std::move(a), std::move(b)});
}
Formula Formula::next(Formula f) { return make(Kind::Next, {std::move(f)}); }
Formula Formula::until(Formula a, Formula b) { return make(Kind::Until, {std::move(a), std::move(b)}); }
Formula Formula::eventually(Formula f) { return make(Kind::Eventually, {std::move(f)}); }
Formula Formula::always(Formula f) { return make(Kind::Always, {std::move(f)}); }

bool Formula::is_literal() const {
    return kind() == Kind::Atom || (kind() == Kind::Not && lhs().kind() == Kind::Atom);
}

bool Formula::is_temporal() const {
    switch (kind()) {
        case Kind::Next:
        case Kind::Until:
        case Kind::Eventually:
        case Kind::Always:
            return true;
        default:
            return false;
    }
}

std::size_t Formula::size() const {
    std::size_t n = 1;
    for (const auto& c : children()) n += c.size();
    return n;
}

std::set<std::string> Formula::propositions() const {
    std::set<std::string> out;
    std::function<void(const Formula&)> walk = [&](const Formula& f) {
        if (f.is_atom()) out.insert(f.name());
        for (const auto& c : f.children()) walk(c);
    };
    walk(*this);
    return out;
}

namespace {

void print(const Formula& f, std::ostringstream& os) {
    switch (f.kind()) {
        case Kind::True: os << "true"; return;
        case Kind::False: os << "false"; return;
        case Kind::Atom: os << f.name(); return;
        case Kind::Not: os << "!"; print(f.lhs(), os); return;
        case Kind::Next: os << "X "; print(f.lhs(), os); return;
        case Kind::Eventually: os << "<>"; print(f.lhs(), os); return;
        case Kind::Always: os << "[]"; print(f.lhs(), os); return;
        default: break;
    }
    const char* op = "";
    switch (f.kind()) {
        case Kind::And: op = " && "; break;
        case Kind::Or: op = " || "; break;
        case Kind::Implies: op = " -> "; break;
        case Kind::Until: op = " U "; break;
        default: break;
    }
    os << "(";
    print(f.lhs(), os);
    os << op;
    print(f.rhs(), os);
    os << ")";
}

}  // namespace

std::string Formula::str() const {
    std::ostringstream os;
    print(*this, os);
    return os.str();
}

int compare(const Formula& a, const Formula& b) {
    if (a.node_ptr_equal(b)) return 0;
    if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
    if (a.kind() == Kind::Atom) {
        int c = a.name().compare(b.name());
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    for (std::size_t i = 0; i < a.children().size(); ++i) {
        int c = compare(a.child(i), b.child(i));
        if (c != 0) return c;
    }
    return 0;
}

bool operator==(const Formula& a, const Formula& b) {
    if (a.hash() != b.hash()) return false;
    return compare(a, b) == 0;
}

bool operator<(const Formula& a, const Formula& b) { return compare(a, b) < 0; }

namespace {

Formula nnf_neg(const Formula& f);

Formula nnf_pos(const Formula& f) {
    switch (f.kind()) {
        case Kind::True:
        case Kind::False:
        case Kind::Atom:
            return f;
        case Kind::Not:
            return nnf_neg(f.lhs());
        case Kind::And:
            return Formula::conj(nnf_pos(f.lhs()), nnf_pos(f.rhs()));
        case Kind::Or:
            return Formula::disj(nnf_pos(f.lhs()), nnf_pos(f.rhs()));
        case Kind::Implies:
            return Formula::disj(nnf_neg(f.lhs()), nnf_pos(f.rhs()));
        case Kind::Next:
            return Formula::next(nnf_pos(f.lhs()));
        case Kind::Until:
            return Formula::until(nnf_pos(f.lhs()), nnf_pos(f.rhs()));
        case Kind::Eventually:
            return Formula::eventually(nnf_pos(f.lhs()));
        case Kind::Always:
            return Formula::always(nnf_pos(f.lhs()));
    }
    return f;
}

// NNF of !f.
Formula nnf_neg(const Formula& f) {
    switch (f.kind()) {
        case Kind::True: return Formula::falsity();
        case Kind::False: return Formula::truth();
        case Kind::Atom: return Formula::negation(f);
        case Kind::Not: return nnf_pos(f.lhs());
        case Kind::And: return Formula::disj(nnf_neg(f.lhs()), nnf_neg(f.rhs()));
        case Kind::Or: return Formula::conj(nnf_neg(f.lhs()), nnf_neg(f.rhs()));
        case Kind::Implies: return Formula::conj(nnf_pos(f.lhs()), nnf_neg(f.rhs()));
        case Kind::Next: return Formula::next(nnf_neg(f.lhs()));
        case Kind::Eventually: return Formula::always(nnf_neg(f.lhs()));
        case Kind::Always: return Formula::eventually(nnf_neg(f.lhs()));
        case Kind::Until: {
            // !(a U b) == (!a R !b) == (!b U (!a && !b)) || [] !b
            Formula na = nnf_neg(f.lhs());
            Formula nb = nnf_neg(f.rhs());
            return Formula::disj(Formula::until(nb, Formula::conj(na, nb)), Formula::always(nb));
        }
    }
    return f;
}

}  // namespace

Formula to_nnf(const Formula& f) { return nnf_pos(f); }

bool is_nnf(const Formula& f) {
    if (f.kind() == Kind::Implies) return false;
    if (f.kind() == Kind::Not) return f.lhs().kind() == Kind::Atom;
    for (const auto& c : f.children()) {
        if (!is_nnf(c)) return false;
    }
    return true;
}

bool is_co_safe(const Formula& f) {
    if (f.kind() == Kind::Always) return false;
    for (const auto& c : f.children()) {
        if (!is_co_safe(c)) return false;
    }
    return true;
}

}  // namespace swarm::ltl
