// Formula trees for linear temporal logic mission specifications.
//
// A Formula is an immutable value: copies share the underlying node, and
// structural equality / ordering compare the trees, not the pointers.

#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarm::ltl {

enum class Kind : std::uint8_t {
    True,
    False,
    Atom,
    Not,
    And,
    Or,
    Implies,
    Next,
    Until,
    Eventually,
    Always,
};

const char* kind_name(Kind k);
std::size_t arity(Kind k);

class Formula {
public:
    static Formula truth();
    static Formula falsity();
    static Formula atom(std::string name);
    static Formula negation(Formula f);
    static Formula conj(Formula a, Formula b);
    static Formula disj(Formula a, Formula b);
    static Formula implies(Formula a, Formula b);
    static Formula next(Formula f);
    static Formula until(Formula a, Formula b);
    static Formula eventually(Formula f);
    static Formula always(Formula f);

    /// Builds a node of the given kind; throws std::invalid_argument when the
    /// number of children does not match the kind's arity.
    static Formula make(Kind kind, std::vector<Formula> children, std::string name = {});

    Kind kind() const { return node_->kind; }
    const std::string& name() const { return node_->name; }
    const std::vector<Formula>& children() const { return node_->children; }
    const Formula& child(std::size_t i) const { return node_->children.at(i); }
    const Formula& lhs() const { return child(0); }
    const Formula& rhs() const { return child(1); }

    bool is_atom() const { return kind() == Kind::Atom; }
    bool is_literal() const;
    bool is_temporal() const;

    std::size_t size() const;
    std::size_t hash() const { return node_->hash; }
    bool node_ptr_equal(const Formula& o) const { return node_ == o.node_; }

    /// All proposition names occurring in the formula.
    std::set<std::string> propositions() const;

    /// Fully parenthesized text form accepted by parse_ltl.
    std::string str() const;

    friend bool operator==(const Formula& a, const Formula& b);
    friend bool operator!=(const Formula& a, const Formula& b) { return !(a == b); }
    friend bool operator<(const Formula& a, const Formula& b);

private:
    struct Node {
        Kind kind;
        std::string name;
        std::vector<Formula> children;
        std::size_t hash = 0;
    };
    explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    std::shared_ptr<const Node> node_;
};

/// Total structural order used for deterministic containers; returns <0, 0, >0.
int compare(const Formula& a, const Formula& b);

/// Negation normal form over the supported operator set. Implications are
/// eliminated, negations are pushed to the atoms, and a negated Until is
/// rewritten as (!b U (!a && !b)) || [] !b.
Formula to_nnf(const Formula& f);

bool is_nnf(const Formula& f);

/// True iff the only temporal operators are Next, Until and Eventually.
/// Expects a formula in negation normal form.
bool is_co_safe(const Formula& f);

}  // namespace swarm::ltl
