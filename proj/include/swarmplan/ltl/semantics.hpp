// Word semantics: labels, ultimately periodic words and the satisfaction
// relation evaluated directly on the formula tree.

#pragma once

#include <initializer_list>
#include <set>
#include <string>
#include <vector>

#include "swarmplan/ltl/formula.hpp"

namespace swarm::ltl {

/// Set of propositions true at one instant.
using Label = std::set<std::string>;

/// The infinite word prefix . loop^omega.
struct LassoWord {
    std::vector<Label> prefix;
    std::vector<Label> loop;

    LassoWord() = default;
    LassoWord(std::vector<Label> p, std::vector<Label> l);

    std::size_t length() const { return prefix.size() + loop.size(); }
    const Label& at(std::size_t position) const;
    /// Successor position in the folded word (loop wraps to its first letter).
    std::size_t successor(std::size_t position) const;

    std::string str() const;
};

/// Standard LTL satisfaction on an ultimately periodic word. Operates
/// position-wise with least/greatest fixpoints, independent of any automaton.
bool satisfies(const Formula& f, const LassoWord& w);

/// All lasso words with |prefix| <= max_prefix and 1 <= |loop| <= max_loop
/// whose letters are drawn from `alphabet`; calls `visit` for each.
template <typename Visit>
void for_each_lasso(const std::vector<Label>& alphabet, std::size_t max_prefix, std::size_t max_loop,
                    Visit&& visit);

}  // namespace swarm::ltl

#include "swarmplan/ltl/semantics_impl.hpp"
