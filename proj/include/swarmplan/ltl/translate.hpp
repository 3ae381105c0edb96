// LTL to Büchi automaton translation by tableau expansion.
//
// States are obligation sets (subformulas still owed by the rest of the
// word). Co-safe formulas accept exactly in the empty obligation set, which
// carries a universal self-loop; that makes "some reachable state is
// accepting" coincide with "every obligation has been discharged", the
// reading the runtime monitor relies on. Other formulas get a level counter
// over their eventualities.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmplan/automaton/nba.hpp"
#include "swarmplan/ltl/formula.hpp"

namespace swarm::ltl {

struct TranslateStats {
    std::size_t obligation_states = 0;  // before any merging
    std::size_t merged_obligation_states = 0;
    std::size_t degeneralized_states = 0;  // before the final merge
    std::size_t acceptance_marks = 0;
};

struct TranslateOptions {
    std::size_t state_budget = 4096;
    /// Drop covers implied by a weaker cover of the same state.
    bool subsume = true;
    /// Merge states with identical outgoing behaviour after construction.
    bool merge_equivalent = true;
    /// Extra propositions to include in the automaton alphabet even when the
    /// formula does not mention them (task symbols for candidate scans).
    std::vector<std::string> extra_propositions;
    /// Filled with construction sizes when non-null.
    TranslateStats* stats = nullptr;
};

class StateBudgetExceeded : public std::runtime_error {
public:
    StateBudgetExceeded(std::size_t states_built, std::size_t budget, std::size_t formula_size);
    std::size_t states_built() const { return states_built_; }
    std::size_t budget() const { return budget_; }
    std::size_t formula_size() const { return formula_size_; }

private:
    std::size_t states_built_;
    std::size_t budget_;
    std::size_t formula_size_;
};

/// Translates `f` (normalized to NNF first if needed). The automaton accepts
/// exactly the lasso words that satisfy `f`.
automaton::Nba translate_to_nba(const Formula& f, const TranslateOptions& options = {});

}  // namespace swarm::ltl
