// Nondeterministic Büchi automata with guarded transitions.
//
// Guards are conjunctions of literals over the automaton's proposition list,
// stored as two bit masks. Labels are encoded against the same list; a label
// may mention propositions the automaton does not know, they are ignored.

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "swarmplan/ltl/semantics.hpp"

namespace swarm::automaton {

using StateId = std::uint32_t;
using LabelMask = std::uint64_t;
using ltl::Label;

inline constexpr std::size_t kMaxPropositions = 64;
inline constexpr std::size_t kInfiniteDistance = std::numeric_limits<std::size_t>::max();

struct Guard {
    LabelMask pos = 0;
    LabelMask neg = 0;

    bool satisfiable() const { return (pos & neg) == 0; }
    bool admits(LabelMask label) const { return (label & pos) == pos && (label & neg) == 0; }
    bool is_true() const { return pos == 0 && neg == 0; }

    friend bool operator==(const Guard&, const Guard&) = default;
    friend auto operator<=>(const Guard&, const Guard&) = default;
};

struct Transition {
    Guard guard;
    StateId target = 0;

    friend bool operator==(const Transition&, const Transition&) = default;
    friend auto operator<=>(const Transition&, const Transition&) = default;
};

struct NbaState {
    std::string descriptor;
    bool accepting = false;
};

class Nba {
public:
    Nba() = default;
    /// Validates the tuple (endpoints in range, guards satisfiable) and
    /// precomputes the distance of every state to the accepting set.
    Nba(std::vector<std::string> propositions, std::vector<NbaState> states, std::vector<StateId> initial,
        std::vector<std::vector<Transition>> transitions);

    const std::vector<std::string>& propositions() const { return props_; }
    std::optional<std::size_t> proposition_index(const std::string& name) const;
    bool has_proposition(const std::string& name) const { return proposition_index(name).has_value(); }

    LabelMask encode(const Label& label) const;
    Label decode(LabelMask mask) const;
    std::string guard_str(const Guard& g) const;

    std::size_t size() const { return states_.size(); }
    std::size_t transition_count() const;
    const NbaState& state(StateId q) const { return states_.at(q); }
    const std::vector<StateId>& initial() const { return initial_; }
    bool accepting(StateId q) const { return states_.at(q).accepting; }
    std::vector<StateId> accepting_states() const;
    const std::vector<Transition>& transitions(StateId q) const { return out_.at(q); }

    /// Hop count to the nearest accepting state; kInfiniteDistance if none.
    std::size_t distance(StateId q) const { return dist_.at(q); }

    /// Büchi acceptance of prefix . loop^omega.
    bool accepts(const ltl::LassoWord& w) const;

    /// Graphviz rendering; `highlight` states are filled.
    std::string to_dot(const std::string& name, const std::vector<StateId>& highlight = {}) const;

private:
    std::vector<std::string> props_;
    std::vector<NbaState> states_;
    std::vector<StateId> initial_;
    std::vector<std::vector<Transition>> out_;
    std::vector<std::size_t> dist_;
};

/// Current mission progress: the set of automaton states consistent with the
/// observations so far. Kept sorted and duplicate free.
struct ReachableSet {
    std::size_t mission = 0;
    std::vector<StateId> states;

    bool empty() const { return states.empty(); }
    bool contains(StateId q) const;
    friend bool operator==(const ReachableSet&, const ReachableSet&) = default;
    friend auto operator<=>(const ReachableSet&, const ReachableSet&) = default;
};

ReachableSet initial_reachable(const Nba& a, std::size_t mission = 0);

/// One observation step: every successor of a state in `r` over a transition
/// whose guard admits `obs`. The result may be empty.
ReachableSet advance(const Nba& a, const ReachableSet& r, const Label& obs);
ReachableSet advance(const Nba& a, const ReachableSet& r, LabelMask obs);

std::size_t distance_to_accept(const Nba& a, StateId q);
/// Minimum distance over the set; kInfiniteDistance for an empty set.
std::size_t min_distance(const Nba& a, const ReachableSet& r);
bool intersects_accepting(const Nba& a, const ReachableSet& r);

ReachableSet set_union(const ReachableSet& a, const ReachableSet& b);

}  // namespace swarm::automaton
