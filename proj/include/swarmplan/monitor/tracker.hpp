// Online tracking of one mission against its automaton.

#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "swarmplan/automaton/nba.hpp"
#include "swarmplan/geometry.hpp"

namespace swarm::monitor {

enum class Verdict { Progressing, Accepting, Violated, Unreachable };

const char* verdict_name(Verdict v);

struct TraceEntry {
    Millis time_ms = 0;
    ltl::Label label;
    std::size_t distance = 0;
    Verdict verdict = Verdict::Progressing;
};

class MissionTracker {
public:
    /// `required` lists the task propositions that must each be observed
    /// before the mission counts as complete.
    MissionTracker(std::string mission, std::shared_ptr<const automaton::Nba> nba, std::set<std::string> required = {});

    /// Throws std::invalid_argument when time goes backwards.
    Verdict observe(Millis time_ms, const ltl::Label& obs);

    /// accepting iff the reachable set meets QF; violated iff it is empty;
    /// unreachable iff no state in it can reach QF; else progressing.
    Verdict verdict() const;
    /// accepting and every required proposition seen.
    bool complete() const;

    const std::string& mission() const { return mission_; }
    const automaton::Nba& nba() const { return *nba_; }
    std::shared_ptr<const automaton::Nba> nba_ptr() const { return nba_; }
    const automaton::ReachableSet& reachable() const { return current_; }
    std::size_t distance() const;
    const std::vector<TraceEntry>& trace() const { return trace_; }
    /// Distance before any observation, then after each one.
    const std::vector<std::size_t>& distance_history() const { return history_; }
    const std::set<std::string>& required() const { return required_; }
    const std::set<std::string>& seen() const { return seen_; }

    /// Reachable set recomputed from the initial states over the trace.
    automaton::ReachableSet replay() const;

    /// States with per-state distance, edges with guards, current set and
    /// trace. Distances that are infinite are written as null.
    nlohmann::json snapshot() const;
    std::string to_dot() const;

private:
    std::string mission_;
    std::shared_ptr<const automaton::Nba> nba_;
    std::set<std::string> required_, seen_;
    automaton::ReachableSet current_;
    std::vector<TraceEntry> trace_;
    std::vector<std::size_t> history_;
};

}  // namespace swarm::monitor
