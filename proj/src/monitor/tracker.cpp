#include "swarmplan/monitor/tracker.hpp"

#include <stdexcept>

namespace swarm::monitor {

using automaton::kInfiniteDistance;

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Progressing: return "progressing";
        case Verdict::Accepting: return "accepting";
        case Verdict::Violated: return "violated";
        case Verdict::Unreachable: return "unreachable";
    }
    return "?";
}

MissionTracker::MissionTracker(std::string mission, std::shared_ptr<const automaton::Nba> nba,
                               std::set<std::string> required)
    : mission_(std::move(mission)), nba_(std::move(nba)), required_(std::move(required)) {
    if (!nba_) throw std::invalid_argument("tracker needs an automaton");
    current_ = automaton::initial_reachable(*nba_);
    history_.push_back(distance());
}

std::size_t MissionTracker::distance() const { return automaton::min_distance(*nba_, current_); }

Verdict MissionTracker::observe(Millis time_ms, const ltl::Label& obs) {
    if (!trace_.empty() && time_ms < trace_.back().time_ms) {
        throw std::invalid_argument("observation at " + std::to_string(time_ms) + " ms is earlier than the last one");
    }
    current_ = automaton::advance(*nba_, current_, obs);
    for (const auto& p : obs) seen_.insert(p);
    TraceEntry e;
    e.time_ms = time_ms;
    e.label = obs;
    e.distance = distance();
    e.verdict = verdict();
    trace_.push_back(e);
    history_.push_back(e.distance);
    return e.verdict;
}

Verdict MissionTracker::verdict() const {
    if (current_.empty()) return Verdict::Violated;
    if (automaton::intersects_accepting(*nba_, current_)) return Verdict::Accepting;
    if (distance() == kInfiniteDistance) return Verdict::Unreachable;
    return Verdict::Progressing;
}

bool MissionTracker::complete() const {
    if (verdict() != Verdict::Accepting) return false;
    for (const auto& r : required_) {
        if (!seen_.count(r)) return false;
    }
    return true;
}

automaton::ReachableSet MissionTracker::replay() const {
    auto r = automaton::initial_reachable(*nba_);
    for (const auto& e : trace_) r = automaton::advance(*nba_, r, e.label);
    return r;
}

namespace {

nlohmann::json dist_json(std::size_t d) { return d == kInfiniteDistance ? nlohmann::json(nullptr) : nlohmann::json(d); }

}  // namespace

nlohmann::json MissionTracker::snapshot() const {
    const auto& a = *nba_;
    nlohmann::json j;
    j["mission"] = mission_;
    j["verdict"] = verdict_name(verdict());
    j["complete"] = complete();
    j["distance"] = dist_json(distance());
    j["current"] = current_.states;
    j["initial"] = a.initial();
    j["states"] = nlohmann::json::array();
    j["edges"] = nlohmann::json::array();
    for (automaton::StateId q = 0; q < a.size(); ++q) {
        j["states"].push_back({{"id", q}, {"accepting", a.accepting(q)}, {"distance", dist_json(a.distance(q))}});
        for (const auto& t : a.transitions(q)) {
            j["edges"].push_back({{"from", q}, {"to", t.target}, {"guard", a.guard_str(t.guard)}});
        }
    }
    j["trace"] = nlohmann::json::array();
    for (const auto& e : trace_) {
        j["trace"].push_back({{"time_ms", e.time_ms}, {"label", e.label}, {"distance", dist_json(e.distance)},
                              {"verdict", verdict_name(e.verdict)}});
    }
    return j;
}

std::string MissionTracker::to_dot() const { return nba_->to_dot(mission_, current_.states); }

}  // namespace swarm::monitor
