#include "swarmplan/sched/rolling.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <set>

namespace swarm::sched {

const char* unit_state_name(UnitState s) {
    switch (s) {
        case UnitState::Pool: return "pool";
        case UnitState::Dispatched: return "dispatched";
        case UnitState::Running: return "running";
        case UnitState::Done: return "done";
    }
    return "?";
}

RollingState::RollingState(RollingOptions opts) : opts_(std::move(opts)) {
    if (opts_.batch == 0) throw std::invalid_argument("batch size must be positive");
    if (!(opts_.epsilon > 0.0 && opts_.epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
}

void RollingState::add(PoolEntry e) {
    const std::string id = e.sub.id;
    if (entries_.count(id)) throw std::invalid_argument("duplicate subtask " + id);
    for (const auto& p : e.preds) {
        if (!entries_.count(p)) throw std::invalid_argument("subtask " + id + " waits on unknown " + p);
    }
    Slot s;
    s.e = std::move(e);
    entries_.emplace(id, std::move(s));
    order_.push_back(id);
}

UnitState RollingState::state(const std::string& id) const { return entries_.at(id).st; }
const PoolEntry& RollingState::entry(const std::string& id) const { return entries_.at(id).e; }

std::vector<std::string> RollingState::ids_in(UnitState s) const {
    std::vector<std::string> out;
    for (const auto& id : order_) {
        if (entries_.at(id).st == s) out.push_back(id);
    }
    return out;
}

bool RollingState::finished() const {
    return std::all_of(entries_.begin(), entries_.end(), [](const auto& kv) { return kv.second.st == UnitState::Done; });
}

std::vector<std::string> RollingState::window(std::vector<std::string>* deferred, std::vector<std::string>* blocked) const {
    std::vector<std::string> out;
    std::set<std::string> taken;
    double risk = 0.0;
    for (const auto& id : order_) {
        const auto& slot = entries_.at(id);
        if (slot.st != UnitState::Pool) continue;
        bool ok = std::all_of(slot.e.preds.begin(), slot.e.preds.end(), [&](const std::string& p) {
            auto it = entries_.find(p);
            if (it == entries_.end()) return true;
            return it->second.st != UnitState::Pool || taken.count(p) > 0;
        });
        if (!ok) continue;
        double r = slot.e.risk();
        if (r > opts_.epsilon + 1e-12) {
            if (blocked) blocked->push_back(id);
            continue;
        }
        if (out.size() >= opts_.batch || risk + r > opts_.epsilon + 1e-12) {
            if (deferred) deferred->push_back(id);
            continue;
        }
        risk += r;
        taken.insert(id);
        out.push_back(id);
    }
    return out;
}

std::vector<std::string> RollingState::recall() {
    std::vector<std::string> out;
    for (const auto& id : order_) {
        auto& s = entries_.at(id);
        if (s.st != UnitState::Dispatched) continue;
        s.st = UnitState::Pool;
        s.robots.clear();
        out.push_back(id);
    }
    queues_.clear();
    return out;
}

WindowPlan RollingState::replan(Millis now, const std::vector<SchedRobot>& robots, const DurationFn& duration) {
    recall();
    WindowPlan plan;
    auto w = window(&plan.deferred, &plan.blocked);
    completions_since_solve_ = 0;
    if (w.empty()) return plan;

    SchedInstance& inst = plan.instance;
    inst.now = now;
    inst.epsilon = opts_.epsilon;
    inst.robots = robots;
    for (auto& r : inst.robots) r.available_ms = std::max(now, r.available_ms);
    std::map<std::string, std::size_t> pos;
    for (const auto& id : w) {
        const auto& slot = entries_.at(id);
        SchedSubtask sub = slot.e.sub;
        if (duration) sub.duration_ms = std::max<Millis>(1, duration(slot.e, inst.robots));
        sub.release_ms = std::max(now, sub.release_ms);
        for (const auto& p : slot.e.preds) {
            auto it = entries_.find(p);
            if (it == entries_.end()) continue;
            const auto& ps = it->second;
            if (ps.st == UnitState::Done) sub.release_ms = std::max(sub.release_ms, *ps.done);
            if (ps.st == UnitState::Running) sub.release_ms = std::max(sub.release_ms, ps.planned_end);
        }
        pos[id] = inst.subtasks.size();
        inst.subtasks.push_back(std::move(sub));
    }
    for (const auto& id : w) {
        for (const auto& p : entries_.at(id).e.preds) {
            auto it = pos.find(p);
            if (it != pos.end()) inst.precedence.emplace_back(it->second, pos.at(id));
        }
    }
    std::vector<Vec2> pts;
    double v = 0.0;
    for (const auto& r : inst.robots) {
        pts.push_back(r.position);
        v = v == 0.0 ? r.velocity : std::min(v, r.velocity);
    }
    inst.big_m = big_m_bound(now, inst.subtasks, pts, v > 0.0 ? v : 2.0);

    auto t0 = std::chrono::steady_clock::now();
    plan.assignment = solve(inst, opts_.solver);
    plan.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    plan.solved = true;
    ++solves_;

    for (std::size_t s = 0; s < inst.subtasks.size(); ++s) {
        auto& slot = entries_.at(w[s]);
        slot.st = UnitState::Dispatched;
        slot.e.sub.duration_ms = inst.subtasks[s].duration_ms;
        slot.robots.clear();
        for (std::size_t r : plan.assignment.robots[s]) slot.robots.push_back(inst.robots[r].id);
        slot.planned_start = plan.assignment.start_ms[s];
        slot.planned_end = plan.assignment.end_ms(inst, s);
    }
    for (std::size_t r = 0; r < inst.robots.size(); ++r) {
        auto& q = queues_[inst.robots[r].id];
        for (std::size_t s : plan.assignment.sequence[r]) q.push_back(w[s]);
    }
    return plan;
}

const std::deque<std::string>& RollingState::queue(const std::string& robot) const {
    static const std::deque<std::string> empty;
    auto it = queues_.find(robot);
    return it == queues_.end() ? empty : it->second;
}

std::optional<std::string> RollingState::next(const std::string& robot) const {
    const auto& q = queue(robot);
    if (q.empty()) return std::nullopt;
    return q.front();
}

const std::vector<std::string>& RollingState::robots_of(const std::string& id) const { return entries_.at(id).robots; }

void RollingState::mark_started(const std::string& id, Millis t) {
    auto& s = entries_.at(id);
    if (s.st != UnitState::Dispatched) throw std::logic_error("subtask " + id + " is not dispatched");
    s.st = UnitState::Running;
    s.started = t;
    s.planned_end = t + s.e.sub.duration_ms;
    for (auto& [_, q] : queues_) q.erase(std::remove(q.begin(), q.end(), id), q.end());
}

void RollingState::mark_done(const std::string& id, Millis t) {
    auto& s = entries_.at(id);
    if (s.st != UnitState::Running) throw std::logic_error("subtask " + id + " is not running");
    s.st = UnitState::Done;
    s.done = t;
    ++completions_since_solve_;
}

void RollingState::abort(const std::string& id) {
    auto& s = entries_.at(id);
    if (s.st != UnitState::Running) throw std::logic_error("subtask " + id + " is not running");
    s.st = UnitState::Pool;
    s.started.reset();
    s.robots.clear();
}

void RollingState::pin(const std::string& id, std::vector<std::string> robots) {
    auto& s = entries_.at(id);
    if (s.st != UnitState::Pool && s.st != UnitState::Dispatched) {
        throw std::logic_error("subtask " + id + " has already started");
    }
    s.e.sub.pinned = std::move(robots);
}

void RollingState::update(const std::string& id, double p_success, Millis duration_ms) {
    auto& s = entries_.at(id);
    if (s.st != UnitState::Pool && s.st != UnitState::Dispatched) {
        throw std::logic_error("subtask " + id + " has already started");
    }
    s.e.sub.p_success = p_success;
    s.e.sub.duration_ms = duration_ms;
}

std::vector<std::string> RollingState::drop_if(const std::function<bool(const PoolEntry&)>& pred) {
    std::vector<std::string> out;
    for (const auto& id : order_) {
        const auto& s = entries_.at(id);
        if ((s.st == UnitState::Pool || s.st == UnitState::Dispatched) && pred(s.e)) out.push_back(id);
    }
    for (const auto& id : out) {
        entries_.erase(id);
        for (auto& [_, q] : queues_) q.erase(std::remove(q.begin(), q.end(), id), q.end());
    }
    order_.erase(std::remove_if(order_.begin(), order_.end(), [&](const std::string& id) { return !entries_.count(id); }),
                 order_.end());
    return out;
}

Millis RollingState::planned_start(const std::string& id) const { return entries_.at(id).planned_start; }
Millis RollingState::planned_end(const std::string& id) const { return entries_.at(id).planned_end; }
std::optional<Millis> RollingState::started_at(const std::string& id) const { return entries_.at(id).started; }
std::optional<Millis> RollingState::done_at(const std::string& id) const { return entries_.at(id).done; }

namespace {

CandidateOutcome evaluate(std::size_t i, const subtask::LayeredDag& g, const InstanceBuilder& build,
                          const SolverOptions& opts, Assignment* out) {
    CandidateOutcome o;
    o.index = i;
    try {
        auto inst = build(g);
        *out = solve(inst, opts);
        o.feasible = true;
        o.makespan_ms = out->makespan_ms;
    } catch (const InfeasibleInstance& e) {
        o.constraint = e.constraint();
        o.message = e.what();
    } catch (const std::invalid_argument& e) {
        o.constraint = "invalid";
        o.message = e.what();
    }
    return o;
}

}  // namespace

SchemeChoice select_scheme(const std::vector<subtask::LayeredDag>& candidates, const InstanceBuilder& build,
                           unsigned threads, const SolverOptions& opts) {
    if (candidates.empty()) throw std::invalid_argument("no candidate schemes");
    std::vector<Assignment> results(candidates.size());
    std::vector<CandidateOutcome> outcomes(candidates.size());
    if (threads <= 1 || candidates.size() == 1) {
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            outcomes[i] = evaluate(i, candidates[i], build, opts, &results[i]);
        }
    } else {
        for (std::size_t lo = 0; lo < candidates.size(); lo += threads) {
            std::vector<std::future<CandidateOutcome>> fs;
            std::size_t hi = std::min(candidates.size(), lo + threads);
            for (std::size_t i = lo; i < hi; ++i) {
                fs.push_back(std::async(std::launch::async, evaluate, i, std::cref(candidates[i]), std::cref(build),
                                        std::cref(opts), &results[i]));
            }
            for (std::size_t i = lo; i < hi; ++i) outcomes[i] = fs[i - lo].get();
        }
    }
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].feasible) continue;
        if (!best || outcomes[i].makespan_ms < outcomes[*best].makespan_ms) best = i;
    }
    if (!best) {
        std::string msg = "every candidate scheme is infeasible:";
        for (const auto& o : outcomes) msg += " [" + std::to_string(o.index) + "] " + o.constraint;
        throw SchemeSelectionError(msg, outcomes);
    }
    return {*best, std::move(results[*best]), std::move(outcomes)};
}

}  // namespace swarm::sched
