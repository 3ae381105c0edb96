#include "swarmplan/sim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <queue>
#include <sstream>
#include <tuple>

#include "swarmplan/automaton/rposet.hpp"
#include "swarmplan/ltl/parse.hpp"
#include "swarmplan/ltl/translate.hpp"
#include "swarmplan/sched/rolling.hpp"
#include "swarmplan/sched/verify.hpp"
#include "swarmplan/search/mission_search.hpp"
#include "swarmplan/sim/world.hpp"

namespace swarm::sim {

using nlohmann::json;

const std::vector<std::string>& adaptation_kinds() {
    static const std::vector<std::string> k = {"new_task_type", "new_task_instance", "new_resource_type",
                                               "new_resource_instance", "robot_failure"};
    return k;
}

const std::vector<std::string>& adaptation_route(const std::string& kind) {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"new_task_type", {kTaskReasoning, kMissionSearch, kSubtaskGeneration, kSubtaskAssignment}},
        {"new_task_instance", {kGroupAllocation, kSubtaskAssignment}},
        {"new_resource_type", {kSubtaskGeneration, kSubtaskAssignment}},
        {"new_resource_instance", {kResourceRegistry, kSubtaskAssignment}},
        {"robot_failure", {kSubtaskAssignment}},
    };
    auto it = table.find(kind);
    if (it == table.end()) throw std::invalid_argument("unroutable event kind '" + kind + "'");
    return it->second;
}

json RunMetrics::to_json() const {
    json j;
    j["tasks_total"] = tasks_total;
    j["tasks_completed"] = tasks_completed;
    j["subtasks_dispatched"] = subtasks_dispatched;
    j["subtasks_completed"] = subtasks_completed;
    j["invocations"] = invocations;
    j["interventions"] = interventions;
    j["interventions_rejected"] = interventions_rejected;
    j["approvals_auto"] = approvals_auto;
    j["approvals_human"] = approvals_human;
    j["makespan_ms"] = makespan_ms;
    j["task_completion_ms"] = task_completion_ms;
    j["solver_calls"] = solve_ms.size();
    double total = 0, worst = 0;
    for (double s : solve_ms) {
        total += s;
        worst = std::max(worst, s);
    }
    j["solver_ms_total"] = total;
    j["solver_ms_max"] = worst;
    j["solver_ms_mean"] = solve_ms.empty() ? 0.0 : total / static_cast<double>(solve_ms.size());
    j["distance_m"] = distance_m;
    return j;
}

namespace {

enum class EvKind { Completion, Arrival, ManualDone, Tick, Adaptation, Intervention, ApprovalTimeout };

int rank_of(EvKind k) {
    switch (k) {
        case EvKind::Completion:
        case EvKind::Arrival:
        case EvKind::ManualDone: return 0;
        case EvKind::Tick: return 1;
        case EvKind::Adaptation: return 2;
        case EvKind::ApprovalTimeout: return 3;
        case EvKind::Intervention: return 4;
    }
    return 4;
}

struct Event {
    Millis t = 0;
    int rank = 0;
    std::uint64_t seq = 0;
    EvKind kind = EvKind::Tick;
    std::string target;
    std::uint64_t token = 0;
    json payload;
};

struct Later {
    bool operator()(const Event& a, const Event& b) const {
        return std::tie(a.t, a.rank, a.seq) > std::tie(b.t, b.rank, b.seq);
    }
};

json mm(Vec2 p) { return json::array({std::llround(p.x * 1000.0), std::llround(p.y * 1000.0)}); }

enum class Mode { Idle, Travel, Wait, Work, Manual, Failed };

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::Idle: return "idle";
        case Mode::Travel: return "travel";
        case Mode::Wait: return "wait";
        case Mode::Work: return "work";
        case Mode::Manual: return "manual";
        case Mode::Failed: return "failed";
    }
    return "?";
}

struct RobotRun {
    Mode mode = Mode::Idle;
    std::string target;
    std::uint64_t token = 0;
    Millis busy_until = 0;
    Vec2 busy_at;
};

enum class TaskStatus { Waiting, Pending, Active, Done, Failed };

const char* task_status_name(TaskStatus s) {
    switch (s) {
        case TaskStatus::Waiting: return "waiting";
        case TaskStatus::Pending: return "pending";
        case TaskStatus::Active: return "active";
        case TaskStatus::Done: return "done";
        case TaskStatus::Failed: return "failed";
    }
    return "?";
}

struct TaskRun {
    std::string id;  // feature id
    std::string type;
    std::string symbol;
    std::size_t mission = 0;
    int group = 0;
    TaskStatus status = TaskStatus::Waiting;
    bool force_generate = false;
    std::vector<subtask::LayeredDag> candidates;
    std::set<int> excluded;
    int chosen = -1;
    subtask::LayeredDag dag;
    int version = 0;
    std::vector<std::string> unit_ids;  // per dag node
    std::string cause;
    Millis released = -1, first_start = -1, done = -1;
};

struct UnitInfo {
    std::string task;
    int group = 0;
    subtask::SubtaskNode node;
    Vec2 location;
    Millis start = -1, end = -1;
    std::vector<std::string> robots;
    std::uint64_t token = 0;
    bool dropped = false;
};

struct MissionRun {
    MissionSpec spec;
    std::shared_ptr<const automaton::Nba> nba;
    automaton::RPoset poset;
    std::unique_ptr<monitor::MissionTracker> tracker;
    bool complete_logged = false;
};

struct GroupRun {
    int id = 0;
    std::vector<std::string> members;
    std::unique_ptr<sched::RollingState> rs;
};

struct Approval {
    std::string id;
    std::string kind;  // "scheme" or "label"
    std::string target;
    Millis created = 0, deadline = 0;
    std::string cause;
    bool open = true;
};

// Translations are pure functions of the text; share them across runs.
std::shared_ptr<const automaton::Nba> translate_cached(const std::string& text, const std::vector<std::string>& extra) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const automaton::Nba>> cache;
    std::string key = text;
    for (const auto& e : extra) key += "\x1f" + e;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    ltl::TranslateOptions o;
    o.extra_propositions = extra;
    auto nba = std::make_shared<const automaton::Nba>(ltl::translate_to_nba(ltl::parse_ltl(text), o));
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(key, nba);
    return nba;
}

}  // namespace

struct Engine::Impl {
    Scenario sc;
    EngineOptions opts;
    World world;
    std::priority_queue<Event, std::vector<Event>, Later> events;
    std::uint64_t seq = 0;
    Millis now = 0;
    bool ended = false;
    bool tick_pending = false;
    std::vector<json> log;
    RunMetrics metrics;
    std::vector<MissionRun> missions;
    std::vector<std::string> task_order;
    std::map<std::string, TaskRun> tasks;
    std::map<std::string, UnitInfo> units;
    std::map<int, GroupRun> groups;
    std::map<std::string, RobotRun> robots;
    std::vector<Approval> approvals;
    std::map<std::string, std::vector<subtask::LayeredDag>> scheme_cache;
    std::vector<Intervention> applied;
    std::shared_ptr<subtask::Backend> backend;
    std::shared_ptr<const subtask::PlanLibrary> library;
    std::set<std::string> dispatched_ids;
    std::size_t adapt_n = 0, approval_n = 0, found_n = 0, intervention_n = 0;

    // ---- plumbing ----

    void push(EvKind k, Millis t, std::string target = {}, std::uint64_t token = 0, json payload = nullptr) {
        Event e;
        e.t = std::max(t, now);
        e.rank = rank_of(k);
        e.seq = seq++;
        e.kind = k;
        e.target = std::move(target);
        e.token = token;
        e.payload = std::move(payload);
        events.push(std::move(e));
    }

    void record(const std::string& kind, json fields = json::object()) {
        fields["t"] = now;
        fields["kind"] = kind;
        log.push_back(std::move(fields));
    }

    void module(const char* name, const std::string& cause, json fields = json::object()) {
        ++metrics.invocations[name];
        fields["module"] = name;
        fields["cause"] = cause;
        record("module", std::move(fields));
    }

    void log_segments(const std::vector<Segment>& segs) {
        for (const auto& s : segs) {
            if (s.length_m <= 0.0) continue;
            record("move", {{"robot", s.robot}, {"from", mm(s.from)}, {"to", mm(s.to)}, {"length_m", s.length_m}});
        }
    }

    Millis service_for(const std::string& skill) const {
        auto it = sc.service_ms.find(skill);
        return it == sc.service_ms.end() ? sc.default_service_ms : it->second;
    }

    std::vector<sched::ResourceSite> known_sites() const {
        std::vector<sched::ResourceSite> out;
        for (const auto& r : world.resources) {
            if (r.known) out.push_back({r.type, r.position});
        }
        return out;
    }

    std::set<std::string> known_types() const {
        std::set<std::string> out;
        for (const auto& r : world.resources) {
            if (r.known) out.insert(r.type);
        }
        return out;
    }

    std::vector<std::string> live_members(int g) const {
        std::vector<std::string> out;
        for (const auto& id : groups.at(g).members) {
            if (!world.robot(id)->failed) out.push_back(id);
        }
        return out;
    }

    std::set<std::string> group_caps(int g) const {
        std::vector<subtask::Platform> ps;
        for (const auto& id : live_members(g)) ps.push_back(world.robot(id)->platform);
        return subtask::subtask_capabilities(ps);
    }

    bool can_serve(int g, const std::string& type) const {
        auto members = live_members(g);
        auto count = [&](const std::string& skill) {
            int n = 0;
            for (const auto& id : members) n += subtask::platform_can(world.robot(id)->platform, skill) ? 1 : 0;
            return n;
        };
        auto need = [&](const std::string& skill) { return subtask::robots_for(type, skill).value_or(1); };
        const auto& schemes = subtask::rule_schemes(type);
        if (!schemes.empty()) {
            for (const auto& s : schemes) {
                bool ok = std::all_of(s.begin(), s.end(), [&](const subtask::RuleStep& st) { return count(st.skill) >= need(st.skill); });
                if (ok) return true;
            }
            return false;
        }
        const auto* f = subtask::feature_by_type(type);
        if (!f) return false;
        for (const auto& [skill, n] : f->skills) {
            if (count(skill) < n) return false;
        }
        return true;
    }

    std::vector<sched::SchedRobot> sched_robots(int g) const {
        std::vector<sched::SchedRobot> out;
        for (const auto& id : live_members(g)) {
            const auto* w = world.robot(id);
            const auto& rr = robots.at(id);
            sched::SchedRobot r;
            r.id = id;
            r.skills = subtask::subtask_capabilities({w->platform});
            r.velocity = w->velocity;
            if (rr.mode == Mode::Work || rr.mode == Mode::Manual) {
                r.available_ms = std::max(now, rr.busy_until);
                r.position = rr.busy_at;
            } else {
                r.available_ms = now;
                r.position = w->position;
            }
            out.push_back(std::move(r));
        }
        return out;
    }

    Millis staged_estimate(const UnitInfo& u, const std::vector<sched::SchedRobot>& rs) const {
        auto sites = known_sites();
        Millis worst = 0;
        for (const auto& r : rs) {
            if (!r.skills.count(u.node.skill)) continue;
            worst = std::max(worst, sched::staged_duration(r, u.node, u.location, sites));
        }
        return std::max<Millis>(worst, 1);
    }

    // ---- setup ----

    void setup() {
        world = World(sc, opts.seed);
        if (opts.backend) {
            backend = opts.backend;
        } else if (sc.backend == "http") {
            subtask::HttpBackendOptions ho;
            ho.url = sc.backend_url;
            ho.timeout = std::chrono::milliseconds(sc.backend_timeout_ms);
            backend = std::make_shared<subtask::HttpBackend>(ho);
        } else {
            backend = std::make_shared<subtask::RuleBackend>();
        }
        if (opts.library) {
            library = opts.library;
        } else if (!sc.plan_library.empty()) {
            library = std::make_shared<const subtask::PlanLibrary>(subtask::PlanLibrary::load(sc.plan_library));
        } else {
            library = std::make_shared<const subtask::PlanLibrary>(subtask::PlanLibrary::builtin());
        }
        for (const auto& r : world.robots) {
            robots[r.id] = RobotRun{};
            auto& g = groups[r.group];
            g.id = r.group;
            g.members.push_back(r.id);
        }
        sched::RollingOptions ro;
        ro.epsilon = sc.planner.epsilon;
        ro.batch = sc.planner.batch;
        ro.resolve_after = sc.planner.resolve_after;
        ro.solver.node_limit = sc.planner.solver_node_limit;
        for (auto& [_, g] : groups) g.rs = std::make_unique<sched::RollingState>(ro);

        json hdr;
        hdr["scenario"] = sc.name;
        hdr["seed"] = opts.seed;
        hdr["human"] = opts.human;
        hdr["robots"] = json::array();
        for (const auto& r : world.robots) {
            hdr["robots"].push_back({{"id", r.id}, {"platform", subtask::platform_name(r.platform)}, {"group", r.group},
                                     {"pos", mm(r.position)}});
        }
        hdr["features"] = json::array();
        for (const auto& f : world.features) {
            hdr["features"].push_back({{"id", f.id}, {"type", f.type}, {"pos", mm(f.position)},
                                       {"status", feature_status_name(f.status)}});
        }
        hdr["resources"] = json::array();
        for (const auto& r : world.resources) {
            hdr["resources"].push_back({{"id", r.id}, {"type", r.type}, {"pos", mm(r.position)}, {"known", r.known}});
        }
        record("header", hdr);

        for (const auto& m : sc.missions) add_mission(m, "init", true);
        run_search(std::vector<std::size_t>(), "init");
        for (const auto& e : sc.events) {
            push(EvKind::Adaptation, e.time_ms, e.kind, 0, e.payload);
        }
        release_ready("init");
    }

    std::size_t add_mission(const MissionSpec& spec, const std::string& cause, bool reasoning) {
        MissionRun m;
        m.spec = spec;
        std::vector<std::string> syms;
        for (const auto& [s, _] : spec.tasks) syms.push_back(s);
        try {
            m.nba = translate_cached(spec.ltl, syms);
        } catch (const std::exception& e) {
            throw std::invalid_argument("mission " + spec.name + ": " + e.what());
        }
        m.poset = automaton::extract_rposet(*m.nba, syms);
        m.tracker = std::make_unique<monitor::MissionTracker>(spec.name, m.nba, std::set<std::string>(syms.begin(), syms.end()));
        if (reasoning) {
            module(kTaskReasoning, cause, {{"mission", spec.name}, {"states", m.nba->size()}});
        }
        json prec = json::array();
        for (const auto& [h, l] : m.poset.precedence) prec.push_back({h, l});
        record("mission", {{"name", spec.name}, {"ltl", spec.ltl}, {"tasks", spec.tasks}, {"precedence", prec},
                           {"states", m.nba->size()}});
        std::size_t k = missions.size();
        missions.push_back(std::move(m));
        for (const auto& [sym, fid] : spec.tasks) {
            const FeatureState* f = world.feature(fid);
            if (!f) throw std::invalid_argument("mission " + spec.name + " names unknown feature " + fid);
            TaskRun t;
            t.id = fid;
            t.type = f->type;
            t.symbol = sym;
            t.mission = k;
            t.cause = cause;
            if (tasks.count(fid)) throw std::invalid_argument("feature " + fid + " is bound to two tasks");
            tasks.emplace(fid, std::move(t));
            task_order.push_back(fid);
            ++metrics.tasks_total;
        }
        return k;
    }

    std::vector<search::GroupProfile> search_groups(std::vector<int>* ids) const {
        std::vector<search::GroupProfile> out;
        for (const auto& [gid, g] : groups) {
            search::GroupProfile p;
            p.id = gid;
            p.members = live_members(gid);
            if (p.members.empty()) continue;
            double v = 1e9;
            Vec2 c{0, 0};
            for (const auto& id : p.members) {
                const auto* r = world.robot(id);
                v = std::min(v, r->velocity);
                c.x += r->position.x;
                c.y += r->position.y;
            }
            c.x /= static_cast<double>(p.members.size());
            c.y /= static_cast<double>(p.members.size());
            p.home = c;
            p.velocity = v;
            for (const auto& id : task_order) {
                const auto& t = tasks.at(id);
                if (can_serve(gid, t.type)) p.capabilities.insert(t.symbol);
            }
            if (p.capabilities.empty()) continue;
            out.push_back(std::move(p));
            ids->push_back(gid);
        }
        return out;
    }

    Millis task_service_estimate(const std::string& type) const {
        const auto& s = subtask::rule_schemes(type);
        Millis d = 0;
        if (!s.empty()) {
            for (const auto& st : s.front()) d += service_for(st.skill);
        } else {
            d = sc.default_service_ms;
        }
        return d;
    }

    // Search over the given missions (all when empty) and allocate groups.
    void run_search(std::vector<std::size_t> which, const std::string& cause) {
        if (which.empty()) {
            for (std::size_t k = 0; k < missions.size(); ++k) which.push_back(k);
        }
        if (which.empty()) return;
        std::vector<search::Mission> ms;
        for (std::size_t k : which) {
            search::Mission m;
            m.name = missions[k].spec.name;
            m.nba = *missions[k].nba;
            m.poset = missions[k].poset;
            for (const auto& [sym, fid] : missions[k].spec.tasks) {
                const auto& t = tasks.at(fid);
                m.sites.push_back({sym, world.feature(fid)->position, task_service_estimate(t.type)});
            }
            ms.push_back(std::move(m));
        }
        std::vector<int> gids;
        auto profiles = search_groups(&gids);
        search::SearchParams sp;
        sp.eta1 = sc.planner.eta1;
        sp.eta2 = sc.planner.eta2;
        sp.width = sc.planner.width;
        sp.budget = sc.planner.budget;
        json info;
        std::map<std::pair<std::size_t, std::string>, int> chosen;
        try {
            if (profiles.empty()) throw search::InfeasibleMission("no group can serve any task");
            search::Problem prob(std::move(ms), profiles);
            auto res = search::search(prob, sp);
            json plans = json::object();
            for (std::size_t g = 0; g < res.best.plans.size(); ++g) {
                json row = json::array();
                for (const auto& pt : res.best.plans[g]) {
                    chosen[{which[pt.task.mission], pt.task.symbol}] = gids[g];
                    row.push_back(pt.task.symbol + "@" + missions[which[pt.task.mission]].spec.name);
                }
                plans[std::to_string(gids[g])] = row;
            }
            info = {{"complete", res.complete}, {"nodes", res.nodes_created}, {"plans", plans}};
            module(kMissionSearch, cause, info);
        } catch (const std::exception& e) {
            module(kMissionSearch, cause, {{"error", e.what()}});
        }
        for (std::size_t k : which) {
            for (const auto& [sym, fid] : missions[k].spec.tasks) {
                auto& t = tasks.at(fid);
                auto it = chosen.find({k, sym});
                if (it != chosen.end()) {
                    t.group = it->second;
                } else {
                    t.group = pick_group(t.type);
                }
                if (t.group == 0) {
                    t.status = TaskStatus::Failed;
                    record("task_failed", {{"task", fid}, {"reason", "no group can serve " + t.type}});
                } else {
                    record("allocation", {{"task", fid}, {"group", t.group}, {"mission", missions[k].spec.name}});
                }
            }
        }
    }

    int pick_group(const std::string& type) const {
        int best = 0;
        std::size_t load = 0;
        for (const auto& [gid, g] : groups) {
            if (!can_serve(gid, type)) continue;
            std::size_t l = 0;
            for (const auto& id : g.rs->ids()) l += g.rs->state(id) != sched::UnitState::Done ? 1 : 0;
            if (best == 0 || l < load) {
                best = gid;
                load = l;
            }
        }
        return best;
    }

    // ---- task lifecycle ----

    bool preds_done(const TaskRun& t) const {
        const auto& m = missions[t.mission];
        for (const auto& p : m.poset.predecessors(t.symbol)) {
            auto it = m.spec.tasks.find(p);
            if (it == m.spec.tasks.end()) continue;
            if (tasks.at(it->second).status != TaskStatus::Done) return false;
        }
        return true;
    }

    void release_ready(const std::string& cause) {
        for (const auto& id : task_order) {
            auto& t = tasks.at(id);
            if (t.status != TaskStatus::Waiting || t.group == 0) continue;
            if (world.feature(id)->status == FeatureStatus::Undiscovered) continue;
            if (!preds_done(t)) continue;
            t.status = TaskStatus::Pending;
            t.released = now;
            if (!cause.empty() && cause != "init") t.cause = cause;
            record("task_released", {{"task", id}, {"type", t.type}, {"group", t.group}, {"cause", t.cause}});
            prepare(t, t.cause, t.force_generate);
        }
    }

    subtask::GenerationOptions gen_options(int g) const {
        subtask::GenerationOptions o;
        o.max_schemes = sc.planner.max_schemes;
        o.service_ms = sc.service_ms;
        o.default_service_ms = sc.default_service_ms;
        o.skill_success = sc.skill_success;
        o.group_capabilities = group_caps(g);
        o.known_resources = known_types();
        o.priors = sc.priors;
        return o;
    }

    bool generate_for(TaskRun& t, const std::string& cause) {
        const FeatureState* f = world.feature(t.id);
        std::string query = t.type;
        std::replace(query.begin(), query.end(), '_', ' ');
        std::replace(query.begin(), query.end(), '-', ' ');
        std::vector<std::string> knowledge;
        for (const auto& h : library->retrieve(query, 2)) knowledge.push_back(h.text);
        auto caps = group_caps(t.group);
        std::vector<subtask::PerceivedItem> seen;
        for (const auto& r : world.resources) {
            if (r.known) seen.push_back({r.id, r.type, r.position});
        }
        try {
            auto prompts = subtask::build_prompt(t.id, t.type, f->position, knowledge,
                                                 std::vector<std::string>(caps.begin(), caps.end()), seen);
            auto res = subtask::generate(prompts.context, *backend, gen_options(t.group));
            t.candidates = res.candidates;
            t.excluded.clear();
            scheme_cache[t.type + "#" + std::to_string(t.group)] = res.candidates;
            json sch = json::array();
            for (const auto& g : res.candidates) sch.push_back(subtask::dag_to_json(g));
            module(kSubtaskGeneration, cause,
                   {{"task", t.id}, {"backend", backend->name()}, {"attempts", res.attempts},
                    {"candidates", res.candidates.size()}, {"rejected", res.rejected.size()}, {"schemes", sch}});
            return true;
        } catch (const std::exception& e) {
            module(kSubtaskGeneration, cause, {{"task", t.id}, {"error", e.what()}});
            t.status = TaskStatus::Failed;
            record("task_failed", {{"task", t.id}, {"reason", e.what()}});
            return false;
        }
    }

    void prepare(TaskRun& t, const std::string& cause, bool force) {
        auto key = t.type + "#" + std::to_string(t.group);
        auto it = scheme_cache.find(key);
        if (!force && it != scheme_cache.end()) {
            t.candidates = it->second;
            t.excluded.clear();
            record("schemes", {{"task", t.id}, {"source", "cache"}, {"candidates", t.candidates.size()}});
        } else if (!generate_for(t, cause)) {
            return;
        }
        t.force_generate = false;
        gate_or_choose(t, cause);
    }

    void gate_or_choose(TaskRun& t, const std::string& cause) {
        if (opts.human && sc.human.scheme_approval) {
            open_approval("scheme", t.id, cause);
            return;
        }
        choose(t, cause, std::nullopt);
    }

    void open_approval(const std::string& kind, const std::string& target, const std::string& cause) {
        for (auto& a : approvals) {
            if (a.open && a.kind == kind && a.target == target) {
                a.open = false;
                record("approval_superseded", {{"approval", a.id}});
            }
        }
        Approval a;
        a.id = "approval_" + std::to_string(++approval_n);
        a.kind = kind;
        a.target = target;
        a.created = now;
        a.deadline = now + sc.human.approval_timeout_ms;
        a.cause = cause;
        record("approval_pending", {{"approval", a.id}, {"approval_kind", kind}, {"target", target}, {"deadline", a.deadline}});
        push(EvKind::ApprovalTimeout, a.deadline, a.id);
        approvals.push_back(a);
    }

    Approval* find_approval(const std::string& id) {
        for (auto& a : approvals) {
            if (a.id == id) return &a;
        }
        return nullptr;
    }

    void resolve_approval(Approval& a, bool human) {
        a.open = false;
        ++(human ? metrics.approvals_human : metrics.approvals_auto);
        record("approval_resolved", {{"approval", a.id}, {"by", human ? "operator" : "timeout"}});
        if (a.kind == "scheme") {
            auto it = tasks.find(a.target);
            if (it != tasks.end() && it->second.status != TaskStatus::Done && it->second.status != TaskStatus::Failed) {
                choose(it->second, a.cause, std::nullopt);
            }
        } else {
            feature_confirmed(a.target, a.cause);
        }
    }

    static std::string node_key(const subtask::SubtaskNode& n) { return n.skill + "|" + n.resource; }

    // Finished or running units of the task keyed by skill and resource.
    std::multimap<std::string, std::string> reusable(const TaskRun& t) const {
        std::multimap<std::string, std::string> out;
        if (t.version == 0) return out;
        const auto& rs = *groups.at(t.group).rs;
        for (std::size_t i = 0; i < t.unit_ids.size(); ++i) {
            const auto& id = t.unit_ids[i];
            if (id.empty() || !rs.has(id)) continue;
            auto st = rs.state(id);
            if (st == sched::UnitState::Done || st == sched::UnitState::Running) out.emplace(node_key(t.dag.nodes[i]), id);
        }
        return out;
    }

    std::map<std::size_t, std::string> carry_map(const TaskRun& t, const subtask::LayeredDag& g) const {
        auto pool = reusable(t);
        std::map<std::size_t, std::string> out;
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            auto it = pool.find(node_key(g.nodes[i]));
            if (it == pool.end()) continue;
            out[i] = it->second;
            pool.erase(it);
        }
        return out;
    }

    void choose(TaskRun& t, const std::string& cause, std::optional<int> forced) {
        std::vector<subtask::LayeredDag> cands;
        std::vector<int> index;
        for (std::size_t i = 0; i < t.candidates.size(); ++i) {
            if (t.excluded.count(static_cast<int>(i))) continue;
            if (forced && *forced != static_cast<int>(i)) continue;
            cands.push_back(t.candidates[i]);
            index.push_back(static_cast<int>(i));
        }
        if (cands.empty()) {
            t.status = TaskStatus::Failed;
            record("task_failed", {{"task", t.id}, {"reason", "no candidate scheme left"}});
            return;
        }
        auto group_robots = sched_robots(t.group);
        auto sites = known_sites();
        std::vector<std::map<std::size_t, std::string>> carries;
        for (const auto& g : cands) carries.push_back(carry_map(t, g));
        sched::InstanceBuilder build = [&](const subtask::LayeredDag& g) {
            std::size_t k = static_cast<std::size_t>(&g - cands.data());
            sched::PlacedDag p;
            p.task = t.id;
            p.dag = g;
            p.site = world.feature(t.id)->position;
            for (const auto& [i, _] : carries[k]) p.skip.insert(i);
            return sched::build_instance({p}, group_robots, sites, sc.planner.epsilon, now);
        };
        sched::SolverOptions so;
        so.node_limit = sc.planner.solver_node_limit;
        try {
            auto choice = sched::select_scheme(cands, build, sc.planner.threads, so);
            json outs = json::array();
            for (const auto& o : choice.outcomes) {
                outs.push_back({{"scheme", index[o.index]}, {"feasible", o.feasible}, {"makespan_ms", o.makespan_ms},
                                {"constraint", o.constraint}});
            }
            module(kSubtaskAssignment, cause, {{"op", "select_scheme"}, {"task", t.id}, {"chosen", index[choice.index]},
                                               {"outcomes", outs}});
            install(t, index[choice.index], carries[choice.index], cause);
        } catch (const sched::SchemeSelectionError& e) {
            json outs = json::array();
            for (const auto& o : e.certificates) {
                outs.push_back({{"scheme", index[o.index]}, {"constraint", o.constraint}, {"message", o.message}});
            }
            module(kSubtaskAssignment, cause, {{"op", "select_scheme"}, {"task", t.id}, {"error", e.what()}, {"outcomes", outs}});
            t.status = TaskStatus::Failed;
            record("task_failed", {{"task", t.id}, {"reason", "no feasible scheme"}});
        }
    }

    void drop_task_units(TaskRun& t) {
        auto& rs = *groups.at(t.group).rs;
        const std::string prefix = t.id + "/";
        auto gone = rs.drop_if([&](const sched::PoolEntry& e) { return e.sub.id.rfind(prefix, 0) == 0; });
        for (const auto& id : gone) units.at(id).dropped = true;
        if (!gone.empty()) record("units_dropped", {{"task", t.id}, {"units", gone}});
    }

    void install(TaskRun& t, int scheme, const std::map<std::size_t, std::string>& carry, const std::string& cause) {
        drop_task_units(t);
        const subtask::LayeredDag& g = t.candidates[static_cast<std::size_t>(scheme)];
        ++t.version;
        t.chosen = scheme;
        t.dag = g;
        t.status = TaskStatus::Active;
        t.unit_ids.assign(g.nodes.size(), "");
        auto& grp = groups.at(t.group);
        Vec2 site = world.feature(t.id)->position;
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            auto c = carry.find(i);
            if (c != carry.end()) {
                t.unit_ids[i] = c->second;
                continue;
            }
            t.unit_ids[i] = t.id + "/v" + std::to_string(t.version) + "/" + g.nodes[i].id;
        }
        auto members = sched_robots(t.group);
        json added = json::array();
        for (std::size_t i : g.topological_order()) {
            if (carry.count(i)) continue;
            const auto& n = g.nodes[i];
            UnitInfo u;
            u.task = t.id;
            u.group = t.group;
            u.node = n;
            u.location = n.exploration && !n.region.empty() ? subtask::centroid(n.region) : site;
            sched::PoolEntry e;
            e.sub.id = t.unit_ids[i];
            e.sub.skill = n.skill;
            e.sub.robots = n.robots;
            e.sub.p_success = n.p_success;
            e.sub.release_ms = now;
            e.sub.duration_ms = staged_estimate(u, members);
            for (std::size_t p : g.predecessors(i)) e.preds.push_back(t.unit_ids[p]);
            units[e.sub.id] = u;
            added.push_back(e.sub.id);
            grp.rs->add(std::move(e));
        }
        json carried = json::array();
        for (const auto& [i, id] : carry) carried.push_back(id);
        record("scheme_selected", {{"task", t.id}, {"scheme", scheme}, {"version", t.version}, {"units", added},
                                   {"carried", carried}});
        dispatch(t.group, cause);
        check_task_done(t);
    }

    // ---- dispatch and execution ----

    void dispatch(int gid, const std::string& cause) {
        auto& g = groups.at(gid);
        auto rs = sched_robots(gid);
        sched::WindowPlan plan;
        try {
            plan = g.rs->replan(now, rs, [&](const sched::PoolEntry& e, const std::vector<sched::SchedRobot>& r) {
                return staged_estimate(units.at(e.sub.id), r);
            });
        } catch (const sched::InfeasibleInstance& e) {
            record("dispatch_failed", {{"group", gid}, {"constraint", e.constraint()}, {"message", e.what()}});
            for (const auto& id : g.members) drive(id);
            return;
        }
        if (plan.solved) {
            metrics.solve_ms.push_back(plan.solve_ms);
            for (const auto& sub : plan.instance.subtasks) dispatched_ids.insert(sub.id);
            metrics.subtasks_dispatched = dispatched_ids.size();
            json rows = json::array();
            const auto& inst = plan.instance;
            for (std::size_t s = 0; s < inst.subtasks.size(); ++s) {
                std::vector<std::string> ids;
                for (std::size_t r : plan.assignment.robots[s]) ids.push_back(inst.robots[r].id);
                rows.push_back({{"unit", inst.subtasks[s].id}, {"robots", ids}, {"start_ms", plan.assignment.start_ms[s]},
                                {"end_ms", plan.assignment.end_ms(inst, s)}});
            }
            module(kSubtaskAssignment, cause, {{"op", "dispatch"}, {"group", gid}, {"units", rows},
                                               {"makespan_ms", plan.assignment.makespan_ms},
                                               {"optimal", plan.assignment.optimal}, {"deferred", plan.deferred}});
            auto bad = sched::verify(inst, plan.assignment);
            for (const auto& v : bad) record("verify_failed", {{"constraint", v.constraint}, {"detail", v.detail}});
        } else if (!cause.empty()) {
            module(kSubtaskAssignment, cause, {{"op", "dispatch"}, {"group", gid}, {"units", json::array()},
                                               {"deferred", plan.deferred}});
        }
        if (!plan.blocked.empty()) record("budget_blocked", {{"group", gid}, {"units", plan.blocked}});
        for (const auto& id : g.members) drive(id);
        try_start_group(gid);
    }

    void drive(const std::string& rid) {
        auto& rr = robots.at(rid);
        if (rr.mode == Mode::Failed || rr.mode == Mode::Work || rr.mode == Mode::Manual) return;
        const auto* w = world.robot(rid);
        auto& rs = *groups.at(w->group).rs;
        auto front = rs.next(rid);
        if ((rr.mode == Mode::Travel || rr.mode == Mode::Wait) && front && rr.target == *front) return;
        if (rr.mode == Mode::Travel) log_segments(world.stop(rid, static_cast<double>(now)));
        rr.mode = Mode::Idle;
        rr.target.clear();
        ++rr.token;
        if (!front) return;
        const auto& u = units.at(*front);
        std::vector<Vec2> route;
        if (!u.node.resource.empty() && !u.node.exploration) {
            if (auto k = world.nearest_resource(u.node.resource, u.location)) route.push_back(world.resources[*k].position);
        }
        route.push_back(u.location);
        world.set_path(rid, static_cast<double>(now), route);
        rr.target = *front;
        if (!world.moving(rid)) {
            rr.mode = Mode::Wait;
            record("arrival", {{"robot", rid}, {"unit", rr.target}, {"pos", mm(w->position)}});
            return;
        }
        rr.mode = Mode::Travel;
        record("travel", {{"robot", rid}, {"unit", rr.target}, {"eta", std::llround(world.arrival_ms(rid))}});
        push(EvKind::Arrival, static_cast<Millis>(std::llround(world.arrival_ms(rid))), rid, rr.token);
        ensure_tick();
    }

    void ensure_tick() {
        if (tick_pending || !world.any_moving() || !world.anything_hidden()) return;
        Millis next = (now / sc.tick_ms + 1) * sc.tick_ms;
        tick_pending = true;
        push(EvKind::Tick, next);
    }

    void on_arrival(const std::string& rid, std::uint64_t token) {
        auto& rr = robots.at(rid);
        if (rr.token != token || rr.mode != Mode::Travel) return;
        log_segments(world.finish_route(rid, now));
        rr.mode = Mode::Wait;
        record("arrival", {{"robot", rid}, {"unit", rr.target}, {"pos", mm(world.robot(rid)->position)}});
        handle_discoveries(world.sense());
        if (rr.mode == Mode::Wait) try_start(rr.target);
    }

    void try_start_group(int gid) {
        auto& rs = *groups.at(gid).rs;
        for (const auto& id : rs.ids_in(sched::UnitState::Dispatched)) try_start(id);
    }

    void try_start(const std::string& uid) {
        auto uit = units.find(uid);
        if (uit == units.end()) return;
        auto& u = uit->second;
        auto& rs = *groups.at(u.group).rs;
        if (!rs.has(uid) || rs.state(uid) != sched::UnitState::Dispatched) return;
        const auto& who = rs.robots_of(uid);
        for (const auto& r : who) {
            const auto& rr = robots.at(r);
            if (rr.mode != Mode::Wait || rr.target != uid) return;
        }
        for (const auto& p : rs.entry(uid).preds) {
            if (rs.has(p) && rs.state(p) != sched::UnitState::Done) return;
        }
        rs.mark_started(uid, now);
        u.start = now;
        u.robots = who;
        for (const auto& r : who) {
            auto& rr = robots.at(r);
            rr.mode = Mode::Work;
            rr.busy_until = now + u.node.duration_ms;
            rr.busy_at = u.location;
        }
        auto& t = tasks.at(u.task);
        if (t.first_start < 0) t.first_start = now;
        record("subtask_started", {{"unit", uid}, {"task", u.task}, {"skill", u.node.skill}, {"resource", u.node.resource},
                                   {"robots", who}, {"pos", mm(u.location)}});
        push(EvKind::Completion, now + u.node.duration_ms, uid, ++u.token);
    }

    void on_completion(const std::string& uid, std::uint64_t token) {
        auto& u = units.at(uid);
        if (u.token != token || u.dropped) return;
        auto& g = groups.at(u.group);
        g.rs->mark_done(uid, now);
        u.end = now;
        ++metrics.subtasks_completed;
        for (const auto& r : u.robots) {
            auto& rr = robots.at(r);
            if (rr.mode == Mode::Work) {
                rr.mode = Mode::Idle;
                rr.target.clear();
            }
        }
        record("subtask_completed", {{"unit", uid}, {"task", u.task}, {"robots", u.robots}, {"start", u.start}});
        auto& t = tasks.at(u.task);
        if (u.node.exploration) {
            bool ok = bernoulli(opts.seed, uid, u.node.p_success);
            record("exploration_result", {{"unit", uid}, {"resource", u.node.resource}, {"success", ok}});
            if (ok) {
                reveal(u);
            } else if (t.status == TaskStatus::Active) {
                t.excluded.insert(t.chosen);
                record("scheme_fallback", {{"task", t.id}, {"failed_scheme", t.chosen}});
                choose(t, "exploration:" + uid, std::nullopt);
            }
        }
        check_task_done(t);
        if (g.rs->due() || (g.rs->ids_in(sched::UnitState::Dispatched).empty() && !g.rs->window().empty())) {
            dispatch(u.group, "");
        } else {
            for (const auto& id : g.members) drive(id);
            try_start_group(u.group);
        }
    }

    void reveal(const UnitInfo& u) {
        Vec2 c = u.location;
        ResourceState* best = nullptr;
        for (auto& r : world.resources) {
            if (r.known || r.type != u.node.resource) continue;
            if (!best || distance(r.position, c) < distance(best->position, c)) best = &r;
        }
        if (!best) {
            world.resources.push_back({"found_" + u.node.resource + "_" + std::to_string(++found_n), u.node.resource, c, false});
            best = &world.resources.back();
        }
        best->known = true;
        record("resource_found", {{"resource", best->id}, {"type", best->type}, {"pos", mm(best->position)}});
    }

    void check_task_done(TaskRun& t) {
        if (t.status != TaskStatus::Active) return;
        const auto& rs = *groups.at(t.group).rs;
        for (const auto& id : t.unit_ids) {
            if (!rs.has(id) || rs.state(id) != sched::UnitState::Done) return;
        }
        t.status = TaskStatus::Done;
        t.done = now;
        world.feature(t.id)->status = FeatureStatus::Handled;
        ++metrics.tasks_completed;
        metrics.task_completion_ms[t.id] = now;
        metrics.makespan_ms = std::max(metrics.makespan_ms, now);
        auto& m = missions[t.mission];
        record("task_completed", {{"task", t.id}, {"symbol", t.symbol}, {"mission", m.spec.name}});
        auto v = m.tracker->observe(now, {t.symbol});
        std::size_t d = m.tracker->distance();
        record("observe", {{"mission", m.spec.name}, {"label", json::array({t.symbol})},
                           {"verdict", monitor::verdict_name(v)},
                           {"distance", d == automaton::kInfiniteDistance ? json(nullptr) : json(d)}});
        if (m.tracker->complete() && !m.complete_logged) {
            m.complete_logged = true;
            record("mission_complete", {{"mission", m.spec.name}});
        }
        release_ready("");
    }

    // ---- discoveries and adaptation ----

    bool feature_bound(const std::string& fid) const { return tasks.count(fid) > 0; }

    void handle_discoveries(const std::vector<Discovery>& ds) {
        for (const auto& d : ds) {
            if (d.feature) {
                auto* f = world.feature(d.id);
                record("feature_discovered", {{"feature", d.id}, {"type", f->type}, {"by", d.by}, {"pos", mm(f->position)}});
                if (feature_bound(d.id)) {
                    release_ready("");
                } else if (opts.human && sc.human.label_approval) {
                    open_approval("label", d.id, "");
                } else {
                    feature_confirmed(d.id, "");
                }
            } else {
                auto* r = world.resource(d.id);
                record("resource_discovered", {{"resource", d.id}, {"type", r->type}, {"by", d.by}, {"pos", mm(r->position)}});
                std::size_t same = 0;
                for (const auto& x : world.resources) same += (x.known && x.type == r->type) ? 1 : 0;
                std::string kind = same > 1 ? "new_resource_instance" : "new_resource_type";
                push(EvKind::Adaptation, now, kind, 0, json{{"resource", {{"id", d.id}}}});
            }
        }
    }

    void feature_confirmed(const std::string& fid, const std::string&) {
        auto* f = world.feature(fid);
        if (!f || feature_bound(fid)) return;
        if (!subtask::is_task_type(f->type)) {
            record("feature_ignored", {{"feature", fid}, {"type", f->type}});
            return;
        }
        bool seen = false;
        for (const auto& [_, t] : tasks) seen = seen || t.type == f->type;
        push(EvKind::Adaptation, now, seen ? "new_task_instance" : "new_task_type", 0,
             json{{"feature", {{"id", fid}}}});
    }

    FeatureState* ensure_feature(const json& p) {
        if (!p.contains("id")) return nullptr;
        std::string id = p.at("id").get<std::string>();
        if (auto* f = world.feature(id)) {
            if (f->status == FeatureStatus::Undiscovered) f->status = FeatureStatus::Discovered;
            return f;
        }
        if (!p.contains("type") || !p.contains("position")) return nullptr;
        FeatureState f;
        f.id = id;
        f.type = p.at("type").get<std::string>();
        f.position = {p.at("position").at(0).get<double>(), p.at("position").at(1).get<double>()};
        f.status = FeatureStatus::Discovered;
        world.features.push_back(f);
        return &world.features.back();
    }

    ResourceState* ensure_resource(const json& p) {
        if (!p.contains("id")) return nullptr;
        std::string id = p.at("id").get<std::string>();
        if (auto* r = world.resource(id)) {
            r->known = true;
            return r;
        }
        if (!p.contains("type") || !p.contains("position")) return nullptr;
        ResourceState r;
        r.id = id;
        r.type = p.at("type").get<std::string>();
        r.position = {p.at("position").at(0).get<double>(), p.at("position").at(1).get<double>()};
        r.known = true;
        world.resources.push_back(r);
        return &world.resources.back();
    }

    void on_adaptation(const std::string& kind, const json& payload) {
        std::string id = "adapt_" + std::to_string(++adapt_n);
        record("adaptation", {{"id", id}, {"adaptation", kind}, {"payload", payload}});
        std::vector<std::string> route;
        try {
            route = adaptation_route(kind);
        } catch (const std::invalid_argument& e) {
            record("adaptation_rejected", {{"id", id}, {"reason", e.what()}});
            return;
        }
        record("route", {{"id", id}, {"modules", route}});
        if (kind == "new_task_type" || kind == "new_task_instance") {
            FeatureState* f = payload.contains("feature") ? ensure_feature(payload.at("feature")) : nullptr;
            if (!f || !subtask::is_task_type(f->type) || feature_bound(f->id)) {
                record("adaptation_rejected", {{"id", id}, {"reason", "no unbound task feature in payload"}});
                return;
            }
            const auto* spec = subtask::feature_by_type(f->type);
            MissionSpec ms;
            ms.name = "m_" + f->id;
            ms.ltl = "<> " + spec->symbol;
            ms.tasks = {{spec->symbol, f->id}};
            std::size_t k = add_mission(ms, id, kind == "new_task_type");
            if (kind == "new_task_type") {
                run_search({k}, id);
                tasks.at(f->id).force_generate = true;
            } else {
                auto& t = tasks.at(f->id);
                t.group = pick_group(t.type);
                module(kGroupAllocation, id, {{"task", t.id}, {"group", t.group}});
                if (t.group == 0) {
                    t.status = TaskStatus::Failed;
                    record("task_failed", {{"task", t.id}, {"reason", "no group can serve " + t.type}});
                }
            }
            tasks.at(f->id).cause = id;
            release_ready(id);
        } else if (kind == "new_resource_type") {
            ResourceState* r = payload.contains("resource") ? ensure_resource(payload.at("resource")) : nullptr;
            if (!r) {
                record("adaptation_rejected", {{"id", id}, {"reason", "no resource in payload"}});
                return;
            }
            scheme_cache.clear();
            for (const auto& tid : task_order) {
                auto& t = tasks.at(tid);
                if (t.status != TaskStatus::Active && t.status != TaskStatus::Pending) continue;
                if (!uses_resource(t, r->type)) continue;
                if (!generate_for(t, id)) continue;
                if (t.status == TaskStatus::Failed) continue;
                gate_or_choose(t, id);
            }
        } else if (kind == "new_resource_instance") {
            ResourceState* r = payload.contains("resource") ? ensure_resource(payload.at("resource")) : nullptr;
            if (!r) {
                record("adaptation_rejected", {{"id", id}, {"reason", "no resource in payload"}});
                return;
            }
            module(kResourceRegistry, id, {{"resource", r->id}, {"type", r->type}, {"pos", mm(r->position)}});
            for (auto& [gid, _] : groups) dispatch(gid, id);
        } else if (kind == "robot_failure") {
            std::string rid = payload.value("robot", "");
            auto* w = world.robot(rid);
            if (!w || w->failed) {
                record("adaptation_rejected", {{"id", id}, {"reason", "unknown or failed robot " + rid}});
                return;
            }
            fail_robot(rid);
            dispatch(w->group, id);
        }
    }

    static bool uses_resource(const TaskRun& t, const std::string& type) {
        for (const auto& s : subtask::rule_schemes(t.type)) {
            for (const auto& st : s) {
                if (st.resource == type) return true;
            }
        }
        for (const auto& g : t.candidates) {
            for (const auto& n : g.nodes) {
                if (n.resource == type) return true;
            }
        }
        return false;
    }

    void fail_robot(const std::string& rid) {
        auto* w = world.robot(rid);
        auto& rr = robots.at(rid);
        auto& g = groups.at(w->group);
        if (rr.mode == Mode::Travel) log_segments(world.stop(rid, static_cast<double>(now)));
        if (rr.mode == Mode::Work) {
            auto& u = units.at(rr.target);
            g.rs->abort(rr.target);
            ++u.token;
            record("subtask_aborted", {{"unit", rr.target}, {"robots", u.robots}});
            for (const auto& r : u.robots) {
                auto& o = robots.at(r);
                if (o.mode == Mode::Work) {
                    o.mode = Mode::Idle;
                    o.target.clear();
                }
            }
            u.start = -1;
            u.robots.clear();
        }
        w->failed = true;
        rr.mode = Mode::Failed;
        rr.target.clear();
        ++rr.token;
        for (const auto& id : g.rs->ids()) {
            auto st = g.rs->state(id);
            if (st != sched::UnitState::Pool && st != sched::UnitState::Dispatched) continue;
            auto pins = g.rs->entry(id).sub.pinned;
            auto it = std::remove(pins.begin(), pins.end(), rid);
            if (it != pins.end()) {
                pins.erase(it, pins.end());
                g.rs->pin(id, pins);
            }
        }
        record("robot_failed", {{"robot", rid}});
    }

    // ---- interventions ----

    InterventionOutcome apply(const Intervention& iv) {
        InterventionOutcome out;
        std::string cause = "intervention_" + std::to_string(++intervention_n);
        try {
            validate_shape(iv);
            out.reason = apply_checked(iv, cause);
            out.accepted = out.reason.empty();
        } catch (const std::exception& e) {
            out.accepted = false;
            out.reason = e.what();
        }
        if (out.accepted) {
            ++metrics.interventions[iv.kind];
        } else {
            ++metrics.interventions_rejected;
        }
        Intervention rec = iv;
        rec.time_ms = now;
        applied.push_back(rec);
        record("intervention", {{"id", cause}, {"intervention", iv.kind}, {"payload", iv.payload}, {"accepted", out.accepted},
                                {"reason", out.reason}});
        return out;
    }

    // Returns an empty string on success, else the rejection reason.
    std::string apply_checked(const Intervention& iv, const std::string& cause) {
        const auto& p = iv.payload;
        if (iv.kind == "relabel_feature") {
            auto* f = world.feature(p.at("feature").get<std::string>());
            if (!f) return "unknown feature";
            std::string type = p.at("type").get<std::string>();
            if (!subtask::is_feature_type(type)) return "unknown feature type '" + type + "'";
            if (f->status == FeatureStatus::Undiscovered) return "feature not yet discovered";
            if (feature_bound(f->id)) return "feature already committed to a task";
            f->type = type;
            for (auto& a : approvals) {
                if (a.open && a.kind == "label" && a.target == f->id) {
                    resolve_approval(a, true);
                    return "";
                }
            }
            feature_confirmed(f->id, cause);
            return "";
        }
        if (iv.kind == "confirm_or_edit_plan") {
            Approval* a = find_approval(p.at("approval").get<std::string>());
            if (!a) return "unknown approval";
            if (!a->open) return "approval already resolved";
            std::string action = p.value("action", "approve");
            if (action == "edit") {
                if (a->kind != "scheme") return "only scheme approvals can be edited";
                auto& t = tasks.at(a->target);
                std::string text = p.at("schemes").is_string() ? p.at("schemes").get<std::string>() : p.at("schemes").dump();
                auto parsed = subtask::parse_schemes(text);
                auto o = gen_options(t.group);
                std::vector<subtask::LayeredDag> edited;
                for (std::size_t i = 0; i < parsed.size(); ++i) {
                    auto g = subtask::scheme_to_dag(parsed[i], t.type, static_cast<int>(i), o);
                    g = subtask::insert_exploration(g, o.known_resources, o.priors);
                    auto v = subtask::validate_dag(g, o.group_capabilities, o.known_resources);
                    if (!v.empty()) return "edited scheme " + std::to_string(i) + ": " + v.front().kind + " (" + v.front().detail + ")";
                    edited.push_back(std::move(g));
                }
                if (edited.empty()) return "edit holds no schemes";
                t.candidates = std::move(edited);
                t.excluded.clear();
                a->cause = a->cause.empty() ? cause : a->cause;
                record("schemes_edited", {{"task", t.id}, {"candidates", t.candidates.size()}});
            }
            resolve_approval(*a, true);
            return "";
        }
        if (iv.kind == "select_scheme") {
            auto it = tasks.find(p.at("task").get<std::string>());
            if (it == tasks.end()) return "unknown task";
            auto& t = it->second;
            int k = p.at("scheme").get<int>();
            if (k >= static_cast<int>(t.candidates.size())) return "task has no scheme " + std::to_string(k);
            if (t.status == TaskStatus::Done || t.status == TaskStatus::Failed) return "task is closed";
            for (auto& a : approvals) {
                if (a.open && a.kind == "scheme" && a.target == t.id) {
                    a.open = false;
                    ++metrics.approvals_human;
                    record("approval_resolved", {{"approval", a.id}, {"by", "operator"}});
                }
            }
            t.excluded.erase(k);
            choose(t, cause, k);
            return "";
        }
        if (iv.kind == "reassign_subtask") {
            std::string uid = p.at("subtask").get<std::string>();
            std::string rid = p.at("robot").get<std::string>();
            auto uit = units.find(uid);
            if (uit == units.end() || uit->second.dropped) return "unknown subtask";
            auto* w = world.robot(rid);
            if (!w) return "unknown robot";
            if (w->failed) return "robot has failed";
            auto& u = uit->second;
            if (w->group != u.group) return "robot belongs to another group";
            if (!subtask::platform_can(w->platform, u.node.skill)) return "robot cannot " + u.node.skill;
            auto& rs = *groups.at(u.group).rs;
            auto st = rs.state(uid);
            if (st != sched::UnitState::Pool && st != sched::UnitState::Dispatched) return "subtask already started";
            rs.pin(uid, {rid});
            dispatch(u.group, cause);
            return "";
        }
        if (iv.kind == "define_region") {
            std::string type = p.at("resource").get<std::string>();
            if (!subtask::is_resource_type(type)) return "unknown resource type '" + type + "'";
            std::vector<Vec2> poly;
            for (const auto& pt : p.at("polygon")) poly.push_back({pt[0].get<double>(), pt[1].get<double>()});
            for (const auto& v : poly) {
                if (!world.in_bounds(v)) return "polygon leaves the arena";
            }
            sc.priors.regions[type] = poly;
            auto fix = [&](subtask::LayeredDag& g) {
                for (auto& n : g.nodes) {
                    if (n.exploration && n.resource == type) n.region = poly;
                }
            };
            for (auto& [_, c] : scheme_cache) {
                for (auto& g : c) fix(g);
            }
            std::set<int> touched;
            for (auto& [_, t] : tasks) {
                for (auto& g : t.candidates) fix(g);
                fix(t.dag);
            }
            for (auto& [uid, u] : units) {
                if (!u.node.exploration || u.node.resource != type || u.dropped || u.start >= 0) continue;
                u.node.region = poly;
                u.location = subtask::centroid(poly);
                touched.insert(u.group);
            }
            for (int g : touched) dispatch(g, cause);
            return "";
        }
        if (iv.kind == "trigger_skill") {
            std::string rid = p.at("robot").get<std::string>();
            std::string skill = p.at("skill").get<std::string>();
            auto* w = world.robot(rid);
            if (!w) return "unknown robot";
            if (w->failed) return "robot has failed";
            if (!subtask::is_subtask_skill(skill)) return "unknown skill '" + skill + "'";
            if (!subtask::platform_can(w->platform, skill)) return "robot cannot " + skill;
            auto& rr = robots.at(rid);
            if (rr.mode == Mode::Work || rr.mode == Mode::Manual) return "robot is busy";
            if (rr.mode == Mode::Travel) log_segments(world.stop(rid, static_cast<double>(now)));
            rr.mode = Mode::Manual;
            rr.target.clear();
            ++rr.token;
            rr.busy_until = now + service_for(skill);
            rr.busy_at = w->position;
            record("manual_started", {{"robot", rid}, {"skill", skill}, {"until", rr.busy_until}});
            push(EvKind::ManualDone, rr.busy_until, rid, rr.token);
            dispatch(w->group, cause);
            return "";
        }
        return "unhandled intervention kind";
    }

    void on_manual_done(const std::string& rid, std::uint64_t token) {
        auto& rr = robots.at(rid);
        if (rr.mode != Mode::Manual || rr.token != token) return;
        rr.mode = Mode::Idle;
        record("manual_completed", {{"robot", rid}});
        drive(rid);
        try_start_group(world.robot(rid)->group);
    }

    // ---- loop ----

    bool step() {
        if (ended) return false;
        if (events.empty() || events.top().t > sc.max_time_ms) {
            finish();
            return false;
        }
        Event e = events.top();
        events.pop();
        now = e.t;
        log_segments(world.advance_to(static_cast<double>(now)));
        switch (e.kind) {
            case EvKind::Completion: on_completion(e.target, e.token); break;
            case EvKind::Arrival: on_arrival(e.target, e.token); break;
            case EvKind::ManualDone: on_manual_done(e.target, e.token); break;
            case EvKind::Tick:
                tick_pending = false;
                handle_discoveries(world.sense());
                ensure_tick();
                break;
            case EvKind::Adaptation: on_adaptation(e.target, e.payload); break;
            case EvKind::Intervention: apply(intervention_from_json(e.payload)); break;
            case EvKind::ApprovalTimeout:
                if (Approval* a = find_approval(e.target); a && a->open) resolve_approval(*a, false);
                break;
        }
        return true;
    }

    void finish() {
        if (ended) return;
        ended = true;
        for (const auto& r : world.robots) metrics.distance_m[r.id] = r.odometer_m;
        json verdicts = json::object();
        for (const auto& m : missions) {
            verdicts[m.spec.name] = {{"verdict", monitor::verdict_name(m.tracker->verdict())},
                                     {"complete", m.tracker->complete()}};
        }
        auto sync = sync_violations();
        json sv = json::array();
        for (const auto& v : sync) sv.push_back(v.detail);
        record("end", {{"missions", verdicts}, {"sync_violations", sv}, {"makespan_ms", metrics.makespan_ms},
                       {"distance_m", metrics.distance_m},
                       {"tasks_completed", metrics.tasks_completed}, {"tasks_total", metrics.tasks_total}});
    }

    std::vector<monitor::SyncRule> sync_rules() const {
        std::vector<monitor::SyncRule> out;
        for (const auto& m : missions) {
            auto r = monitor::precedence_rules(m.poset, m.spec.tasks);
            out.insert(out.end(), r.begin(), r.end());
        }
        for (const auto& [id, u] : units) {
            if (u.end >= 0 && u.robots.size() > 1) out.push_back({monitor::SyncKind::Simultaneous, id, id});
        }
        return out;
    }

    monitor::ObservedSchedule observed() const {
        monitor::ObservedSchedule s;
        for (const auto& [id, u] : units) {
            if (u.start < 0 || u.end < 0) continue;
            for (const auto& r : u.robots) {
                s[id][r] = {u.start, u.end};
                auto& task = s[u.task];
                auto it = task.find(r);
                if (it == task.end()) {
                    task[r] = {u.start, u.end};
                } else {
                    it->second.start_ms = std::min(it->second.start_ms, u.start);
                    it->second.end_ms = std::max(it->second.end_ms, u.end);
                }
            }
        }
        return s;
    }

    std::vector<monitor::SyncViolation> sync_violations() const { return monitor::check_sync(sync_rules(), observed()); }
};

Engine::Engine(Scenario sc, EngineOptions opts) : impl_(std::make_unique<Impl>()) {
    impl_->sc = std::move(sc);
    impl_->opts = std::move(opts);
    impl_->setup();
}

Engine::~Engine() = default;

void Engine::schedule(const Intervention& iv) {
    if (!iv.time_ms) throw InterventionError("scripted interventions need a time");
    validate_shape(iv);
    impl_->push(EvKind::Intervention, *iv.time_ms, iv.kind, 0, intervention_to_json(iv));
}

InterventionOutcome Engine::apply_now(Intervention iv) {
    validate_shape(iv);
    if (impl_->ended) return {false, "run has ended"};
    // Same-time events first, as a scripted copy of this intervention would see them.
    run_until(impl_->now);
    if (impl_->ended) return {false, "run has ended"};
    impl_->log_segments(impl_->world.advance_to(static_cast<double>(impl_->now)));
    iv.time_ms = impl_->now;
    return impl_->apply(iv);
}

bool Engine::step() { return impl_->step(); }

void Engine::run() {
    while (impl_->step()) {
    }
}

void Engine::run_until(Millis t) {
    while (!impl_->ended && !impl_->events.empty() && impl_->events.top().t <= t && impl_->events.top().t <= impl_->sc.max_time_ms) {
        impl_->step();
    }
    if (!impl_->ended && (impl_->events.empty() || impl_->events.top().t > impl_->sc.max_time_ms)) {
        impl_->finish();
        return;
    }
    if (!impl_->ended) impl_->now = std::max(impl_->now, t);
}

bool Engine::finished() const { return impl_->ended; }
Millis Engine::now() const { return impl_->now; }
Millis Engine::next_event_ms() const { return impl_->events.empty() ? -1 : impl_->events.top().t; }
const std::vector<nlohmann::json>& Engine::log() const { return impl_->log; }

std::string Engine::log_jsonl() const {
    std::string out;
    for (const auto& r : impl_->log) out += r.dump() + "\n";
    return out;
}

const RunMetrics& Engine::metrics() const { return impl_->metrics; }
const std::vector<Intervention>& Engine::applied() const { return impl_->applied; }

std::vector<const monitor::MissionTracker*> Engine::trackers() const {
    std::vector<const monitor::MissionTracker*> out;
    for (const auto& m : impl_->missions) out.push_back(m.tracker.get());
    return out;
}

std::vector<monitor::SyncRule> Engine::sync_rules() const { return impl_->sync_rules(); }
monitor::ObservedSchedule Engine::observed_schedule() const { return impl_->observed(); }
std::vector<monitor::SyncViolation> Engine::sync_violations() const { return impl_->sync_violations(); }

nlohmann::json Engine::state_json() const {
    const auto& I = *impl_;
    json j;
    j["t"] = I.now;
    j["finished"] = I.ended;
    j["robots"] = json::array();
    for (const auto& r : I.world.robots) {
        const auto& rr = I.robots.at(r.id);
        j["robots"].push_back({{"id", r.id}, {"platform", subtask::platform_name(r.platform)}, {"group", r.group},
                               {"pos", mm(r.position)}, {"mode", mode_name(rr.mode)}, {"target", rr.target},
                               {"queue", I.groups.at(r.group).rs->queue(r.id)}});
    }
    j["features"] = json::array();
    for (const auto& f : I.world.features) {
        j["features"].push_back({{"id", f.id}, {"type", f.type}, {"pos", mm(f.position)}, {"status", feature_status_name(f.status)}});
    }
    j["resources"] = json::array();
    for (const auto& r : I.world.resources) {
        j["resources"].push_back({{"id", r.id}, {"type", r.type}, {"pos", mm(r.position)}, {"known", r.known}});
    }
    j["tasks"] = json::array();
    for (const auto& id : I.task_order) {
        const auto& t = I.tasks.at(id);
        json units = json::array();
        if (t.version > 0) {
            const auto& rs = *I.groups.at(t.group).rs;
            for (const auto& u : t.unit_ids) {
                units.push_back({{"id", u}, {"state", rs.has(u) ? sched::unit_state_name(rs.state(u)) : "gone"},
                                 {"robots", rs.has(u) ? json(rs.robots_of(u)) : json::array()}});
            }
        }
        j["tasks"].push_back({{"id", id}, {"type", t.type}, {"symbol", t.symbol}, {"group", t.group},
                              {"mission", I.missions[t.mission].spec.name}, {"status", task_status_name(t.status)},
                              {"scheme", t.chosen}, {"candidates", t.candidates.size()}, {"units", units}});
    }
    j["missions"] = json::array();
    for (const auto& m : I.missions) {
        std::size_t d = m.tracker->distance();
        j["missions"].push_back({{"name", m.spec.name}, {"verdict", monitor::verdict_name(m.tracker->verdict())},
                                 {"complete", m.tracker->complete()},
                                 {"distance", d == automaton::kInfiniteDistance ? json(nullptr) : json(d)}});
    }
    j["regions"] = json::object();
    for (const auto& [type, poly] : I.sc.priors.regions) {
        json pts = json::array();
        for (const auto& p : poly) pts.push_back(mm(p));
        j["regions"][type] = pts;
    }
    j["pending_approvals"] = 0;
    for (const auto& a : I.approvals) j["pending_approvals"] = j["pending_approvals"].get<int>() + (a.open ? 1 : 0);
    j["metrics"] = I.metrics.to_json();
    return j;
}

nlohmann::json Engine::approvals_json() const {
    const auto& I = *impl_;
    json out = json::array();
    for (const auto& a : I.approvals) {
        if (!a.open) continue;
        json j = {{"id", a.id}, {"kind", a.kind}, {"target", a.target}, {"created_ms", a.created}, {"deadline_ms", a.deadline}};
        if (a.kind == "scheme") {
            const auto& t = I.tasks.at(a.target);
            json sch = json::array();
            for (const auto& g : t.candidates) sch.push_back(subtask::dag_to_json(g));
            j["schemes"] = sch;
        } else {
            for (const auto& x : I.world.features) {
                if (x.id == a.target) j["label"] = x.type;
            }
        }
        out.push_back(j);
    }
    return out;
}

nlohmann::json Engine::automata_json() const {
    json out = json::array();
    for (const auto& m : impl_->missions) out.push_back(m.tracker->snapshot());
    return out;
}

nlohmann::json Engine::gantt_json() const {
    const auto& I = *impl_;
    json j;
    j["tasks"] = json::array();
    for (const auto& id : I.task_order) {
        const auto& t = I.tasks.at(id);
        if (t.first_start < 0) continue;
        j["tasks"].push_back({{"task", id}, {"type", t.type}, {"group", t.group}, {"start_ms", t.first_start},
                              {"end_ms", t.done}, {"status", task_status_name(t.status)}});
    }
    j["subtasks"] = json::array();
    std::vector<std::pair<Millis, std::string>> order;
    for (const auto& [id, u] : I.units) {
        if (u.start >= 0) order.emplace_back(u.start, id);
    }
    std::sort(order.begin(), order.end());
    for (const auto& [_, id] : order) {
        const auto& u = I.units.at(id);
        j["subtasks"].push_back({{"subtask", id}, {"task", u.task}, {"skill", u.node.skill}, {"resource", u.node.resource},
                                 {"robots", u.robots}, {"start_ms", u.start}, {"end_ms", u.end}});
    }
    return j;
}

std::string Engine::gantt_csv(bool subtasks) const {
    auto g = gantt_json();
    std::ostringstream os;
    if (!subtasks) {
        os << "task,type,group,start_ms,end_ms,status\n";
        for (const auto& r : g["tasks"]) {
            os << r["task"].get<std::string>() << ',' << r["type"].get<std::string>() << ',' << r["group"].get<int>() << ','
               << r["start_ms"].get<Millis>() << ',' << r["end_ms"].get<Millis>() << ',' << r["status"].get<std::string>()
               << '\n';
        }
    } else {
        os << "subtask,task,skill,resource,robots,start_ms,end_ms\n";
        for (const auto& r : g["subtasks"]) {
            std::string robots;
            for (const auto& x : r["robots"]) robots += (robots.empty() ? "" : ";") + x.get<std::string>();
            os << r["subtask"].get<std::string>() << ',' << r["task"].get<std::string>() << ','
               << r["skill"].get<std::string>() << ',' << r["resource"].get<std::string>() << ',' << robots << ','
               << r["start_ms"].get<Millis>() << ',' << r["end_ms"].get<Millis>() << '\n';
        }
    }
    return os.str();
}

}  // namespace swarm::sim
