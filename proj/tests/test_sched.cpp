#include <chrono>

#include "doctest.h"
#include "oracles/sched_oracle.hpp"
#include "swarmplan/sched/rolling.hpp"
#include "swarmplan/sched/verify.hpp"
#include "swarmplan/subtask/skills.hpp"

using namespace swarm;
using namespace swarm::sched;

namespace {

SchedRobot robot(const std::string& id, std::set<std::string> skills, Vec2 at = {0, 0}) {
    SchedRobot r;
    r.id = id;
    r.skills = std::move(skills);
    r.position = at;
    return r;
}

SchedSubtask sub(const std::string& id, const std::string& skill, Millis d, double p = 1.0, int k = 1) {
    SchedSubtask s;
    s.id = id;
    s.skill = skill;
    s.duration_ms = d;
    s.p_success = p;
    s.robots = k;
    return s;
}

subtask::SubtaskNode node(const std::string& id, const std::string& skill, Millis service, const std::string& res = "") {
    subtask::SubtaskNode n;
    n.id = id;
    n.skill = skill;
    n.duration_ms = service;
    n.resource = res;
    return n;
}

bool has_violation(const std::vector<Violation>& v, const std::string& family) {
    for (const auto& x : v) {
        if (x.constraint == family) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("staged duration adds travel to service time") {
    PlacedDag p;
    p.task = "t";
    p.site = {10, 0};
    p.dag.nodes = {node("n", "inspect", 5000)};
    auto inst = build_instance({p}, {robot("r", {"inspect"})}, {}, 0.3, 0);
    REQUIRE(inst.subtasks.size() == 1);
    CHECK(inst.subtasks[0].duration_ms == 10000);
    CHECK(inst.subtasks[0].id == "t/n");
}

TEST_CASE("staging goes by way of the nearest resource") {
    PlacedDag p;
    p.task = "t";
    p.site = {10, 0};
    p.dag.nodes = {node("n", "liquid_spray", 1000, "water")};
    std::vector<ResourceSite> res = {{"water", {0, 6}}, {"water", {10, 8}}};
    auto inst = build_instance({p}, {robot("r", {"liquid_spray"})}, res, 0.3, 0);
    // nearest to the site is (10, 8): 0->(10,8) is sqrt(164) m, then 8 m.
    Millis expect = static_cast<Millis>(std::ceil((std::sqrt(164.0) + 8.0) / 2.0 * 1000.0)) + 1000;
    CHECK(std::llabs(inst.subtasks[0].duration_ms - expect) <= 1);
}

TEST_CASE("missing capability names the skill") {
    PlacedDag p;
    p.task = "tank";
    p.dag.nodes = {node("n", "fix", 1000)};
    std::vector<SchedRobot> group;
    for (auto pl : {subtask::Platform::UAV, subtask::Platform::UGV}) {
        auto caps = subtask::subtask_capabilities({pl});
        group.push_back(robot(subtask::platform_name(pl), caps));
    }
    try {
        build_instance({p}, group, {}, 0.3, 0);
        FAIL("expected infeasible");
    } catch (const InfeasibleInstance& e) {
        CHECK(e.constraint() == "capability");
        CHECK(std::string(e.what()).find("fix") != std::string::npos);
    }
}

TEST_CASE("empty dag set gives an empty, trivially feasible instance") {
    auto inst = build_instance({}, {robot("r", {"inspect"})}, {}, 0.3, 7000);
    CHECK(inst.subtasks.empty());
    auto a = solve(inst);
    CHECK(a.makespan_ms == 7000);
    CHECK(verify(inst, a).empty());
}

TEST_CASE("two independent subtasks run in parallel") {
    SchedInstance in;
    in.now = 3000;
    in.robots = {robot("r0", {"a"}), robot("r1", {"a"})};
    in.subtasks = {sub("x", "a", 5000), sub("y", "a", 5000)};
    in.big_m = big_m_bound(in.now, in.subtasks, {}, 2.0);
    auto a = solve(in);
    CHECK(a.start_ms[0] == 3000);
    CHECK(a.start_ms[1] == 3000);
    CHECK(a.makespan_ms == 8000);
    CHECK(a.optimal);
    CHECK(verify(in, a).empty());
}

TEST_CASE("a chain on one robot runs back to back") {
    SchedInstance in;
    in.robots = {robot("r0", {"a"})};
    in.subtasks = {sub("x", "a", 4000), sub("y", "a", 6000)};
    in.precedence = {{0, 1}};
    auto a = solve(in);
    CHECK(a.start_ms[1] == a.start_ms[0] + 4000);
    CHECK(a.makespan_ms == 10000);
    CHECK(a.next(0, 0) == std::optional<std::size_t>(1));
    CHECK_FALSE(a.next(0, 1).has_value());
}

TEST_CASE("multi-robot subtasks bind several robots with one start") {
    SchedInstance in;
    in.robots = {robot("r0", {"a"}), robot("r1", {"a"}), robot("r2", {"a"})};
    in.robots[1].available_ms = 2000;
    in.subtasks = {sub("x", "a", 4000, 1.0, 2), sub("y", "a", 1000)};
    auto a = solve(in);
    CHECK(a.robots[0].size() == 2);
    CHECK(verify(in, a).empty());
    CHECK(a.makespan_ms == oracle::brute_force_makespan(in));
}

TEST_CASE("solve matches the exhaustive oracle on the corpus") {
    auto corpus = oracle::exactness_corpus(50);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& in = corpus[i];
        CAPTURE(i);
        auto a = solve(in);
        CHECK(a.optimal);
        CHECK(a.makespan_ms == oracle::brute_force_makespan(in));
        auto v = verify(in, a);
        CHECK(v.empty());
        double risk = 0;
        for (std::size_t s = 0; s < in.subtasks.size(); ++s) risk += (1 - in.subtasks[s].p_success) * a.robots[s].size();
        CHECK(risk <= in.epsilon + 1e-12);
    }
}

TEST_CASE("solve is deterministic") {
    auto in = oracle::random_instance(77, 8, 3);
    auto a = solve(in), b = solve(in);
    CHECK(a.robots == b.robots);
    CHECK(a.start_ms == b.start_ms);
    CHECK(a.sequence == b.sequence);
}

TEST_CASE("pins are honoured") {
    SchedInstance in;
    in.robots = {robot("r0", {"a"}), robot("r1", {"a"})};
    in.robots[1].available_ms = 9000;
    in.subtasks = {sub("x", "a", 1000)};
    in.subtasks[0].pinned = {"r1"};
    auto a = solve(in);
    CHECK(a.robots[0] == std::vector<std::size_t>{1});
    CHECK(a.start_ms[0] == 9000);
    CHECK(verify(in, a).empty());
}

TEST_CASE("infeasible instances carry the binding constraint family") {
    SchedInstance in;
    in.epsilon = 0.2;
    in.robots = {robot("r0", {"a"})};
    in.subtasks = {sub("x", "a", 1000, 0.85), sub("y", "a", 1000, 0.85)};
    try {
        solve(in);
        FAIL("expected budget");
    } catch (const InfeasibleInstance& e) {
        CHECK(e.constraint() == "budget");
    }
    in.epsilon = 0.3;
    in.subtasks = {sub("x", "b", 1000)};
    CHECK_THROWS_AS(solve(in), InfeasibleInstance);
    in.subtasks = {sub("x", "a", 1000), sub("y", "a", 1000)};
    in.precedence = {{0, 1}, {1, 0}};
    try {
        solve(in);
        FAIL("expected cycle");
    } catch (const InfeasibleInstance& e) {
        CHECK(e.constraint() == "precedence");
    }
}

TEST_CASE("verify flags overlap and budget") {
    SchedInstance in;
    in.epsilon = 0.2;
    in.robots = {robot("r0", {"a"})};
    in.subtasks = {sub("x", "a", 5000, 0.85), sub("y", "a", 5000, 0.85)};
    Assignment a;
    a.robots = {{0}, {0}};
    a.start_ms = {0, 2000};
    a.sequence = {{0, 1}};
    a.makespan_ms = 7000;
    auto v = verify(in, a);
    CHECK(has_violation(v, "overlap"));
    CHECK(has_violation(v, "budget"));
    CHECK_FALSE(has_violation(v, "precedence"));

    a.start_ms = {0, 5000};
    a.makespan_ms = 10000;
    in.epsilon = 0.3;
    CHECK(verify(in, a).empty());

    in.precedence = {{1, 0}};
    CHECK(has_violation(verify(in, a), "precedence"));
}

TEST_CASE("verify flags capability, count, release and sequence errors") {
    SchedInstance in;
    in.now = 1000;
    in.robots = {robot("r0", {"a"}), robot("r1", {"b"})};
    in.subtasks = {sub("x", "a", 1000)};
    Assignment a;
    a.robots = {{1}};
    a.start_ms = {0};
    a.sequence = {{}, {0}};
    a.makespan_ms = 1000;
    auto v = verify(in, a);
    CHECK(has_violation(v, "capability"));
    CHECK(has_violation(v, "release"));
    a.robots = {{0, 1}};
    CHECK(has_violation(verify(in, a), "assignment"));
    a.robots = {{0}};
    a.start_ms = {1000};
    a.makespan_ms = 2000;
    CHECK(has_violation(verify(in, a), "sequence"));
    a.sequence = {{0}, {}};
    CHECK(verify(in, a).empty());
}

TEST_CASE("instance and assignment json round trip") {
    auto in = oracle::random_instance(5, 6, 3);
    for (auto& r : in.robots) r.position = {1.25, -3.5};
    auto back = instance_from_json(instance_to_json(in));
    CHECK(instance_to_json(back) == instance_to_json(in));
    auto a = solve(in);
    auto j = assignment_to_json(in, a);
    CHECK(j["makespan_ms"] == a.makespan_ms);
    CHECK(j["subtasks"].size() == in.subtasks.size());
}

TEST_CASE("rolling dispatch emits at most the batch size") {
    RollingOptions o;
    o.epsilon = 0.3;
    RollingState st(o);
    for (int i = 0; i < 20; ++i) st.add({sub("s" + std::to_string(i), "a", 1000), {}});
    std::vector<SchedRobot> rs = {robot("r0", {"a"}), robot("r1", {"a"}), robot("r2", {"a"})};
    auto plan = st.replan(0, rs);
    CHECK(plan.solved);
    CHECK(plan.instance.subtasks.size() == 16);
    CHECK(plan.deferred.size() == 4);
    CHECK(st.ids_in(UnitState::Dispatched).size() == 16);
    CHECK(verify(plan.instance, plan.assignment).empty());
}

TEST_CASE("no eligible subtasks means no solver call") {
    RollingState st;
    auto plan = st.replan(0, {robot("r0", {"a"})});
    CHECK_FALSE(plan.solved);
    CHECK(st.solves() == 0);
}

TEST_CASE("window respects precedence and the risk budget") {
    RollingOptions o;
    o.epsilon = 0.3;
    RollingState st(o);
    st.add({sub("a", "a", 1000, 0.9), {}});
    st.add({sub("b", "a", 1000, 0.9), {"a"}});
    st.add({sub("c", "a", 1000, 0.9), {"b"}});
    st.add({sub("d", "a", 1000, 0.8), {"c"}});
    st.add({sub("e", "a", 1000, 0.5), {}});
    std::vector<std::string> deferred, blocked;
    auto w = st.window(&deferred, &blocked);
    CHECK(w == std::vector<std::string>{"a", "b", "c"});
    CHECK(deferred == std::vector<std::string>{"d"});
    CHECK(blocked == std::vector<std::string>{"e"});
}

TEST_CASE("re-solve is due after four completions and running work stays frozen") {
    RollingState st;
    for (int i = 0; i < 6; ++i) st.add({sub("s" + std::to_string(i), "a", 1000), {}});
    st.add({sub("t", "a", 1000), {"s5"}});
    std::vector<SchedRobot> rs = {robot("r0", {"a"}), robot("r1", {"a"})};
    st.replan(0, rs);
    std::vector<std::string> started;
    Millis now = 0;
    for (int round = 0; round < 2; ++round) {
        for (const auto& r : rs) {
            auto id = st.next(r.id);
            REQUIRE(id);
            st.mark_started(*id, now);
            started.push_back(*id);
        }
        now += 1000;
        for (std::size_t i = started.size() - 2; i < started.size(); ++i) st.mark_done(started[i], now);
    }
    CHECK(st.due());
    // One unit running while re-planning.
    auto id = st.next("r0");
    REQUIRE(id);
    st.mark_started(*id, now);
    auto rs2 = rs;
    rs2[0].available_ms = now + 1000;
    rs2[1].available_ms = now;
    auto plan = st.replan(now, rs2);
    CHECK_FALSE(st.due());
    CHECK(st.state(*id) == UnitState::Running);
    CHECK(st.started_at(*id) == std::optional<Millis>(now));
    for (const auto& s : plan.instance.subtasks) CHECK(s.id != *id);
    if (*id == "s5") {
        auto k = plan.instance.subtask_index("t");
        REQUIRE(k);
        CHECK(plan.instance.subtasks[*k].release_ms == now + 1000);
    }
    CHECK(verify(plan.instance, plan.assignment).empty());
}

TEST_CASE("abort and drop return work to the pool") {
    RollingState st;
    st.add({sub("x", "a", 1000), {}});
    st.add({sub("y", "a", 1000), {"x"}});
    st.replan(0, {robot("r0", {"a"})});
    st.mark_started("x", 0);
    st.abort("x");
    CHECK(st.state("x") == UnitState::Pool);
    auto gone = st.drop_if([](const PoolEntry& e) { return e.sub.id == "y"; });
    CHECK(gone == std::vector<std::string>{"y"});
    CHECK_FALSE(st.has("y"));
    CHECK_THROWS(st.add({sub("z", "a", 1000), {"missing"}}));
}

TEST_CASE("scheme selection takes the shorter plan and reports certificates") {
    auto make = [](Millis d, double p) {
        subtask::LayeredDag g;
        g.nodes = {node("n", "a", d)};
        g.nodes[0].p_success = p;
        return g;
    };
    InstanceBuilder build = [](const subtask::LayeredDag& g) {
        PlacedDag p;
        p.task = "t";
        p.dag = g;
        return build_instance({p}, {robot("r0", {"a"})}, {}, 0.3, 0);
    };
    auto one = select_scheme({make(5000, 1.0)}, build);
    CHECK(one.index == 0);

    auto two = select_scheme({make(40000, 1.0), make(23000, 1.0)}, build, 2);
    CHECK(two.index == 1);
    CHECK(two.assignment.makespan_ms == 23000);

    auto tie = select_scheme({make(9000, 1.0), make(9000, 1.0)}, build);
    CHECK(tie.index == 0);

    // A risky exploration-backed scheme gives way to a safe one.
    auto risky = select_scheme({make(1000, 0.6), make(30000, 1.0)}, build);
    CHECK(risky.index == 1);
    CHECK(risky.outcomes[0].constraint == "budget");

    try {
        select_scheme({make(1000, 0.6), make(1000, 0.5)}, build);
        FAIL("expected error");
    } catch (const SchemeSelectionError& e) {
        REQUIRE(e.certificates.size() == 2);
        CHECK(e.certificates[0].constraint == "budget");
        CHECK(e.certificates[1].constraint == "budget");
    }
}

TEST_CASE("full-horizon 15 subtasks on 5 robots solves") {
    auto in = oracle::random_instance(15005, 15, 5);
    auto t0 = std::chrono::steady_clock::now();
    auto a = solve(in);
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    MESSAGE("15/5 solve: " << s << " s, nodes " << a.nodes << ", optimal " << a.optimal);
    CHECK(verify(in, a).empty());
}
