#include <chrono>
#include <cmath>

#include "doctest.h"
#include "oracles/search_oracle.hpp"
#include "swarmplan/search/mission_search.hpp"

using namespace swarm;
using namespace swarm::search;

namespace {

GroupProfile group(int id, std::set<std::string> caps, Vec2 home = {0, 0}, double v = 2.0) {
    GroupProfile g;
    g.id = id;
    g.members = {"g" + std::to_string(id)};
    g.capabilities = std::move(caps);
    g.home = home;
    g.velocity = v;
    return g;
}

Millis planned_wait(const SearchNode& v, const std::string& sym) {
    for (const auto& plan : v.plans) {
        for (const auto& pt : plan) {
            if (pt.task.symbol == sym) return pt.start_ms;
        }
    }
    FAIL("task not planned: " << sym);
    return -1;
}

const PlannedTask& planned(const SearchNode& v, const std::string& sym) {
    for (const auto& plan : v.plans) {
        for (const auto& pt : plan) {
            if (pt.task.symbol == sym) return pt;
        }
    }
    throw std::logic_error("task not planned: " + sym);
}

}  // namespace

TEST_CASE("node value examples") {
    Profile z;
    z.makespan_ms = {10000, 7000};
    z.cost_ms = {2000, 3000};
    z.distance = {1, 0};
    CHECK(node_value(z, 0.1, 5.0) == doctest::Approx(15.5).epsilon(1e-12));
    z.distance = {automaton::kInfiniteDistance, 0};
    CHECK(std::isinf(node_value(z, 0.1, 5.0)));
}

TEST_CASE("root value counts automaton steps") {
    std::vector<Mission> ms;
    for (int k = 0; k < 2; ++k) {
        std::string a = "a" + std::to_string(k), b = "b" + std::to_string(k), c = "c" + std::to_string(k);
        ms.push_back(oracle::make_mission("m" + std::to_string(k), "<>(" + a + " && X <>(" + b + " && X <>" + c + "))",
                                          {{a, {1, 0}, 1000}, {b, {2, 0}, 1000}, {c, {3, 0}, 1000}}));
    }
    Problem p(ms, {group(1, {"a0", "b0", "c0", "a1", "b1", "c1"})});
    auto root = root_node(p);
    CHECK(root.profile.distance == std::vector<std::size_t>{3, 3});
    CHECK(node_value(root.profile, 0.1, 1.0) == doctest::Approx(6.0));
}

TEST_CASE("dominance") {
    CHECK(dominates({1, 2, 3}, {1, 2, 4}));
    CHECK_FALSE(dominates({1, 5}, {2, 4}));
    CHECK_FALSE(dominates({1, 2}, {1, 2}));
    CHECK_THROWS_AS(dominates({1}, {1, 2}), std::invalid_argument);
}

TEST_CASE("candidates respect capabilities") {
    auto m = oracle::make_mission("plant", "<>tp && <>af && (!af U tp)", {{"tp", {5, 5}, 1000}, {"af", {9, 9}, 1000}});
    Problem p({m}, {group(1, {"af"}), group(2, {"tp", "af"})});
    auto root = root_node(p);
    auto c1 = candidate_tasks(p, root, 0);
    for (const auto& t : c1) CHECK(t.symbol != "tp");
    auto c2 = candidate_tasks(p, root, 1);
    bool has_tp = false;
    for (const auto& t : c2) has_tp = has_tp || t.symbol == "tp";
    CHECK(has_tp);
}

TEST_CASE("candidates match an exhaustive transition scan") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        auto c = oracle::random_search_case(seed);
        const auto& p = c.problem;
        auto root = root_node(p);
        for (std::size_t g = 0; g < p.groups().size(); ++g) {
            std::set<TaskRef> want;
            for (std::size_t k = 0; k < p.missions().size(); ++k) {
                const auto& m = p.missions()[k];
                for (const auto& s : m.sites) {
                    if (!p.groups()[g].capabilities.count(s.symbol)) continue;
                    auto bit = m.nba.encode({s.symbol});
                    for (auto q : root.reach[k].states) {
                        for (const auto& t : m.nba.transitions(q)) {
                            if (t.guard.admits(bit)) want.insert(TaskRef{k, s.symbol});
                        }
                    }
                }
            }
            auto got = candidate_tasks(p, root, g);
            CHECK(std::set<TaskRef>(got.begin(), got.end()) == want);
        }
    }
}

TEST_CASE("expand appends and discards dead ends") {
    auto m = oracle::make_mission("m", "<>(a && <>b)", {{"a", {2, 0}, 1000}, {"b", {4, 0}, 500}});
    Problem p({m}, {group(1, {"a", "b"})});
    auto root = root_node(p);
    std::string why;
    auto bad = expand(p, root, 0, TaskRef{0, "b"}, &why);
    CHECK_FALSE(bad.has_value());
    CHECK_FALSE(why.empty());
    auto c = expand(p, root, 0, TaskRef{0, "a"});
    REQUIRE(c);
    REQUIRE(c->plans[0].size() == 1);
    CHECK(c->plans[0][0].travel_ms == 1000);
    CHECK(c->plans[0][0].duration_ms == 2000);
    CHECK(c->profile.makespan_ms[0] == 2000);
    auto d = expand(p, *c, 0, TaskRef{0, "b"});
    REQUIRE(d);
    CHECK(d->complete);
    CHECK(d->plans[0][1].start_ms == 2000);
    CHECK(d->profile.makespan_ms[0] == 3500);
    CHECK(d->profile.cost_ms[0] == 3500);
}

TEST_CASE("schedule start times") {
    std::vector<std::vector<TaskDuration>> plans{{{TaskRef{0, "a"}, 2000}, {TaskRef{0, "b"}, 3000}, {TaskRef{0, "c"}, 4000}}};
    auto s = schedule_start_times(plans, {});
    CHECK(s.start_ms[0] == std::vector<Millis>{0, 2000, 5000});
    CHECK(s.makespan_ms[0] == 9000);

    std::vector<std::vector<TaskDuration>> two{{{TaskRef{0, "a"}, 5000}}, {{TaskRef{0, "b"}, 1000}}};
    auto t = schedule_start_times(two, {{TaskRef{0, "a"}, TaskRef{0, "b"}}});
    CHECK(t.start_ms[1][0] == 5000);
    CHECK(t.makespan_ms[1] == 6000);

    CHECK(schedule_start_times({{}, {}}, {}).makespan_ms == std::vector<Millis>{0, 0});

    std::vector<std::vector<TaskDuration>> cyc{{{TaskRef{0, "a"}, 1}, {TaskRef{0, "b"}, 1}}};
    CHECK_THROWS_AS(schedule_start_times(cyc, {{TaskRef{0, "b"}, TaskRef{0, "a"}}}), ScheduleCycle);
}

TEST_CASE("forced order with one group") {
    auto m = oracle::make_mission("m", "<>(a && <>b)", {{"a", {2, 0}, 1000}, {"b", {4, 0}, 500}});
    Problem p({m}, {group(1, {"a", "b"})});
    auto r = search::search(p);
    REQUIRE(r.complete);
    REQUIRE(r.best.plans[0].size() == 2);
    CHECK(r.best.plans[0][0].task.symbol == "a");
    CHECK(r.best.plans[0][1].task.symbol == "b");
}

TEST_CASE("infeasible mission is an error") {
    CHECK_THROWS(oracle::make_mission("m", "<>a && []!a", {{"a", {2, 0}, 1000}}));
    Mission m;
    m.name = "m";
    m.nba = ltl::translate_to_nba(ltl::parse_ltl("<>a && []!a"));
    m.sites = {{"a", {2, 0}, 1000}};
    Problem p({m}, {group(1, {"a"})});
    CHECK_THROWS_AS(search::search(p), InfeasibleMission);
}

TEST_CASE("incumbent equals brute force on generated instances") {
    SearchParams sp;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto c = oracle::random_search_case(seed);
        CAPTURE(seed);
        auto t0 = std::chrono::steady_clock::now();
        auto r = search::search(c.problem, sp);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        auto want = oracle::brute_force_search(c.problem, sp.eta1);
        REQUIRE(want.complete_nodes > 0);
        CHECK(r.complete);
        CHECK(r.value == want.value);
        CHECK(secs < 1.0);
    }
}

TEST_CASE("incumbent history never increases and replay reaches acceptance") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto c = oracle::random_search_case(seed);
        auto r = search::search(c.problem);
        for (std::size_t i = 1; i < r.incumbent_history.size(); ++i) {
            CHECK(r.incumbent_history[i] <= r.incumbent_history[i - 1]);
        }
        const auto& ms = c.problem.missions();
        std::vector<automaton::ReachableSet> reach;
        for (std::size_t k = 0; k < ms.size(); ++k) reach.push_back(automaton::initial_reachable(ms[k].nba, k));
        for (const auto& t : r.best.order) reach[t.mission] = automaton::advance(ms[t.mission].nba, reach[t.mission], ltl::Label{std::string(t.symbol)});
        for (std::size_t k = 0; k < ms.size(); ++k) CHECK(automaton::intersects_accepting(ms[k].nba, reach[k]));
        // every task at most once, capabilities respected
        std::set<TaskRef> seen;
        for (std::size_t g = 0; g < r.best.plans.size(); ++g) {
            for (const auto& pt : r.best.plans[g]) {
                CHECK(seen.insert(pt.task).second);
                CHECK(c.problem.groups()[g].capabilities.count(pt.task.symbol));
            }
        }
    }
}

TEST_CASE("pruned children are dominated or infeasible") {
    auto c = oracle::random_search_case(42);
    auto r = search::search(c.problem);
    for (const auto& tr : r.trace) {
        if (!tr.pruned) continue;
        CHECK_FALSE(tr.reason.empty());
    }
    auto r2 = search::search(c.problem);
    CHECK(r2.value == r.value);
    CHECK(r2.best.order == r.best.order);
    CHECK(r2.nodes_created == r.nodes_created);
}

TEST_CASE("parallel expansion gives the same result") {
    for (std::uint64_t seed = 3; seed <= 8; ++seed) {
        auto c = oracle::random_search_case(seed);
        SearchParams a, b;
        b.threads = 4;
        auto ra = search::search(c.problem, a), rb = search::search(c.problem, b);
        CHECK(ra.value == rb.value);
        CHECK(ra.best.order == rb.best.order);
    }
}

TEST_CASE("plant mission orders rescue before fire") {
    std::string f =
        "<>tp && <>poi && <>af && <>htlf && <>hvf && <>h2s && <>tank && (!(af || htlf || hvf || h2s || tank) U tp) && "
        "(!(af || htlf || hvf || h2s || tank) U poi) && (!htlf U af)";
    auto m = oracle::make_mission("plant", f,
                                  {{"tp", {20, 30}, 30000}, {"poi", {40, 20}, 30000}, {"af", {60, 60}, 40000},
                                   {"htlf", {70, 30}, 40000}, {"hvf", {20, 70}, 30000}, {"h2s", {80, 80}, 30000},
                                   {"tank", {50, 90}, 40000}});
    Problem p({m}, {group(1, {"tp", "poi", "af", "hvf", "tank", "htlf"}, {10, 12}),
                    group(2, {"af", "htlf", "hvf", "h2s", "tank"}, {90, 12})});
    auto r = search::search(p);
    REQUIRE(r.complete);
    Millis rescue_end = std::max(planned(r.best, "tp").end_ms(), planned(r.best, "poi").end_ms());
    for (const char* s : {"af", "htlf", "hvf", "h2s", "tank"}) CHECK(planned_wait(r.best, s) >= rescue_end);
    CHECK(planned(r.best, "htlf").start_ms >= planned(r.best, "af").end_ms());
}
