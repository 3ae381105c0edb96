#include <atomic>
#include <cmath>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "swarmplan/subtask/generation.hpp"
#include "swarmplan/subtask/layered_dag.hpp"
#include "swarmplan/subtask/plan_library.hpp"
#include "swarmplan/subtask/prompt.hpp"
#include "swarmplan/subtask/skills.hpp"

using namespace swarm;
using namespace swarm::subtask;

namespace {

const std::vector<std::string> kAllSkills{"inspect",      "monitor",      "operate", "rescue",
                                          "clean_up",     "ignite",       "fix",     "solid_spray",
                                          "lay",          "liquid_spray", "gas_spray", "explore"};

PromptContext context(const std::string& type, std::vector<PerceivedItem> seen = {}) {
    return build_prompt(type + "_1", type, {10, 10}, {}, kAllSkills, std::move(seen)).context;
}

std::vector<std::string> chain(const LayeredDag& g) {
    std::vector<std::string> out;
    for (auto i : g.topological_order()) {
        const auto& n = g.nodes[i];
        out.push_back(n.skill + (n.resource.empty() ? "" : "(" + n.resource + ")") + "x" + std::to_string(n.robots));
    }
    return out;
}

class FixedBackend : public Backend {
public:
    explicit FixedBackend(std::string text) : text_(std::move(text)) {}
    std::string name() const override { return "fixed"; }
    std::string respond(Stage s, const std::string&, const PromptContext&) override {
        if (s == Stage::Sequencing) ++calls;
        return text_;
    }
    int calls = 0;

private:
    std::string text_;
};

SubtaskNode n(const std::string& id, const std::string& skill, const std::string& res = "") {
    SubtaskNode x;
    x.id = id;
    x.skill = skill;
    x.resource = res;
    return x;
}

}  // namespace

TEST_CASE("electrical fire retrieves the high-voltage plan") {
    auto lib = PlanLibrary::builtin();
    auto hits = lib.retrieve("electrical fire", 3);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].index == 2);
    CHECK(hits[0].text.find("High voltage") != std::string::npos);
    CHECK(hits[0].score > hits[1].score);
}

TEST_CASE("an entry is its own best match") {
    auto lib = PlanLibrary::builtin();
    for (std::size_t i = 0; i < lib.size(); ++i) {
        auto h = lib.retrieve(lib.entries()[i]);
        CHECK(h[0].index == i);
        CHECK(h[0].score == doctest::Approx(1.0));
    }
}

TEST_CASE("cosine scores match hand computation") {
    PlanLibrary lib({"water spray valve", "foam spray", "metal net net"});
    // query tf {spray 1, water 1}
    auto h = lib.retrieve("spray water", 3);
    REQUIRE(h.size() == 3);
    CHECK(h[0].index == 0);
    CHECK(h[0].score == doctest::Approx(2.0 / (std::sqrt(3.0) * std::sqrt(2.0))));
    CHECK(h[1].index == 1);
    CHECK(h[1].score == doctest::Approx(1.0 / (std::sqrt(2.0) * std::sqrt(2.0))));
    CHECK(h[2].score == doctest::Approx(0.0));
    // tf {net 2, metal 1} against {net 1}
    auto g = lib.retrieve("net");
    CHECK(g[0].index == 2);
    CHECK(g[0].score == doctest::Approx(2.0 / std::sqrt(5.0)));
    // ties keep the lower index
    PlanLibrary twin({"foam", "foam"});
    CHECK(twin.retrieve("foam")[0].index == 0);
    CHECK_THROWS_AS(lib.retrieve("x", 0), std::invalid_argument);
    CHECK_THROWS_AS(PlanLibrary({}), std::invalid_argument);
}

TEST_CASE("stage prompts carry the context fields") {
    auto p = build_prompt("flame_gas", "alkane_gas_flame", {3, 4}, {"close the valve"},
                          {"inspect", "operate", "liquid_spray", "monitor"},
                          {{"valve_1", "valve", {5, 5}}, {"water_1", "water", {6, 6}}});
    for (const char* s : {"inspect", "operate", "liquid_spray", "monitor"}) {
        CHECK(p.analysis.find(std::string("- ") + s + ":") != std::string::npos);
    }
    CHECK(p.analysis.find("Resources: valve, water") != std::string::npos);
    CHECK(p.analysis.find("close the valve") != std::string::npos);
    auto seq = fill_slots(p.sequencing, "ANALYSIS TEXT", "GUIDE TEXT");
    CHECK(seq.find("Related Knowledge Analysis: ANALYSIS TEXT") != std::string::npos);
    CHECK(seq.find("ANALYSIS TEXT") < seq.find("GUIDE TEXT"));

    auto empty = build_prompt("x", "trapped_person", {0, 0}, {}, {"inspect"}, {});
    CHECK(empty.analysis.find("Resources:\n") != std::string::npos);

    CHECK_THROWS_AS(build_prompt("x", "trapped_person", {0, 0}, {}, {"teleport"}, {}), std::invalid_argument);
    CHECK_THROWS_AS(build_prompt("x", "trapped_person", {0, 0}, {}, {"inspect"}, {{"w", "water", {NAN, 0}}}),
                    std::invalid_argument);
}

TEST_CASE("rule backend for an alkane flame gives two schemes") {
    RuleBackend b;
    auto r = generate(context("alkane_gas_flame", {{"valve_1", "valve", {1, 1}}, {"water_1", "water", {2, 2}}}), b);
    REQUIRE(r.candidates.size() == 2);
    CHECK(chain(r.candidates[0]) == std::vector<std::string>{"inspectx2", "operate(valve)x1", "monitorx2"});
    CHECK(chain(r.candidates[1]) == std::vector<std::string>{"inspectx2", "liquid_spray(water)x1", "monitorx2"});
}

TEST_CASE("rule backend for a damaged tank") {
    RuleBackend b;
    auto r = generate(context("damaged_tank", {{"water_1", "water", {2, 2}}}), b);
    REQUIRE(r.candidates.size() == 1);
    auto c = chain(r.candidates[0]);
    REQUIRE(c.size() == 3);
    CHECK(c[0].rfind("liquid_spray(water)", 0) == 0);
    CHECK(c[1].rfind("fix", 0) == 0);
    CHECK(c[2].rfind("monitor", 0) == 0);
}

TEST_CASE("rule generation is a pure function of type and resources") {
    RuleBackend b;
    for (const auto& f : task_features()) {
        auto a = generate(context(f.type), b);
        auto c = generate(context(f.type), b);
        REQUIRE(a.candidates.size() == c.candidates.size());
        CHECK(a.candidates.size() >= 1);
        CHECK(a.candidates.size() <= 4);
        for (std::size_t i = 0; i < a.candidates.size(); ++i) {
            CHECK(dag_to_json(a.candidates[i]) == dag_to_json(c.candidates[i]));
            CHECK(a.candidates[i].acyclic());
            CHECK(validate_dag(a.candidates[i], {kAllSkills.begin(), kAllSkills.end()}, {}).empty());
        }
    }
}

TEST_CASE("missing resources get exploration nodes") {
    RuleBackend b;
    auto r = generate(context("high_temp_liquid_flame"), b);
    for (const auto& g : r.candidates) {
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            if (g.nodes[i].resource.empty() || g.nodes[i].exploration) continue;
            bool guarded = false;
            for (auto a : g.ancestors(i)) guarded = guarded || (g.nodes[a].exploration && g.nodes[a].resource == g.nodes[i].resource);
            CHECK(guarded);
        }
    }
}

TEST_CASE("unparseable output surfaces the raw text") {
    FixedBackend b("not json at all");
    GenerationOptions o;
    o.retries = 2;
    try {
        generate(context("trapped_person"), b, o);
        FAIL("expected a parse error");
    } catch (const GenerationError& e) {
        CHECK(e.kind() == GenerationError::Kind::Parse);
        CHECK(e.raw() == "not json at all");
    }
    CHECK(b.calls == 3);
}

TEST_CASE("tolerant parsing of the sequencing object") {
    auto s = parse_schemes(
        "Here you go: {\"Schemes\": {\"scheme_1\": {\"step_1\": {\"Required_Skill\": \"inspect\", \"resource\": \"\", "
        "\"dependency\": []}, \"step_2\": {\"required_skill\": \"lay\", \"required_resources\": \"asbestos_felt\", "
        "\"dependency\": [\"step_1\"]}}}} thanks");
    REQUIRE(s.size() == 1);
    REQUIRE(s[0].steps.size() == 2);
    CHECK(s[0].steps[1].resource == "asbestos_felt");
    CHECK(s[0].steps[1].dependency == std::vector<std::string>{"step_1"});
    CHECK_THROWS_AS(parse_schemes("{\"schemes\": {\"a\": {\"s\": {\"required_skill\": \"inspect\"}}}}"), GenerationError);
}

TEST_CASE("exploration insertion") {
    LayeredDag g;
    g.task = "high_temp_liquid_flame";
    g.nodes = {n("a", "inspect"), n("b", "liquid_spray", "water"), n("c", "liquid_spray", "water"), n("d", "monitor")};
    g.edges = {{0, 1}, {0, 2}, {1, 3}, {2, 3}};
    ExplorationPriors pr;
    pr.success["water"] = 0.6;
    auto x = insert_exploration(g, {}, pr);
    REQUIRE(x.nodes.size() == 5);
    auto e = x.index_of("explore_water");
    REQUIRE(e);
    CHECK(x.nodes[*e].exploration);
    CHECK(x.nodes[*e].p_success == doctest::Approx(0.6));
    CHECK(x.predecessors(*e).empty());
    auto succ = x.successors(*e);
    std::set<std::string> to;
    for (auto s : succ) to.insert(x.nodes[s].id);
    CHECK(to == std::set<std::string>{"b", "c"});

    auto same = insert_exploration(g, {"water"}, pr);
    CHECK(dag_to_json(same) == dag_to_json(g));
}

TEST_CASE("validation reports every violation") {
    LayeredDag g;
    g.nodes = {n("a", "inspect"), n("b", "teleport"), n("c", "liquid_spray", "water")};
    g.edges = {{0, 1}, {1, 0}};
    auto v = validate_dag(g, {"inspect", "liquid_spray"}, {});
    std::set<std::string> kinds;
    for (const auto& x : v) kinds.insert(x.kind);
    CHECK(kinds.count("cycle"));
    CHECK(kinds.count("unknown skill"));
    CHECK(kinds.count("missing resource"));

    RuleBackend b;
    auto r = generate(context("alkane_gas_flame", {{"valve_1", "valve", {1, 1}}, {"water_1", "water", {2, 2}}}), b);
    CHECK(validate_dag(r.candidates[0], {"inspect", "operate", "liquid_spray", "monitor"}, {"valve", "water"}).empty());
}

TEST_CASE("layers and topological order") {
    LayeredDag g;
    g.nodes = {n("a", "inspect"), n("b", "lay"), n("c", "monitor")};
    g.edges = {{0, 1}, {1, 2}, {0, 2}};
    CHECK(g.layers() == std::vector<int>{0, 1, 2});
    CHECK(g.topological_order() == std::vector<std::size_t>{0, 1, 2});
    auto back = dag_from_json(dag_to_json(g));
    CHECK(dag_to_json(back) == dag_to_json(g));
    g.edges.push_back({2, 0});
    CHECK_FALSE(g.acyclic());
    CHECK(g.layers().empty());
}

TEST_CASE("http backend speaks to a local endpoint") {
    httplib::Server srv;
    std::atomic<int> hits{0};
    srv.Post("/gen", [&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        auto j = nlohmann::json::parse(req.body);
        int stage = j.at("stage").get<int>();
        if (stage < 3) {
            res.set_content(nlohmann::json{{"content", "stage " + std::to_string(stage)}}.dump(), "application/json");
            return;
        }
        res.set_content(
            "{\"schemes\": {\"scheme_1\": {\"step_1\": {\"required_skill\": \"inspect\", \"resource\": \"\", "
            "\"dependency\": []}, \"step_2\": {\"required_skill\": \"rescue\", \"resource\": \"\", \"dependency\": "
            "[\"step_1\"]}}}}",
            "text/plain");
    });
    srv.Post("/slow", [&](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(600));
        res.set_content("late", "text/plain");
    });
    int port = srv.bind_to_any_port("127.0.0.1");
    std::thread t([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();

    HttpBackendOptions o;
    o.url = "http://127.0.0.1:" + std::to_string(port) + "/gen";
    HttpBackend hb(o);
    auto r = generate(context("trapped_person"), hb);
    REQUIRE(r.candidates.size() == 1);
    CHECK(r.analysis == "stage 1");
    CHECK(chain(r.candidates[0]) == std::vector<std::string>{"inspectx2", "rescuex1"});
    CHECK(hits == 3);

    HttpBackendOptions slow;
    slow.url = "http://127.0.0.1:" + std::to_string(port) + "/slow";
    slow.timeout = std::chrono::milliseconds(150);
    HttpBackend sb(slow);
    try {
        sb.respond(Stage::Analysis, "p", context("trapped_person"));
        FAIL("expected a timeout");
    } catch (const GenerationError& e) {
        CHECK(e.kind() == GenerationError::Kind::Timeout);
    }

    HttpBackendOptions dead;
    dead.url = "http://127.0.0.1:1/none";
    HttpBackend db(dead);
    CHECK_THROWS_AS(db.respond(Stage::Analysis, "p", context("trapped_person")), GenerationError);

    srv.stop();
    t.join();
}

TEST_CASE("platform skills and taxonomy") {
    CHECK(platform_can(Platform::Dog, "rescue"));
    CHECK_FALSE(platform_can(Platform::UAV, "rescue"));
    CHECK(platform_can(Platform::TUGV, "lay"));
    CHECK_FALSE(platform_can(Platform::Dog, "liquid_spray"));
    CHECK(platform_velocity(Platform::UGV) == doctest::Approx(2.0));
    CHECK(task_features().size() == 7);
    CHECK(feature_by_symbol("hvf")->type == "high-voltage_electrical_flame");
    CHECK(robots_for("alkane_gas_flame", "inspect") == 2);
    CHECK(resource_types().size() == 9);
    CHECK_THROWS_AS(parse_platform("Boat"), std::invalid_argument);
}
