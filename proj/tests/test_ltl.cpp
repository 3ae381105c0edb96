#include <algorithm>
#include <chrono>
#include <random>

#include "doctest.h"
#include "oracles/ltl_oracle.hpp"
#include "swarmplan/automaton/nba.hpp"
#include "swarmplan/automaton/rposet.hpp"
#include "swarmplan/ltl/parse.hpp"
#include "swarmplan/ltl/semantics.hpp"
#include "swarmplan/ltl/translate.hpp"

using namespace swarm;
using ltl::Formula;
using ltl::parse_ltl;

namespace {

ltl::LassoWord to_lib(const oracle::Lasso& w) { return ltl::LassoWord(w.prefix, w.loop); }

automaton::Nba nba_of(const std::string& text) { return ltl::translate_to_nba(parse_ltl(text)); }

const std::string kCorpus = std::string(SWARM_DATA_DIR) + "/ltl_corpus.txt";

}  // namespace

TEST_CASE("parser builds the expected trees") {
    auto f = parse_ltl("tank -> (insp && <>(cool && <>(repair && monitor)))");
    auto want = Formula::implies(
        Formula::atom("tank"),
        Formula::conj(Formula::atom("insp"),
                      Formula::eventually(Formula::conj(
                          Formula::atom("cool"),
                          Formula::eventually(Formula::conj(Formula::atom("repair"), Formula::atom("monitor")))))));
    CHECK(f == want);
    CHECK(parse_ltl("p U q U r") == Formula::until(Formula::atom("p"), Formula::until(Formula::atom("q"), Formula::atom("r"))));
    CHECK(parse_ltl("a || b && c") == Formula::disj(Formula::atom("a"), Formula::conj(Formula::atom("b"), Formula::atom("c"))));
    CHECK(parse_ltl("!X p") == Formula::negation(Formula::next(Formula::atom("p"))));
}

TEST_CASE("parser rejects malformed text") {
    CHECK_THROWS_AS(parse_ltl("p &&"), ltl::ParseError);
    CHECK_THROWS_AS(parse_ltl("(p"), ltl::ParseError);
    CHECK_THROWS_AS(parse_ltl("P"), ltl::ParseError);
    CHECK_THROWS_AS(parse_ltl("p q"), ltl::ParseError);
    CHECK_THROWS_AS(parse_ltl("<>x", std::set<std::string>{"p"}), ltl::UndeclaredPropositionError);
}

TEST_CASE("print then parse is the identity on the corpus") {
    for (const auto& e : oracle::load_corpus(kCorpus)) {
        auto f = parse_ltl(e.formula);
        CAPTURE(e.formula);
        CHECK(parse_ltl(f.str()) == f);
        auto n = ltl::to_nnf(f);
        CHECK(parse_ltl(n.str()) == n);
    }
}

TEST_CASE("co-safe classification") {
    CHECK(ltl::is_co_safe(ltl::to_nnf(parse_ltl("<>p"))));
    CHECK(ltl::is_co_safe(ltl::to_nnf(parse_ltl("p U q"))));
    CHECK_FALSE(ltl::is_co_safe(ltl::to_nnf(parse_ltl("[]<>monitor"))));
}

TEST_CASE("satisfies on small words") {
    using L = ltl::Label;
    CHECK(ltl::satisfies(parse_ltl("<>p"), ltl::LassoWord({L{}}, {L{"p"}})));
    CHECK_FALSE(ltl::satisfies(parse_ltl("[]p"), ltl::LassoWord({L{"p"}}, {L{}})));
    CHECK(ltl::satisfies(parse_ltl("p U q"), ltl::LassoWord({L{"p"}, L{"p", "q"}}, {L{}})));
    CHECK_FALSE(ltl::satisfies(parse_ltl("p U q"), ltl::LassoWord({L{"p"}}, {L{"p"}})));
}

TEST_CASE("reference semantics agrees with hand results") {
    using L = oracle::Letter;
    CHECK(oracle::satisfies(parse_ltl("<>p"), {{L{}}, {L{"p"}}}));
    CHECK_FALSE(oracle::satisfies(parse_ltl("[]p"), {{L{"p"}}, {L{}}}));
    CHECK(oracle::satisfies(parse_ltl("[]<>p"), {{}, {L{}, L{"p"}}}));
    CHECK_FALSE(oracle::satisfies(parse_ltl("<>[]p"), {{}, {L{}, L{"p"}}}));
    CHECK(oracle::satisfies(parse_ltl("X X p"), {{L{}, L{}}, {L{"p"}}}));
}

TEST_CASE("eventually automaton has the canonical shape") {
    auto a = nba_of("<>p");
    REQUIRE(a.size() == 2);
    REQUIRE(a.initial().size() == 1);
    auto q0 = a.initial()[0];
    CHECK_FALSE(a.accepting(q0));
    CHECK(a.distance(q0) == 1);
    auto r = automaton::initial_reachable(a);
    auto r1 = automaton::advance(a, r, ltl::Label{"p"});
    CHECK(r1.states.size() == 2);
    CHECK(automaton::intersects_accepting(a, r1));
    automaton::ReachableSet sink{0, {}};
    for (auto q : r1.states) {
        if (a.accepting(q)) sink.states.push_back(q);
    }
    CHECK(automaton::advance(a, sink, ltl::Label{}) == sink);
}

TEST_CASE("always-eventually monitor automaton") {
    auto a = nba_of("[]<>monitor");
    using L = ltl::Label;
    CHECK_FALSE(a.accepts(ltl::LassoWord({}, {L{}})));
    CHECK(a.accepts(ltl::LassoWord({}, {L{"monitor"}})));
}

TEST_CASE("automaton acceptance matches word semantics on the corpus") {
    auto corpus = oracle::load_corpus(kCorpus);
    REQUIRE(corpus.size() >= 20);
    std::size_t words = 0, disagree = 0;
    for (const auto& e : corpus) {
        CAPTURE(e.formula);
        REQUIRE(e.alphabet.size() <= 3);
        auto f = parse_ltl(e.formula);
        auto a = ltl::translate_to_nba(f);
        oracle::WordSemantics sem(f);
        oracle::each_lasso(e.alphabet, 4, 2, [&](const oracle::Lasso& w) {
            ++words;
            bool want = sem(w);
            bool lib_sat = ltl::satisfies(f, to_lib(w));
            bool lib_acc = a.accepts(to_lib(w));
            bool ref_acc = oracle::nba_accepts(a, w);
            if (want != lib_sat || want != lib_acc || want != ref_acc) {
                if (disagree < 5) MESSAGE(e.formula << " on " << to_lib(w).str());
                ++disagree;
            }
        });
    }
    CHECK(words > 0);
    CHECK(disagree == 0);
}

TEST_CASE("to_nnf is idempotent and keeps the language") {
    for (const auto& e : oracle::load_corpus(kCorpus)) {
        if (e.alphabet.size() > 2) continue;
        auto f = parse_ltl(e.formula);
        auto n = ltl::to_nnf(f);
        CHECK(ltl::is_nnf(n));
        CHECK(ltl::to_nnf(n) == n);
        oracle::each_lasso(e.alphabet, 3, 2, [&](const oracle::Lasso& w) {
            CHECK(oracle::satisfies(f, w) == oracle::satisfies(n, w));
        });
    }
}

namespace {

// Random lassos over every proposition of the formula.
std::size_t sampled_disagreements(const std::string& text, std::size_t count, std::uint64_t seed) {
    auto f = parse_ltl(text);
    auto a = ltl::translate_to_nba(f);
    oracle::WordSemantics sem(f);
    auto props = f.propositions();
    std::vector<std::string> ps(props.begin(), props.end());
    std::mt19937_64 rng(seed);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < count; ++i) {
        oracle::Lasso w;
        auto letter = [&] {
            oracle::Letter l;
            for (const auto& p : ps) {
                if (rng() % 3 == 0) l.insert(p);
            }
            return l;
        };
        std::size_t pre = rng() % 5, loop = 1 + rng() % 3;
        for (std::size_t k = 0; k < pre; ++k) w.prefix.push_back(letter());
        for (std::size_t k = 0; k < loop; ++k) w.loop.push_back(letter());
        if (sem(w) != a.accepts(to_lib(w))) ++bad;
    }
    return bad;
}

// The seven response clauses of the plant specification in the corpus.
std::vector<std::string> response_clauses() {
    std::vector<std::string> out;
    for (const auto& e : oracle::load_corpus(kCorpus)) {
        if (e.formula.rfind("[]", 0) != 0) continue;
        if (e.formula.find("insp") != std::string::npos || e.formula.find("res && monitor") != std::string::npos) {
            out.push_back(e.formula);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("task-level plant formula agrees with semantics on 10000 sampled words") {
    auto corpus = oracle::load_corpus(kCorpus);
    CHECK(sampled_disagreements(corpus.back().formula, 10000, 7) == 0);
}

TEST_CASE("response clauses agree with semantics over their full alphabets") {
    auto cs = response_clauses();
    CHECK(cs.size() == 7);
    for (const auto& c : cs) {
        CAPTURE(c);
        CHECK(sampled_disagreements(c, 2000, 3) == 0);
    }
}

TEST_CASE("state budget turns blowup into an error") {
    ltl::TranslateOptions o;
    o.state_budget = 3;
    CHECK_THROWS_AS(ltl::translate_to_nba(parse_ltl("<>(a && <>(b && <>(c && <>d)))"), o), ltl::StateBudgetExceeded);

    std::string all = "[]<>monitor";
    for (const auto& c : response_clauses()) all += " && " + c;
    o.state_budget = 512;
    try {
        ltl::translate_to_nba(parse_ltl(all), o);
        FAIL("expected the budget to be exceeded");
    } catch (const ltl::StateBudgetExceeded& x) {
        CHECK(x.budget() == 512);
        CHECK(x.states_built() == 513);
        CHECK(x.formula_size() > 50);
    }
}

TEST_CASE("advance equals explicit subset simulation and distributes over union") {
    auto corpus = oracle::load_corpus(kCorpus);
    auto a = ltl::translate_to_nba(parse_ltl(corpus.back().formula));
    std::mt19937_64 rng(11);
    auto ps = a.propositions();
    for (int i = 0; i < 300; ++i) {
        automaton::ReachableSet r1, r2;
        for (automaton::StateId q = 0; q < a.size(); ++q) {
            if (rng() % 3 == 0) r1.states.push_back(q);
            if (rng() % 3 == 0) r2.states.push_back(q);
        }
        ltl::Label obs;
        for (const auto& p : ps) {
            if (rng() % 4 == 0) obs.insert(p);
        }
        std::set<automaton::StateId> want;
        for (auto q : r1.states) {
            for (const auto& t : a.transitions(q)) {
                bool ok = true;
                for (std::size_t b = 0; b < ps.size(); ++b) {
                    bool has = obs.count(ps[b]) > 0;
                    if (((t.guard.pos >> b) & 1u) && !has) ok = false;
                    if (((t.guard.neg >> b) & 1u) && has) ok = false;
                }
                if (ok) want.insert(t.target);
            }
        }
        auto got = automaton::advance(a, r1, obs);
        CHECK(std::vector<automaton::StateId>(want.begin(), want.end()) == got.states);
        CHECK(automaton::advance(a, automaton::set_union(r1, r2), obs) ==
              automaton::set_union(got, automaton::advance(a, r2, obs)));
    }
}

TEST_CASE("distance is a BFS potential") {
    for (const auto& e : oracle::load_corpus(kCorpus)) {
        auto a = ltl::translate_to_nba(parse_ltl(e.formula));
        for (automaton::StateId q = 0; q < a.size(); ++q) {
            std::size_t d = a.distance(q);
            CHECK((d == 0) == a.accepting(q));
            if (d == 0 || d == automaton::kInfiniteDistance) continue;
            bool step = false;
            for (const auto& t : a.transitions(q)) step = step || a.distance(t.target) == d - 1;
            CHECK(step);
        }
    }
}

TEST_CASE("dead-end states have infinite distance") {
    auto a = nba_of("!p U (q && X false)");
    auto r = automaton::advance(a, automaton::initial_reachable(a), ltl::Label{"p"});
    CHECK(automaton::min_distance(a, r) == automaton::kInfiniteDistance);
}

namespace {

// Precedence pairs seen on every accepted ordering of singleton task letters.
std::set<std::pair<std::string, std::string>> orderings_oracle(const automaton::Nba& a,
                                                               std::vector<std::string> tasks) {
    std::sort(tasks.begin(), tasks.end());
    std::vector<std::vector<std::string>> ok;
    do {
        oracle::Lasso w;
        for (const auto& t : tasks) w.prefix.push_back({t});
        w.loop.push_back({});
        if (oracle::nba_accepts(a, w)) ok.push_back(tasks);
    } while (std::next_permutation(tasks.begin(), tasks.end()));
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& h : tasks) {
        for (const auto& l : tasks) {
            if (h == l) continue;
            bool always = !ok.empty();
            for (const auto& seq : ok) {
                auto ih = std::find(seq.begin(), seq.end(), h) - seq.begin();
                auto il = std::find(seq.begin(), seq.end(), l) - seq.begin();
                always = always && ih < il;
            }
            if (always) out.insert({h, l});
        }
    }
    return out;
}

}  // namespace

TEST_CASE("single task poset") {
    auto p = automaton::extract_rposet(nba_of("<>p"), {"p"});
    CHECK(p.tasks == std::vector<std::string>{"p"});
    CHECK(p.precedence.empty());
    CHECK(p.exclusion.empty());
}

TEST_CASE("chained eventualities give a precedence") {
    auto p = automaton::extract_rposet(nba_of("<>(a && <>b)"), {"a", "b"});
    CHECK(p.precedes("a", "b"));
    CHECK_FALSE(p.precedes("b", "a"));
}

TEST_CASE("plant poset orders rescue before fire and af before htlf") {
    auto corpus = oracle::load_corpus(kCorpus);
    std::vector<std::string> tasks{"af", "h2s", "htlf", "hvf", "poi", "tank", "tp"};
    std::set<std::string> decl(tasks.begin(), tasks.end());
    ltl::TranslateOptions o;
    o.extra_propositions = tasks;
    auto a = ltl::translate_to_nba(parse_ltl(corpus.back().formula, decl), o);
    auto p = automaton::extract_rposet(a, tasks);
    for (const auto& r : {"tp", "poi"}) {
        for (const auto& f : {"af", "htlf", "hvf", "h2s", "tank"}) CHECK(p.precedes(r, f));
    }
    CHECK(p.precedes("af", "htlf"));
    CHECK_FALSE(p.precedes("hvf", "h2s"));
    CHECK_FALSE(p.precedes("h2s", "tank"));
    p.validate();

    CHECK(p.precedence == orderings_oracle(a, tasks));

    auto dag = automaton::rposet_to_dag(p);
    for (const auto& e : dag.precedence_edges()) {
        CHECK(e.from != "hvf");
        CHECK(e.from != "h2s");
    }
}

TEST_CASE("poset precedence matches orderings on small co-safe formulas") {
    const char* fs[] = {"<>a && <>b && <>c", "<>a && <>b && (!b U a)", "<>(a && <>(b && <>c))",
                        "(!c U a) && (!c U b) && <>c", "<>a && <>c && (!c U (b && <>a))"};
    for (const char* s : fs) {
        CAPTURE(s);
        std::vector<std::string> tasks{"a", "b", "c"};
        ltl::TranslateOptions o;
        o.extra_propositions = tasks;
        auto a = ltl::translate_to_nba(parse_ltl(s), o);
        auto p = automaton::extract_rposet(a, tasks);
        p.validate();
        auto want = orderings_oracle(a, tasks);
        for (const auto& pr : p.precedence) {
            if (p.has_task(pr.first) && p.has_task(pr.second)) CHECK(want.count(pr));
        }
    }
}

TEST_CASE("transitive reduction keeps the covering edges") {
    automaton::RPoset p;
    p.tasks = {"a", "b", "c"};
    p.precedence = {{"a", "b"}, {"b", "c"}, {"a", "c"}};
    auto d = automaton::rposet_to_dag(p);
    auto e = d.precedence_edges();
    REQUIRE(e.size() == 2);
    CHECK(e[0].from == "a");
    CHECK(e[0].to == "b");
    CHECK(e[1].from == "b");
    CHECK(e[1].to == "c");

    automaton::RPoset empty;
    empty.tasks = {"x", "y"};
    auto d2 = automaton::rposet_to_dag(empty);
    CHECK(d2.nodes.size() == 2);
    CHECK(d2.edges.empty());

    automaton::RPoset cyc;
    cyc.tasks = {"a", "b"};
    cyc.precedence = {{"a", "b"}, {"b", "a"}};
    CHECK_THROWS_AS(automaton::rposet_to_dag(cyc), std::logic_error);
}
