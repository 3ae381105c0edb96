// Writes the benchmark corpus read by `swarmplan bench`.
//   gen_bench <out dir>

#include <filesystem>
#include <iostream>

#include "oracles/sched_oracle.hpp"
#include "oracles/search_oracle.hpp"
#include "swarmplan/sched/verify.hpp"
#include "swarmplan/service/run_log.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void put(const fs::path& dir, const std::string& name, const json& j) {
    swarm::service::write_text((dir / (name + ".json")).string(), j.dump(2) + "\n");
    std::cout << name << "\n";
}

json sched_entry(const swarm::sched::SchedInstance& in, bool with_oracle) {
    json j = {{"kind", "sched"}, {"instance", swarm::sched::instance_to_json(in)}};
    if (with_oracle) j["expected_makespan_ms"] = oracle::brute_force_makespan(in);
    return j;
}

json search_entry(const oracle::SearchCase& c) {
    json ms = json::array();
    const auto& missions = c.problem.missions();
    for (std::size_t k = 0; k < missions.size(); ++k) {
        json sites = json::array();
        for (const auto& s : missions[k].sites) {
            sites.push_back({{"symbol", s.symbol}, {"position", {s.position.x, s.position.y}}, {"service_ms", s.service_ms}});
        }
        ms.push_back({{"name", missions[k].name}, {"ltl", c.formulas[k]}, {"sites", sites}});
    }
    json gs = json::array();
    for (const auto& g : c.problem.groups()) {
        gs.push_back({{"id", g.id}, {"capabilities", g.capabilities}, {"home", {g.home.x, g.home.y}},
                      {"velocity", g.velocity}, {"members", g.members}});
    }
    return {{"kind", "search"}, {"missions", ms}, {"groups", gs}};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: gen_bench <out dir>\n";
        return 1;
    }
    fs::path dir(argv[1]);
    fs::create_directories(dir);

    swarm::sched::SchedInstance trivial;
    trivial.robots.push_back({"r1", {"inspect"}, 0, {0, 0}, 2.0});
    trivial.subtasks.push_back({"t/inspect", "inspect", 1, 15000, 1.0, 0, {}});
    put(dir, "sched_01x1_trivial", sched_entry(trivial, true));
    for (std::uint64_t s = 1; s <= 4; ++s) {
        put(dir, "sched_08x3_" + std::to_string(s), sched_entry(oracle::random_instance(8300 + s, 8, 3), true));
    }
    put(dir, "sched_15x5_full_horizon", sched_entry(oracle::random_instance(15005, 15, 5), false));
    for (std::uint64_t s : {7, 19, 31, 44}) {
        put(dir, "search_seed" + std::to_string(s), search_entry(oracle::random_search_case(s)));
    }
    return 0;
}
