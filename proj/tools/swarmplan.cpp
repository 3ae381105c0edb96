// swarmplan run | serve | bench

#include <pthread.h>

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "swarmplan/service/commands.hpp"
#include "swarmplan/service/server.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Multi-robot mission planning and simulation"};
    app.require_subcommand(1);

    swarm::service::RunArgs ra;
    bool no_human_run = false;
    std::string verify_log;
    auto* run = app.add_subcommand("run", "Simulate a scenario, or check a stored log with --verify");
    run->add_option("--scenario", ra.scenario, "Scenario JSON file");
    run->add_option("--interventions", ra.interventions, "Scripted intervention trace");
    run->add_option("--seed", ra.seed, "Random seed")->default_val(1);
    run->add_option("--out", ra.out, "Artifact directory");
    run->add_flag("--no-human", no_human_run, "Disable approval gates");
    run->add_option("--verify", verify_log, "Run log to check instead of simulating");

    std::string scenario, bind = "127.0.0.1:8080";
    std::uint64_t seed = 1;
    bool no_human_serve = false;
    double speed = 1.0;
    auto* serve = app.add_subcommand("serve", "HTTP service around a live run");
    serve->add_option("--scenario", scenario, "Scenario started at launch");
    serve->add_option("--bind", bind, "host:port")->default_val("127.0.0.1:8080");
    serve->add_option("--seed", seed)->default_val(1);
    serve->add_flag("--no-human", no_human_serve);
    serve->add_option("--speed", speed, "Simulated seconds per wall second; 0 steps on request")->default_val(1.0);

    std::string corpus;
    bool as_json = false;
    auto* bench = app.add_subcommand("bench", "Run the benchmark corpus");
    bench->add_option("--corpus", corpus, "Directory of instance files")->required();
    bench->add_flag("--json", as_json);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    if (*run) {
        if (!verify_log.empty()) return swarm::service::cmd_verify(verify_log, ra.scenario, std::cout, std::cerr);
        if (ra.scenario.empty()) {
            std::cerr << "run: --scenario or --verify is required\n";
            return 1;
        }
        ra.human = !no_human_run;
        return swarm::service::cmd_run(ra, std::cout, std::cerr);
    }
    if (*serve) {
        auto colon = bind.rfind(':');
        if (colon == std::string::npos) {
            std::cerr << "serve: --bind must be host:port\n";
            return 1;
        }
        int port = 0;
        try {
            port = std::stoi(bind.substr(colon + 1));
        } catch (const std::exception&) {
            std::cerr << "serve: bad port in '" << bind << "'\n";
            return 1;
        }
        swarm::service::ServiceOptions so;
        so.scenario_path = scenario;
        so.seed = seed;
        so.human = !no_human_serve;
        so.speed = speed;
        so.autostart = !scenario.empty();
        // server threads inherit the mask; the main thread takes the signal
        sigset_t set;
        sigemptyset(&set);
        sigaddset(&set, SIGINT);
        sigaddset(&set, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &set, nullptr);
        try {
            swarm::service::Service svc(so);
            int bound = svc.start(bind.substr(0, colon), port);
            std::cerr << "listening on " << bind.substr(0, colon) << ":" << bound << "\n";
            int sig = 0;
            sigwait(&set, &sig);
            svc.stop();
        } catch (const std::exception& e) {
            std::cerr << "serve: " << e.what() << "\n";
            return 1;
        }
        return 0;
    }
    return swarm::service::cmd_bench(corpus, as_json, std::cout, std::cerr);
}
