// HTTP service around one live run.
//
//   POST /run               {"scenario": path | object, "seed", "human", "speed", "interventions": [...]}
//   POST /run/step          {"until_ms": t} | {"events": n} | {"to_end": true}
//   POST /run/intervention  one intervention; time is ignored and set on arrival
//   GET  /run/state | /run/approvals | /run/metrics
//   GET  /run/gantt         ?format=csv&level=tasks|subtasks
//   GET  /run/automata      ?format=dot&mission=name
//   GET  /run/log           run log as JSON lines
//   GET  /run/interventions applied interventions as a scripted trace
//   GET  /run/events        ?from=n, chunked JSON lines that follow the log live
//
// speed is simulated seconds per wall second; 0 leaves the clock to
// /run/step. One loop thread owns the engine: requests queue commands to
// it, and reads come from snapshots it publishes.

#pragma once

#include <cstdint>
#include <memory>
#include <string>

namespace swarm::service {

struct ServiceOptions {
    std::string scenario_path;  // default scenario for POST /run
    std::uint64_t seed = 1;
    bool human = true;
    double speed = 1.0;
    bool autostart = false;  // start a run of scenario_path immediately
};

class Service {
public:
    explicit Service(ServiceOptions opts);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and serves on a background thread. Port 0 picks a free port.
    /// Returns the bound port; throws std::runtime_error when binding fails.
    int start(const std::string& host, int port);
    void stop();
    /// Blocks until stop() is called from another thread.
    void wait();
    int port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace swarm::service
