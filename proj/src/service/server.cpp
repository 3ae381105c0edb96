#include "swarmplan/service/server.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "swarmplan/service/commands.hpp"
#include "swarmplan/service/run_log.hpp"
#include "swarmplan/service/scenario_file.hpp"
#include "swarmplan/sim/engine.hpp"

namespace swarm::service {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Snapshot {
    int run = 0;
    std::string scenario;
    bool finished = false;
    Millis now = 0;
    json state, approvals, metrics, gantt, automata;
    std::string gantt_tasks_csv, gantt_subtasks_csv, trace;
    std::map<std::string, std::string> dots;
};

struct BadRequest : std::runtime_error {
    BadRequest(int status, json body) : std::runtime_error("bad request"), status(status), body(std::move(body)) {}
    int status;
    json body;
};

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
    if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw BadRequest(400, {{"error", "malformed_json"}, {"reason", e.what()}});
    }
}

}  // namespace

struct Service::Impl {
    ServiceOptions opts;
    httplib::Server http;
    std::thread http_thread, loop_thread;
    int port = 0;

    std::mutex qmu;
    std::condition_variable qcv;
    std::deque<std::function<void()>> jobs;
    bool stopping = false;

    // Loop thread only.
    std::unique_ptr<sim::Engine> engine;
    double speed = 1.0;
    Clock::time_point wall0;
    Millis sim0 = 0;
    std::size_t published = 0;
    Millis published_now = -1;
    int run_id = 0;
    std::string scenario_name;

    std::mutex smu;
    std::condition_variable scv;
    std::shared_ptr<const Snapshot> snap;
    std::vector<std::string> lines;  // log records of the current run

    template <class F>
    auto call(F f) -> decltype(f()) {
        using R = decltype(f());
        auto task = std::make_shared<std::packaged_task<R()>>(std::move(f));
        auto fut = task->get_future();
        {
            std::lock_guard<std::mutex> lk(qmu);
            if (stopping) throw BadRequest(503, {{"error", "service stopping"}});
            jobs.push_back([task] { (*task)(); });
        }
        qcv.notify_one();
        return fut.get();
    }

    void loop() {
        for (;;) {
            std::function<void()> job;
            {
                std::unique_lock<std::mutex> lk(qmu);
                qcv.wait_for(lk, std::chrono::milliseconds(20), [&] { return stopping || !jobs.empty(); });
                if (stopping) break;
                if (!jobs.empty()) {
                    job = std::move(jobs.front());
                    jobs.pop_front();
                }
            }
            if (job) job();
            advance();
            publish(false);
        }
        std::lock_guard<std::mutex> lk(qmu);
        jobs.clear();  // callers see a broken promise
    }

    void rebase() {
        wall0 = Clock::now();
        sim0 = engine ? engine->now() : 0;
    }

    void advance() {
        if (!engine || engine->finished() || speed <= 0) return;
        double el = std::chrono::duration<double>(Clock::now() - wall0).count();
        Millis target = sim0 + static_cast<Millis>(el * speed * 1000.0);
        if (target > engine->now()) engine->run_until(target);
    }

    void publish(bool force) {
        if (!engine) return;
        const auto& log = engine->log();
        bool grew = log.size() != published;
        if (!force && !grew && engine->now() == published_now) return;
        auto s = std::make_shared<Snapshot>();
        std::shared_ptr<const Snapshot> old;
        {
            std::lock_guard<std::mutex> lk(smu);
            old = snap;
        }
        s->run = run_id;
        s->finished = engine->finished();
        s->now = engine->now();
        s->state = engine->state_json();
        s->approvals = engine->approvals_json();
        s->metrics = engine->metrics().to_json();
        if (grew || force || !old || old->run != run_id) {
            s->gantt = engine->gantt_json();
            s->gantt_tasks_csv = engine->gantt_csv(false);
            s->gantt_subtasks_csv = engine->gantt_csv(true);
            s->automata = engine->automata_json();
            for (const auto* t : engine->trackers()) s->dots[t->mission()] = t->to_dot();
            s->trace = sim::write_intervention_trace(engine->applied());
        } else {
            s->gantt = old->gantt;
            s->gantt_tasks_csv = old->gantt_tasks_csv;
            s->gantt_subtasks_csv = old->gantt_subtasks_csv;
            s->automata = old->automata;
            s->dots = old->dots;
            s->trace = old->trace;
        }
        s->scenario = scenario_name;
        {
            std::lock_guard<std::mutex> lk(smu);
            for (std::size_t i = published; i < log.size(); ++i) lines.push_back(log[i].dump());
            snap = s;
        }
        published = log.size();
        published_now = engine->now();
        scv.notify_all();
    }

    std::shared_ptr<const Snapshot> current() {
        std::lock_guard<std::mutex> lk(smu);
        if (!snap) throw BadRequest(409, {{"error", "no run"}, {"reason", "POST /run first"}});
        return snap;
    }

    json start_run(const json& body) {
        sim::Scenario sc;
        try {
            if (body.contains("scenario") && body["scenario"].is_object()) {
                sc = parse_scenario(body["scenario"], ".");
            } else {
                std::string path = body.contains("scenario") ? body["scenario"].get<std::string>() : opts.scenario_path;
                if (path.empty()) throw BadRequest(400, {{"error", "no scenario"}, {"reason", "give a scenario"}});
                sc = load_scenario(path);
            }
        } catch (const ScenarioError& e) {
            throw BadRequest(400, e.to_json());
        } catch (const json::exception& e) {
            throw BadRequest(400, {{"error", "malformed_request"}, {"reason", e.what()}});
        }
        std::vector<sim::Intervention> trace;
        if (body.contains("interventions")) {
            try {
                for (const auto& x : body["interventions"]) trace.push_back(sim::intervention_from_json(x));
            } catch (const std::exception& e) {
                throw BadRequest(400, {{"error", "trace_invalid"}, {"reason", e.what()}});
            }
            auto probs = check_trace(trace, sc);
            if (!probs.empty()) throw BadRequest(400, {{"error", "trace_invalid"}, {"reason", probs.front()}});
        }
        sim::EngineOptions eo;
        eo.seed = body.value("seed", opts.seed);
        eo.human = body.value("human", opts.human);
        double sp = body.value("speed", opts.speed);
        if (!(sp >= 0)) throw BadRequest(400, {{"error", "malformed_request"}, {"reason", "speed must be >= 0"}});
        std::string name = sc.name;
        return call([&, eo, sp]() -> json {
            std::unique_ptr<sim::Engine> e;
            try {
                e = std::make_unique<sim::Engine>(sc, eo);
                for (const auto& iv : trace) e->schedule(iv);
            } catch (const std::exception& x) {
                return {{"error", "scenario_invalid"}, {"reason", x.what()}};
            }
            engine = std::move(e);
            scenario_name = name;
            speed = sp;
            ++run_id;
            published = 0;
            published_now = -1;
            {
                std::lock_guard<std::mutex> lk(smu);
                lines.clear();
                auto s = std::make_shared<Snapshot>();
                s->run = run_id;
                s->scenario = name;
                snap = s;
            }
            rebase();
            publish(true);
            return {{"run", run_id}, {"scenario", name}, {"seed", eo.seed}, {"human", eo.human}, {"speed", sp}};
        });
    }

    json step(const json& body) {
        return call([&]() -> json {
            if (!engine) return {{"error", "no run"}};
            if (body.value("to_end", false)) {
                engine->run();
            } else if (body.contains("until_ms")) {
                engine->run_until(body["until_ms"].get<Millis>());
            } else {
                std::size_t n = body.value("events", std::size_t{1});
                for (std::size_t i = 0; i < n && engine->step(); ++i) {
                }
            }
            rebase();
            publish(true);
            return {{"t", engine->now()}, {"finished", engine->finished()}};
        });
    }

    json intervene(const json& body) {
        sim::Intervention iv;
        try {
            iv = sim::intervention_from_json(body);
            iv.time_ms.reset();
            sim::validate_shape(iv);
        } catch (const std::exception& e) {
            throw BadRequest(400, {{"error", "malformed_intervention"}, {"reason", e.what()}});
        }
        return call([&]() -> json {
            if (!engine) return {{"error", "no run"}};
            sim::InterventionOutcome o;
            try {
                o = engine->apply_now(iv);
            } catch (const sim::InterventionError& e) {
                return {{"error", "malformed_intervention"}, {"reason", e.what()}};
            }
            publish(true);
            return {{"accepted", o.accepted}, {"reason", o.reason}, {"t", engine->now()}};
        });
    }

    template <class F>
    void guarded(httplib::Response& res, F&& f) {
        try {
            f();
        } catch (const BadRequest& b) {
            reply(res, b.status, b.body);
        } catch (const std::exception& e) {
            reply(res, 500, {{"error", "internal"}, {"reason", e.what()}});
        }
    }

    void routes() {
        using httplib::Request;
        using httplib::Response;
        http.Post("/run", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                auto r = start_run(parse_body(req));
                reply(res, r.contains("error") ? 400 : 200, r);
            });
        });
        http.Post("/run/step", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                auto r = step(parse_body(req));
                reply(res, r.contains("error") ? 409 : 200, r);
            });
        });
        http.Post("/run/intervention", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                auto r = intervene(parse_body(req));
                if (r.contains("error")) {
                    reply(res, r["error"] == "no run" ? 409 : 400, r);
                } else {
                    reply(res, 200, r);
                }
            });
        });
        http.Get("/run/state", [this](const Request&, Response& res) {
            guarded(res, [&] {
                auto s = current();
                json j = s->state;
                j["run"] = s->run;
                j["scenario"] = s->scenario;
                reply(res, 200, j);
            });
        });
        http.Get("/run/approvals", [this](const Request&, Response& res) {
            guarded(res, [&] { reply(res, 200, current()->approvals); });
        });
        http.Get("/run/metrics", [this](const Request&, Response& res) {
            guarded(res, [&] { reply(res, 200, current()->metrics); });
        });
        http.Get("/run/gantt", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                auto s = current();
                if (req.get_param_value("format") == "csv") {
                    bool sub = req.get_param_value("level") == "subtasks";
                    res.set_content(sub ? s->gantt_subtasks_csv : s->gantt_tasks_csv, "text/csv");
                } else {
                    reply(res, 200, s->gantt);
                }
            });
        });
        http.Get("/run/automata", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                auto s = current();
                if (req.get_param_value("format") == "dot") {
                    std::string m = req.get_param_value("mission");
                    auto it = m.empty() ? s->dots.begin() : s->dots.find(m);
                    if (it == s->dots.end()) throw BadRequest(404, {{"error", "unknown mission"}});
                    res.set_content(it->second, "text/vnd.graphviz");
                } else {
                    reply(res, 200, s->automata);
                }
            });
        });
        http.Get("/run/log", [this](const Request&, Response& res) {
            guarded(res, [&] {
                current();
                std::string body;
                {
                    std::lock_guard<std::mutex> lk(smu);
                    for (const auto& l : lines) body += l + "\n";
                }
                res.set_content(body, "application/x-ndjson");
            });
        });
        http.Get("/run/interventions", [this](const Request&, Response& res) {
            guarded(res, [&] { res.set_content(current()->trace, "application/x-ndjson"); });
        });
        http.Get("/run/events", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                int run = current()->run;
                auto from = std::make_shared<std::size_t>(0);
                if (req.has_param("from")) *from = std::stoul(req.get_param_value("from"));
                res.set_chunked_content_provider("application/x-ndjson", [this, run, from](std::size_t, httplib::DataSink& sink) {
                    std::unique_lock<std::mutex> lk(smu);
                    scv.wait_for(lk, std::chrono::milliseconds(200), [&] {
                        return stopping_flag() || !snap || snap->run != run || lines.size() > *from || snap->finished;
                    });
                    if (stopping_flag() || !snap || snap->run != run) {
                        sink.done();
                        return true;
                    }
                    std::string chunk;
                    for (; *from < lines.size(); ++*from) chunk += lines[*from] + "\n";
                    bool done = snap->finished;
                    lk.unlock();
                    if (!chunk.empty() && !sink.write(chunk.data(), chunk.size())) return false;
                    if (done) sink.done();
                    return true;
                });
            });
        });
    }

    bool stopping_flag() {
        std::lock_guard<std::mutex> lk(qmu);
        return stopping;
    }
};

Service::Service(ServiceOptions opts) : impl_(std::make_unique<Impl>()) {
    impl_->opts = std::move(opts);
    impl_->speed = impl_->opts.speed;
    impl_->routes();
}

Service::~Service() { stop(); }

int Service::start(const std::string& host, int port) {
    auto& I = *impl_;
    I.port = port == 0 ? I.http.bind_to_any_port(host) : (I.http.bind_to_port(host, port) ? port : -1);
    if (I.port <= 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    I.loop_thread = std::thread([&I] { I.loop(); });
    I.http_thread = std::thread([&I] { I.http.listen_after_bind(); });
    if (I.opts.autostart) {
        try {
            I.start_run(json::object());
        } catch (const BadRequest& b) {
            stop();
            throw std::runtime_error(b.body.dump());
        }
    }
    return I.port;
}

void Service::stop() {
    auto& I = *impl_;
    {
        std::lock_guard<std::mutex> lk(I.qmu);
        if (I.stopping && !I.loop_thread.joinable() && !I.http_thread.joinable()) return;
        I.stopping = true;
    }
    I.qcv.notify_all();
    I.scv.notify_all();
    I.http.stop();
    if (I.http_thread.joinable()) I.http_thread.join();
    if (I.loop_thread.joinable()) I.loop_thread.join();
}

void Service::wait() {
    auto& I = *impl_;
    if (I.http_thread.joinable()) I.http_thread.join();
}

int Service::port() const { return impl_->port; }

}  // namespace swarm::service
