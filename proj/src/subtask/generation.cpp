#include "swarmplan/subtask/generation.hpp"

#include <algorithm>
#include <cctype>
#include <condition_variable>
#include <map>
#include <mutex>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "swarmplan/subtask/skills.hpp"

namespace swarm::subtask {

using ojson = nlohmann::ordered_json;

const std::vector<std::vector<RuleStep>>& rule_schemes(const std::string& task_type) {
    static const std::map<std::string, std::vector<std::vector<RuleStep>>> table = {
        {"alkane_gas_flame",
         {{{"inspect", ""}, {"operate", "valve"}, {"monitor", ""}},
          {{"inspect", ""}, {"liquid_spray", "water"}, {"monitor", ""}}}},
        {"high_temp_liquid_flame",
         {{{"inspect", ""}, {"lay", "asbestos_felt"}, {"monitor", ""}},
          {{"inspect", ""}, {"liquid_spray", "water"}, {"monitor", ""}}}},
        {"high-voltage_electrical_flame",
         {{{"inspect", ""}, {"operate", "switch"}, {"monitor", ""}},
          {{"inspect", ""}, {"liquid_spray", "foam"}, {"lay", "metal_net"}, {"monitor", ""}}}},
        {"trapped_person", {{{"inspect", ""}, {"clean_up", ""}, {"rescue", ""}, {"monitor", ""}}}},
        {"poisoned_person", {{{"inspect", ""}, {"gas_spray", "oxygen"}, {"rescue", ""}, {"monitor", ""}}}},
        {"hydrogen_sulfide_leakage",
         {{{"inspect", ""}, {"ignite", ""}, {"monitor", ""}},
          {{"inspect", ""}, {"solid_spray", "activated_carbon"}, {"monitor", ""}}}},
        {"damaged_tank", {{{"liquid_spray", "water"}, {"fix", ""}, {"monitor", ""}}}},
    };
    static const std::vector<std::vector<RuleStep>> none;
    auto it = table.find(task_type);
    return it == table.end() ? none : it->second;
}

namespace {

std::vector<std::vector<RuleStep>> ordered_rules(const PromptContext& ctx) {
    auto perceived = ctx.resource_types();
    std::set<std::string> have(perceived.begin(), perceived.end());
    const auto& all = rule_schemes(ctx.task_type);
    std::vector<std::vector<RuleStep>> ready, waiting;
    for (const auto& s : all) {
        bool ok = std::all_of(s.begin(), s.end(),
                              [&](const RuleStep& r) { return r.resource.empty() || have.count(r.resource); });
        (ok ? ready : waiting).push_back(s);
    }
    ready.insert(ready.end(), waiting.begin(), waiting.end());
    return ready;
}

std::string describe(const std::vector<RuleStep>& s) {
    std::ostringstream os;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << " then ";
        os << s[i].skill;
        if (!s[i].resource.empty()) os << " with " << s[i].resource;
    }
    return os.str();
}

}  // namespace

std::string RuleBackend::respond(Stage stage, const std::string&, const PromptContext& ctx) {
    auto schemes = ordered_rules(ctx);
    std::ostringstream os;
    if (stage == Stage::Analysis) {
        os << "Task type " << ctx.task_type << " has " << schemes.size() << " known scheme(s).";
        for (std::size_t i = 0; i < schemes.size(); ++i) os << " Scheme " << i + 1 << ": " << describe(schemes[i]) << ".";
        return os.str();
    }
    if (stage == Stage::Guide) {
        for (std::size_t i = 0; i < schemes.size(); ++i) {
            os << "Scheme " << i + 1 << ":";
            for (std::size_t k = 0; k < schemes[i].size(); ++k) {
                os << " step_" << k + 1 << " " << schemes[i][k].skill;
                if (k) os << " after step_" << k;
                os << ";";
            }
            if (i + 1 < schemes.size()) os << "\n";
        }
        return os.str();
    }
    ojson out;
    out["schemes"] = ojson::object();
    for (std::size_t i = 0; i < schemes.size(); ++i) {
        ojson sch = ojson::object();
        for (std::size_t k = 0; k < schemes[i].size(); ++k) {
            const auto& st = schemes[i][k];
            ojson step;
            step["required_skill"] = st.skill;
            step["resource"] = st.resource;
            step["dependency"] = ojson::array();
            if (k) step["dependency"].push_back("step_" + std::to_string(k));
            if (auto n = robots_for(ctx.task_type, st.skill)) step["robots"] = *n;
            sch["step_" + std::to_string(k + 1)] = step;
        }
        out["schemes"]["scheme_" + std::to_string(i + 1)] = sch;
    }
    return out.dump();
}

struct HttpBackend::Impl {
    HttpBackendOptions opts;
    std::string host;
    int port = 80;
    std::string path = "/";
    std::mutex mu;
    std::condition_variable cv;
    std::size_t in_flight = 0;
};

HttpBackend::HttpBackend(HttpBackendOptions opts) : impl_(std::make_unique<Impl>()) {
    impl_->opts = std::move(opts);
    std::string u = impl_->opts.url;
    const std::string scheme = "http://";
    if (u.rfind(scheme, 0) != 0) throw std::invalid_argument("backend url must start with http://");
    u = u.substr(scheme.size());
    auto slash = u.find('/');
    std::string hostport = slash == std::string::npos ? u : u.substr(0, slash);
    impl_->path = slash == std::string::npos ? "/" : u.substr(slash);
    auto colon = hostport.rfind(':');
    if (colon != std::string::npos) {
        impl_->host = hostport.substr(0, colon);
        impl_->port = std::stoi(hostport.substr(colon + 1));
    } else {
        impl_->host = hostport;
    }
    if (impl_->host.empty()) throw std::invalid_argument("backend url has no host");
    if (impl_->opts.max_in_flight == 0) impl_->opts.max_in_flight = 1;
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::respond(Stage stage, const std::string& prompt, const PromptContext&) {
    {
        std::unique_lock lk(impl_->mu);
        impl_->cv.wait(lk, [&] { return impl_->in_flight < impl_->opts.max_in_flight; });
        ++impl_->in_flight;
    }
    struct Release {
        Impl* p;
        ~Release() {
            std::lock_guard lk(p->mu);
            --p->in_flight;
            p->cv.notify_one();
        }
    } release{impl_.get()};

    httplib::Client cli(impl_->host, impl_->port);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(impl_->opts.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(impl_->opts.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    nlohmann::json body = {{"stage", static_cast<int>(stage)}, {"prompt", prompt}};
    auto res = cli.Post(impl_->path, body.dump(), "application/json");
    if (!res) {
        auto err = res.error();
        if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
            throw GenerationError(GenerationError::Kind::Timeout, "backend timed out: " + httplib::to_string(err));
        }
        throw GenerationError(GenerationError::Kind::Backend, "backend request failed: " + httplib::to_string(err));
    }
    if (res->status != 200) {
        throw GenerationError(GenerationError::Kind::Backend, "backend returned status " + std::to_string(res->status),
                              res->body);
    }
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (!j.is_discarded() && j.is_object() && j.contains("content") && j["content"].is_string()) {
        return j["content"].get<std::string>();
    }
    return res->body;
}

namespace {

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

const ojson* find_key(const ojson& obj, std::initializer_list<const char*> names) {
    if (!obj.is_object()) return nullptr;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        std::string k = lower(it.key());
        for (const char* n : names) {
            if (k == n) return &it.value();
        }
    }
    return nullptr;
}

[[noreturn]] void parse_fail(const std::string& why, const std::string& raw) {
    throw GenerationError(GenerationError::Kind::Parse, "cannot parse scheme response: " + why + "; raw: " + raw, raw);
}

std::vector<std::string> string_list(const ojson& v, const std::string& raw) {
    std::vector<std::string> out;
    auto add = [&](std::string s) {
        std::string cur;
        for (char c : s + ",") {
            if (c == ',') {
                auto b = cur.find_first_not_of(" \t");
                auto e = cur.find_last_not_of(" \t");
                if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
    };
    if (v.is_null()) return out;
    if (v.is_string()) {
        add(v.get<std::string>());
        return out;
    }
    if (!v.is_array()) parse_fail("dependency must be a list or string", raw);
    for (const auto& e : v) {
        if (!e.is_string()) parse_fail("dependency entries must be strings", raw);
        add(e.get<std::string>());
    }
    return out;
}

ParsedStep parse_step(const std::string& name, const ojson& v, const std::string& raw) {
    if (!v.is_object()) parse_fail("step " + name + " is not an object", raw);
    ParsedStep st;
    st.name = name;
    const ojson* skill = find_key(v, {"required_skill"});
    if (!skill || !skill->is_string()) parse_fail("step " + name + " lacks required_skill", raw);
    st.skill = lower(skill->get<std::string>());
    const ojson* res = find_key(v, {"resource", "required_resources", "required_resource"});
    if (!res) parse_fail("step " + name + " lacks resource", raw);
    if (res->is_string()) {
        st.resource = lower(res->get<std::string>());
    } else if (res->is_array()) {
        if (res->size() > 1) parse_fail("step " + name + " names more than one resource", raw);
        if (res->size() == 1) {
            if (!(*res)[0].is_string()) parse_fail("step " + name + " resource is not a string", raw);
            st.resource = lower((*res)[0].get<std::string>());
        }
    } else if (!res->is_null()) {
        parse_fail("step " + name + " resource is not a string", raw);
    }
    if (st.resource == "none") st.resource.clear();
    const ojson* dep = find_key(v, {"dependency", "dependencies"});
    if (!dep) parse_fail("step " + name + " lacks dependency", raw);
    st.dependency = string_list(*dep, raw);
    for (auto& d : st.dependency) d = lower(d);
    if (const ojson* r = find_key(v, {"robots", "robot_count"})) {
        if (!r->is_number_integer()) parse_fail("step " + name + " robots is not an integer", raw);
        st.robots = r->get<int>();
    }
    return st;
}

ParsedScheme parse_scheme(const std::string& name, const ojson& v, const std::string& raw) {
    ParsedScheme s;
    s.name = name;
    const ojson* steps = find_key(v, {"steps"});
    const ojson& src = steps ? *steps : v;
    if (src.is_array()) {
        for (std::size_t i = 0; i < src.size(); ++i) {
            const ojson& e = src[i];
            std::string n = "step_" + std::to_string(i + 1);
            if (const ojson* id = find_key(e, {"name", "id", "step"}); id && id->is_string()) n = lower(id->get<std::string>());
            s.steps.push_back(parse_step(n, e, raw));
        }
    } else if (src.is_object()) {
        for (auto it = src.begin(); it != src.end(); ++it) {
            std::string k = lower(it.key());
            for (auto& c : k) {
                if (c == ' ') c = '_';
            }
            if (k.rfind("step", 0) != 0) continue;
            s.steps.push_back(parse_step(k, it.value(), raw));
        }
    } else {
        parse_fail("scheme " + name + " is not an object or list", raw);
    }
    if (s.steps.empty()) parse_fail("scheme " + name + " has no steps", raw);
    return s;
}

}  // namespace

std::vector<ParsedScheme> parse_schemes(const std::string& text) {
    ojson j = ojson::parse(text, nullptr, false);
    if (j.is_discarded()) {
        auto b = text.find('{');
        auto e = text.rfind('}');
        if (b != std::string::npos && e != std::string::npos && e > b) j = ojson::parse(text.substr(b, e - b + 1), nullptr, false);
    }
    if (j.is_discarded() || !j.is_object()) parse_fail("no JSON object found", text);
    const ojson* schemes = find_key(j, {"schemes"});
    if (!schemes) parse_fail("missing schemes", text);
    std::vector<ParsedScheme> out;
    if (schemes->is_array()) {
        for (std::size_t i = 0; i < schemes->size(); ++i) out.push_back(parse_scheme("scheme_" + std::to_string(i + 1), (*schemes)[i], text));
    } else if (schemes->is_object()) {
        for (auto it = schemes->begin(); it != schemes->end(); ++it) out.push_back(parse_scheme(lower(it.key()), it.value(), text));
    } else {
        parse_fail("schemes must be an object or list", text);
    }
    if (out.empty()) parse_fail("no schemes", text);
    return out;
}

LayeredDag scheme_to_dag(const ParsedScheme& s, const std::string& task_type, int index, const GenerationOptions& opts) {
    LayeredDag g;
    g.task = task_type;
    g.scheme = index;
    for (const auto& st : s.steps) {
        SubtaskNode n;
        n.id = st.name;
        n.skill = st.skill;
        n.resource = st.resource;
        n.robots = st.robots ? *st.robots : robots_for(task_type, st.skill).value_or(1);
        auto d = opts.service_ms.find(st.skill);
        n.duration_ms = d == opts.service_ms.end() ? opts.default_service_ms : d->second;
        auto p = opts.skill_success.find(st.skill);
        n.p_success = p == opts.skill_success.end() ? 1.0 : p->second;
        g.nodes.push_back(std::move(n));
    }
    for (std::size_t i = 0; i < s.steps.size(); ++i) {
        for (const auto& d : s.steps[i].dependency) {
            auto j = g.index_of(d);
            if (!j) {
                throw GenerationError(GenerationError::Kind::Invalid,
                                      "scheme " + s.name + " step " + s.steps[i].name + " depends on unknown " + d);
            }
            g.edges.emplace_back(*j, i);
        }
    }
    return g;
}

GenerationResult generate(const PromptContext& ctx, Backend& backend, const GenerationOptions& opts) {
    GenerationResult r;
    r.analysis = backend.respond(Stage::Analysis, render_analysis(ctx), ctx);
    r.guide = backend.respond(Stage::Guide, render_guide(ctx, r.analysis), ctx);
    const std::string prompt = render_sequencing(ctx, r.analysis, r.guide);
    std::vector<ParsedScheme> parsed;
    for (std::size_t attempt = 0;; ++attempt) {
        r.attempts = attempt + 1;
        r.sequencing_response = backend.respond(Stage::Sequencing, prompt, ctx);
        try {
            parsed = parse_schemes(r.sequencing_response);
            break;
        } catch (const GenerationError&) {
            if (attempt >= opts.retries) throw;
        }
    }
    std::set<std::string> caps = opts.group_capabilities;
    if (caps.empty()) caps.insert(ctx.capabilities.begin(), ctx.capabilities.end());
    std::set<std::string> known = opts.known_resources;
    for (const auto& t : ctx.resource_types()) known.insert(t);
    for (std::size_t i = 0; i < parsed.size() && r.candidates.size() < opts.max_schemes; ++i) {
        LayeredDag g;
        try {
            g = scheme_to_dag(parsed[i], ctx.task_type, static_cast<int>(r.candidates.size()), opts);
        } catch (const GenerationError& e) {
            r.rejected.push_back({{"bad edge", e.what()}});
            continue;
        }
        g = insert_exploration(g, known, opts.priors);
        auto v = validate_dag(g, caps, known);
        if (!v.empty()) {
            r.rejected.push_back(std::move(v));
            continue;
        }
        r.candidates.push_back(std::move(g));
    }
    if (r.candidates.empty()) {
        std::string why;
        for (const auto& v : r.rejected) {
            for (const auto& x : v) why += " [" + x.kind + ": " + x.detail + "]";
        }
        throw GenerationError(GenerationError::Kind::Invalid, "all candidate schemes are invalid:" + why,
                              r.sequencing_response);
    }
    return r;
}

}  // namespace swarm::subtask
