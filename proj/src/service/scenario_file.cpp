#include "swarmplan/service/scenario_file.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "swarmplan/ltl/parse.hpp"
#include "swarmplan/sim/engine.hpp"
#include "swarmplan/subtask/skills.hpp"

namespace swarm::service {

using nlohmann::json;

ScenarioError::ScenarioError(std::vector<Diagnostic> d)
    : std::runtime_error([&] {
          std::string m = "scenario invalid";
          for (const auto& x : d) m += "\n  " + x.path + ": " + x.message;
          return m;
      }()),
      diags_(std::move(d)) {}

json ScenarioError::to_json() const {
    json out = json::array();
    for (const auto& d : diags_) out.push_back({{"path", d.path}, {"code", d.code}, {"message", d.message}});
    return {{"error", "scenario_invalid"}, {"diagnostics", out}};
}

namespace {

class Reader {
public:
    std::vector<Diagnostic> diags;

    void err(const std::string& path, const std::string& code, const std::string& msg) {
        diags.push_back({path.empty() ? "/" : path, code, msg});
    }

    bool object(const json& j, const std::string& path, const std::set<std::string>& allowed) {
        if (!j.is_object()) {
            err(path, "type", "expected an object");
            return false;
        }
        for (const auto& [k, _] : j.items()) {
            if (!allowed.count(k)) err(path + "/" + k, "unknown_key", "unknown key '" + k + "'");
        }
        return true;
    }

    bool array(const json& j, const std::string& path) {
        if (!j.is_array()) {
            err(path, "type", "expected an array");
            return false;
        }
        return true;
    }

    template <class F>
    void field(const json& j, const std::string& path, const char* key, bool required, F&& f) {
        if (!j.is_object()) return;
        auto it = j.find(key);
        if (it == j.end()) {
            if (required) err(path + "/" + key, "missing", std::string("missing '") + key + "'");
            return;
        }
        f(*it, path + "/" + key);
    }

    bool str(const json& j, const std::string& path, std::string* out, bool nonempty = true) {
        if (!j.is_string()) {
            err(path, "type", "expected a string");
            return false;
        }
        *out = j.get<std::string>();
        if (nonempty && out->empty()) {
            err(path, "value", "must not be empty");
            return false;
        }
        return true;
    }

    bool num(const json& j, const std::string& path, double* out) {
        if (!j.is_number()) {
            err(path, "type", "expected a number");
            return false;
        }
        *out = j.get<double>();
        if (!std::isfinite(*out)) {
            err(path, "value", "must be finite");
            return false;
        }
        return true;
    }

    bool integer(const json& j, const std::string& path, long long* out, long long lo) {
        if (!j.is_number_integer()) {
            err(path, "type", "expected an integer");
            return false;
        }
        *out = j.get<long long>();
        if (*out < lo) {
            err(path, "value", "must be at least " + std::to_string(lo));
            return false;
        }
        return true;
    }

    bool boolean(const json& j, const std::string& path, bool* out) {
        if (!j.is_boolean()) {
            err(path, "type", "expected true or false");
            return false;
        }
        *out = j.get<bool>();
        return true;
    }

    bool prob(const json& j, const std::string& path, double* out, bool open_low = false) {
        if (!num(j, path, out)) return false;
        if (*out < 0.0 || *out > 1.0 || (open_low && *out <= 0.0)) {
            err(path, "value", "must lie in " + std::string(open_low ? "(0, 1]" : "[0, 1]"));
            return false;
        }
        return true;
    }

    bool point(const json& j, const std::string& path, Vec2* out) {
        if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
            err(path, "type", "expected [x, y]");
            return false;
        }
        out->x = j[0].get<double>();
        out->y = j[1].get<double>();
        if (!std::isfinite(out->x) || !std::isfinite(out->y)) {
            err(path, "value", "coordinates must be finite");
            return false;
        }
        return true;
    }

    bool polygon(const json& j, const std::string& path, std::vector<Vec2>* out) {
        if (!array(j, path)) return false;
        if (j.size() < 3) {
            err(path, "value", "a polygon needs at least 3 points");
            return false;
        }
        bool ok = true;
        for (std::size_t i = 0; i < j.size(); ++i) {
            Vec2 p;
            if (point(j[i], path + "/" + std::to_string(i), &p)) {
                out->push_back(p);
            } else {
                ok = false;
            }
        }
        return ok;
    }
};

Millis as_ms(long long v) { return static_cast<Millis>(v); }

}  // namespace

sim::Scenario parse_scenario(const json& j, const std::string& base_dir) {
    Reader R;
    sim::Scenario sc;
    if (!R.object(j, "", {"name", "arena", "robots", "features", "resources", "missions", "events", "plan_library",
                          "service_ms", "default_service_ms", "skill_success", "exploration", "planner", "human",
                          "backend", "position_jitter_m", "max_time_ms", "tick_ms", "sensing"})) {
        throw ScenarioError(R.diags);
    }
    R.field(j, "", "name", false, [&](const json& v, const std::string& p) { R.str(v, p, &sc.name); });
    R.field(j, "", "arena", false, [&](const json& v, const std::string& p) {
        if (!R.object(v, p, {"min", "max"})) return;
        R.field(v, p, "min", true, [&](const json& x, const std::string& q) { R.point(x, q, &sc.arena_min); });
        R.field(v, p, "max", true, [&](const json& x, const std::string& q) { R.point(x, q, &sc.arena_max); });
        if (!(sc.arena_min.x < sc.arena_max.x && sc.arena_min.y < sc.arena_max.y)) {
            R.err(p, "value", "arena min must lie below and left of max");
        }
    });
    auto inside = [&](Vec2 p) {
        return p.x >= sc.arena_min.x && p.x <= sc.arena_max.x && p.y >= sc.arena_min.y && p.y <= sc.arena_max.y;
    };

    std::set<std::string> ids;
    auto unique_id = [&](const std::string& id, const std::string& path) {
        if (!ids.insert(id).second) R.err(path, "duplicate", "id '" + id + "' is used twice");
    };

    R.field(j, "", "robots", true, [&](const json& v, const std::string& p) {
        if (!R.array(v, p)) return;
        if (v.empty()) R.err(p, "value", "at least one robot is required");
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::string q = p + "/" + std::to_string(i);
            if (!R.object(v[i], q, {"id", "platform", "group", "position"})) continue;
            sim::RobotSpec r;
            R.field(v[i], q, "id", true, [&](const json& x, const std::string& s) {
                if (R.str(x, s, &r.id)) unique_id(r.id, s);
            });
            R.field(v[i], q, "platform", true, [&](const json& x, const std::string& s) {
                std::string name;
                if (!R.str(x, s, &name)) return;
                try {
                    r.platform = subtask::parse_platform(name);
                } catch (const std::invalid_argument& e) {
                    R.err(s, "value", e.what());
                }
            });
            R.field(v[i], q, "group", false, [&](const json& x, const std::string& s) {
                long long g = 1;
                if (R.integer(x, s, &g, 1)) r.group = static_cast<int>(g);
            });
            R.field(v[i], q, "position", true, [&](const json& x, const std::string& s) {
                if (R.point(x, s, &r.position) && !inside(r.position)) R.err(s, "value", "outside the arena");
            });
            sc.robots.push_back(std::move(r));
        }
    });

    R.field(j, "", "features", false, [&](const json& v, const std::string& p) {
        if (!R.array(v, p)) return;
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::string q = p + "/" + std::to_string(i);
            if (!R.object(v[i], q, {"id", "type", "position", "known"})) continue;
            sim::FeatureInstance f;
            R.field(v[i], q, "id", true, [&](const json& x, const std::string& s) {
                if (R.str(x, s, &f.id)) unique_id(f.id, s);
            });
            R.field(v[i], q, "type", true, [&](const json& x, const std::string& s) {
                if (R.str(x, s, &f.type) && !subtask::is_feature_type(f.type)) {
                    R.err(s, "value", "unknown feature type '" + f.type + "'");
                }
            });
            R.field(v[i], q, "position", true, [&](const json& x, const std::string& s) {
                if (R.point(x, s, &f.position) && !inside(f.position)) R.err(s, "value", "outside the arena");
            });
            R.field(v[i], q, "known", false, [&](const json& x, const std::string& s) { R.boolean(x, s, &f.known); });
            sc.features.push_back(std::move(f));
        }
    });

    R.field(j, "", "resources", false, [&](const json& v, const std::string& p) {
        if (!R.array(v, p)) return;
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::string q = p + "/" + std::to_string(i);
            if (!R.object(v[i], q, {"id", "type", "position", "known"})) continue;
            sim::ResourceInstance r;
            R.field(v[i], q, "id", true, [&](const json& x, const std::string& s) {
                if (R.str(x, s, &r.id)) unique_id(r.id, s);
            });
            R.field(v[i], q, "type", true, [&](const json& x, const std::string& s) {
                if (R.str(x, s, &r.type) && !subtask::is_resource_type(r.type)) {
                    R.err(s, "value", "unknown resource type '" + r.type + "'");
                }
            });
            R.field(v[i], q, "position", true, [&](const json& x, const std::string& s) {
                if (R.point(x, s, &r.position) && !inside(r.position)) R.err(s, "value", "outside the arena");
            });
            R.field(v[i], q, "known", false, [&](const json& x, const std::string& s) { R.boolean(x, s, &r.known); });
            sc.resources.push_back(std::move(r));
        }
    });

    std::map<std::string, const sim::FeatureInstance*> feature_ids;
    for (const auto& f : sc.features) feature_ids[f.id] = &f;

    R.field(j, "", "missions", false, [&](const json& v, const std::string& p) {
        if (!R.array(v, p)) return;
        std::set<std::string> names, bound;
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::string q = p + "/" + std::to_string(i);
            if (!R.object(v[i], q, {"name", "ltl", "tasks"})) continue;
            sim::MissionSpec m;
            R.field(v[i], q, "name", true, [&](const json& x, const std::string& s) {
                if (R.str(x, s, &m.name) && !names.insert(m.name).second) {
                    R.err(s, "duplicate", "mission name '" + m.name + "' is used twice");
                }
            });
            R.field(v[i], q, "tasks", true, [&](const json& x, const std::string& s) {
                if (!x.is_object()) {
                    R.err(s, "type", "expected an object of proposition -> feature id");
                    return;
                }
                for (const auto& [sym, fid] : x.items()) {
                    std::string path = s + "/" + sym;
                    std::string id;
                    if (!R.str(fid, path, &id)) continue;
                    auto it = feature_ids.find(id);
                    if (it == feature_ids.end()) {
                        R.err(path, "reference", "unknown feature '" + id + "'");
                        continue;
                    }
                    if (!subtask::is_task_type(it->second->type)) {
                        R.err(path, "value", "feature '" + id + "' is not a task type");
                    }
                    if (!bound.insert(id).second) R.err(path, "duplicate", "feature '" + id + "' is bound twice");
                    m.tasks[sym] = id;
                }
            });
            R.field(v[i], q, "ltl", true, [&](const json& x, const std::string& s) {
                if (!R.str(x, s, &m.ltl)) return;
                std::set<std::string> declared;
                for (const auto& [sym, _] : m.tasks) declared.insert(sym);
                try {
                    ltl::parse_ltl(m.ltl, declared);
                } catch (const ltl::ParseError& e) {
                    R.err(s, "ltl", e.what());
                } catch (const ltl::UndeclaredPropositionError& e) {
                    R.err(s, "ltl", std::string(e.what()) + " (not bound in tasks)");
                }
            });
            sc.missions.push_back(std::move(m));
        }
    });

    R.field(j, "", "events", false, [&](const json& v, const std::string& p) {
        if (!R.array(v, p)) return;
        const auto& kinds = sim::adaptation_kinds();
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::string q = p + "/" + std::to_string(i);
            if (!R.object(v[i], q, {"time_ms", "kind", "payload"})) continue;
            sim::ScriptedEvent e;
            R.field(v[i], q, "time_ms", true, [&](const json& x, const std::string& s) {
                long long t = 0;
                if (R.integer(x, s, &t, 0)) e.time_ms = as_ms(t);
            });
            R.field(v[i], q, "kind", true, [&](const json& x, const std::string& s) {
                if (R.str(x, s, &e.kind) && std::find(kinds.begin(), kinds.end(), e.kind) == kinds.end()) {
                    R.err(s, "value", "unroutable event kind '" + e.kind + "'");
                }
            });
            e.payload = v[i].value("payload", json::object());
            std::string pp = q + "/payload";
            if (!e.payload.is_object()) {
                R.err(pp, "type", "expected an object");
            } else if (e.kind == "robot_failure") {
                std::string rid = e.payload.value("robot", "");
                bool found = std::any_of(sc.robots.begin(), sc.robots.end(), [&](const auto& r) { return r.id == rid; });
                if (!found) R.err(pp + "/robot", "reference", "unknown robot '" + rid + "'");
            } else if (e.kind == "new_task_type" || e.kind == "new_task_instance") {
                if (!e.payload.contains("feature") || !e.payload["feature"].is_object() ||
                    !e.payload["feature"].contains("id")) {
                    R.err(pp + "/feature", "missing", "needs a feature object with an id");
                }
            } else if (e.kind == "new_resource_type" || e.kind == "new_resource_instance") {
                if (!e.payload.contains("resource") || !e.payload["resource"].is_object() ||
                    !e.payload["resource"].contains("id")) {
                    R.err(pp + "/resource", "missing", "needs a resource object with an id");
                }
            }
            sc.events.push_back(std::move(e));
        }
    });

    R.field(j, "", "plan_library", false, [&](const json& v, const std::string& p) {
        std::string path;
        if (!R.str(v, p, &path)) return;
        std::filesystem::path fp(path);
        if (fp.is_relative()) fp = std::filesystem::path(base_dir) / fp;
        if (!std::filesystem::exists(fp)) {
            R.err(p, "file", "plan library '" + fp.string() + "' does not exist");
            return;
        }
        sc.plan_library = fp.string();
    });

    auto skill_map = [&](const char* key, auto&& each) {
        R.field(j, "", key, false, [&](const json& v, const std::string& p) {
            if (!v.is_object()) {
                R.err(p, "type", "expected an object keyed by subtask skill");
                return;
            }
            for (const auto& [k, x] : v.items()) {
                if (!subtask::is_subtask_skill(k)) {
                    R.err(p + "/" + k, "value", "unknown subtask skill '" + k + "'");
                    continue;
                }
                each(k, x, p + "/" + k);
            }
        });
    };
    skill_map("service_ms", [&](const std::string& k, const json& x, const std::string& s) {
        long long v = 0;
        if (R.integer(x, s, &v, 1)) sc.service_ms[k] = as_ms(v);
    });
    skill_map("skill_success", [&](const std::string& k, const json& x, const std::string& s) {
        double v = 1;
        if (R.prob(x, s, &v, true)) sc.skill_success[k] = v;
    });
    R.field(j, "", "default_service_ms", false, [&](const json& v, const std::string& p) {
        long long x = 0;
        if (R.integer(v, p, &x, 1)) sc.default_service_ms = as_ms(x);
    });

    R.field(j, "", "exploration", false, [&](const json& v, const std::string& p) {
        if (!R.object(v, p, {"success", "default_success", "regions", "sweep_ms"})) return;
        R.field(v, p, "success", false, [&](const json& x, const std::string& q) {
            if (!x.is_object()) {
                R.err(q, "type", "expected an object keyed by resource type");
                return;
            }
            for (const auto& [k, y] : x.items()) {
                if (!subtask::is_resource_type(k)) R.err(q + "/" + k, "value", "unknown resource type '" + k + "'");
                double pr = 0;
                if (R.prob(y, q + "/" + k, &pr)) sc.priors.success[k] = pr;
            }
        });
        R.field(v, p, "default_success", false,
                [&](const json& x, const std::string& q) { R.prob(x, q, &sc.priors.default_success); });
        R.field(v, p, "regions", false, [&](const json& x, const std::string& q) {
            if (!x.is_object()) {
                R.err(q, "type", "expected an object keyed by resource type");
                return;
            }
            for (const auto& [k, y] : x.items()) {
                if (!subtask::is_resource_type(k)) R.err(q + "/" + k, "value", "unknown resource type '" + k + "'");
                std::vector<Vec2> poly;
                if (R.polygon(y, q + "/" + k, &poly)) sc.priors.regions[k] = poly;
            }
        });
        R.field(v, p, "sweep_ms", false, [&](const json& x, const std::string& q) {
            long long s = 0;
            if (R.integer(x, q, &s, 1)) sc.priors.sweep_ms = as_ms(s);
        });
    });

    R.field(j, "", "planner", false, [&](const json& v, const std::string& p) {
        if (!R.object(v, p, {"eta1", "eta2", "width", "budget", "epsilon", "batch", "resolve_after", "max_schemes",
                             "solver_node_limit", "threads"})) {
            return;
        }
        auto& pl = sc.planner;
        auto nonneg = [&](const char* k, double* out) {
            R.field(v, p, k, false, [&](const json& x, const std::string& q) {
                if (R.num(x, q, out) && *out < 0) R.err(q, "value", "must not be negative");
            });
        };
        auto count = [&](const char* k, auto* out) {
            R.field(v, p, k, false, [&](const json& x, const std::string& q) {
                long long n = 0;
                if (R.integer(x, q, &n, 1)) *out = static_cast<std::remove_pointer_t<decltype(out)>>(n);
            });
        };
        nonneg("eta1", &pl.eta1);
        nonneg("eta2", &pl.eta2);
        count("width", &pl.width);
        count("budget", &pl.budget);
        count("batch", &pl.batch);
        count("resolve_after", &pl.resolve_after);
        count("max_schemes", &pl.max_schemes);
        count("solver_node_limit", &pl.solver_node_limit);
        count("threads", &pl.threads);
        R.field(v, p, "epsilon", false, [&](const json& x, const std::string& q) {
            if (R.num(x, q, &pl.epsilon) && !(pl.epsilon > 0 && pl.epsilon < 1)) R.err(q, "value", "must lie in (0, 1)");
        });
    });

    R.field(j, "", "human", false, [&](const json& v, const std::string& p) {
        if (!R.object(v, p, {"scheme_approval", "label_approval", "approval_timeout_ms"})) return;
        R.field(v, p, "scheme_approval", false,
                [&](const json& x, const std::string& q) { R.boolean(x, q, &sc.human.scheme_approval); });
        R.field(v, p, "label_approval", false,
                [&](const json& x, const std::string& q) { R.boolean(x, q, &sc.human.label_approval); });
        R.field(v, p, "approval_timeout_ms", false, [&](const json& x, const std::string& q) {
            long long t = 0;
            if (R.integer(x, q, &t, 0)) sc.human.approval_timeout_ms = as_ms(t);
        });
    });

    R.field(j, "", "backend", false, [&](const json& v, const std::string& p) {
        if (!R.object(v, p, {"kind", "url", "timeout_ms"})) return;
        R.field(v, p, "kind", true, [&](const json& x, const std::string& q) {
            if (R.str(x, q, &sc.backend) && sc.backend != "rule" && sc.backend != "http") {
                R.err(q, "value", "backend kind must be 'rule' or 'http'");
            }
        });
        R.field(v, p, "url", sc.backend == "http", [&](const json& x, const std::string& q) {
            if (R.str(x, q, &sc.backend_url) && sc.backend_url.rfind("http://", 0) != 0) {
                R.err(q, "value", "url must start with http://");
            }
        });
        R.field(v, p, "timeout_ms", false, [&](const json& x, const std::string& q) {
            long long t = 0;
            if (R.integer(x, q, &t, 1)) sc.backend_timeout_ms = as_ms(t);
        });
    });

    R.field(j, "", "position_jitter_m", false, [&](const json& v, const std::string& p) {
        if (R.num(v, p, &sc.position_jitter_m) && sc.position_jitter_m < 0) R.err(p, "value", "must not be negative");
    });
    R.field(j, "", "max_time_ms", false, [&](const json& v, const std::string& p) {
        long long t = 0;
        if (R.integer(v, p, &t, 1)) sc.max_time_ms = as_ms(t);
    });
    R.field(j, "", "tick_ms", false, [&](const json& v, const std::string& p) {
        long long t = 0;
        if (R.integer(v, p, &t, 1)) sc.tick_ms = as_ms(t);
    });
    R.field(j, "", "sensing", false, [&](const json& v, const std::string& p) {
        if (!R.object(v, p, {"ground_m", "aerial_m"})) return;
        R.field(v, p, "ground_m", false, [&](const json& x, const std::string& q) {
            if (R.num(x, q, &sc.sensing_ground_m) && sc.sensing_ground_m < 0) R.err(q, "value", "must not be negative");
        });
        R.field(v, p, "aerial_m", false, [&](const json& x, const std::string& q) {
            if (R.num(x, q, &sc.sensing_aerial_m) && sc.sensing_aerial_m < 0) R.err(q, "value", "must not be negative");
        });
    });

    if (!R.diags.empty()) throw ScenarioError(R.diags);
    return sc;
}

sim::Scenario parse_scenario_text(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError({{"/", "syntax", e.what()}});
    }
    return parse_scenario(j, base_dir);
}

sim::Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError({{"/", "file", "cannot read '" + path + "'"}});
    std::stringstream ss;
    ss << in.rdbuf();
    auto dir = std::filesystem::path(path).parent_path();
    return parse_scenario_text(ss.str(), dir.empty() ? "." : dir.string());
}

}  // namespace swarm::service
