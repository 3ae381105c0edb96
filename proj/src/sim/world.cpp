#include "swarmplan/sim/world.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace swarm::sim {

const char* feature_status_name(FeatureStatus s) {
    switch (s) {
        case FeatureStatus::Undiscovered: return "undiscovered";
        case FeatureStatus::Discovered: return "discovered";
        case FeatureStatus::Handled: return "handled";
    }
    return "?";
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

bool bernoulli(std::uint64_t seed, const std::string& key, double p) {
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    std::uint64_t x = splitmix64(seed ^ splitmix64(fnv1a(key)));
    double u = static_cast<double>(x >> 11) * (1.0 / 9007199254740992.0);
    return u < p;
}

World::World(const Scenario& sc, std::uint64_t seed)
    : arena_min(sc.arena_min),
      arena_max(sc.arena_max),
      sensing_ground_m(sc.sensing_ground_m),
      sensing_aerial_m(sc.sensing_aerial_m) {
    for (const auto& f : sc.features) {
        features.push_back({f.id, f.type, f.position, f.known ? FeatureStatus::Discovered : FeatureStatus::Undiscovered});
    }
    for (const auto& r : sc.resources) resources.push_back({r.id, r.type, r.position, r.known});
    for (const auto& r : sc.robots) {
        RobotState s;
        s.id = r.id;
        s.platform = r.platform;
        s.skills = subtask::platform_skills(r.platform);
        s.velocity = subtask::platform_velocity(r.platform);
        s.group = r.group;
        s.position = r.position;
        if (sc.position_jitter_m > 0.0) {
            // Offsets in [-j, j] on a 1 mm grid, from the seed and robot id.
            std::uint64_t h = splitmix64(seed ^ fnv1a(r.id));
            auto off = [&](std::uint64_t bits) {
                long long span = std::llround(sc.position_jitter_m * 1000.0);
                long long v = static_cast<long long>(bits % static_cast<std::uint64_t>(2 * span + 1)) - span;
                return static_cast<double>(v) / 1000.0;
            };
            s.position.x += off(h);
            s.position.y += off(splitmix64(h));
            s.position.x = std::clamp(s.position.x, arena_min.x, arena_max.x);
            s.position.y = std::clamp(s.position.y, arena_min.y, arena_max.y);
        }
        robots.push_back(std::move(s));
    }
}

RobotState* World::robot(const std::string& id) {
    for (auto& r : robots) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

const RobotState* World::robot(const std::string& id) const {
    for (const auto& r : robots) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

FeatureState* World::feature(const std::string& id) {
    for (auto& f : features) {
        if (f.id == id) return &f;
    }
    return nullptr;
}

ResourceState* World::resource(const std::string& id) {
    for (auto& r : resources) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

bool World::in_bounds(Vec2 p) const {
    return p.x >= arena_min.x && p.x <= arena_max.x && p.y >= arena_min.y && p.y <= arena_max.y;
}

void World::set_path(const std::string& id, double t_ms, std::vector<Vec2> waypoints) {
    RobotState* r = robot(id);
    if (!r) throw std::invalid_argument("unknown robot " + id);
    r->path.assign(waypoints.begin(), waypoints.end());
    while (!r->path.empty() && distance(r->path.front(), r->position) == 0.0) r->path.pop_front();
    r->leg_start = t_ms;
}

double World::arrival_ms(const std::string& id) const {
    const RobotState* r = robot(id);
    if (!r) throw std::invalid_argument("unknown robot " + id);
    double t = r->path.empty() ? clock_ms : r->leg_start;
    Vec2 at = r->position;
    for (const auto& w : r->path) {
        t += distance(at, w) / r->velocity * 1000.0;
        at = w;
    }
    return t;
}

bool World::moving(const std::string& id) const {
    const RobotState* r = robot(id);
    return r && !r->path.empty();
}

bool World::any_moving() const {
    for (const auto& r : robots) {
        if (!r.path.empty()) return true;
    }
    return false;
}

std::vector<Segment> World::move(RobotState& r, double t_ms) {
    std::vector<Segment> out;
    while (!r.path.empty()) {
        Vec2 w = r.path.front();
        double len = distance(r.position, w);
        double need = len / r.velocity * 1000.0;
        if (r.leg_start + need <= t_ms) {
            out.push_back({r.id, r.position, w, len, static_cast<Millis>(std::llround(r.leg_start + need))});
            r.odometer_m += len;
            r.position = w;
            r.leg_start += need;
            r.path.pop_front();
            continue;
        }
        double frac = t_ms > r.leg_start ? (t_ms - r.leg_start) / need : 0.0;
        Vec2 p{r.position.x + (w.x - r.position.x) * frac, r.position.y + (w.y - r.position.y) * frac};
        if (frac > 0.0) {
            double part = distance(r.position, p);
            out.push_back({r.id, r.position, p, part, static_cast<Millis>(std::llround(t_ms))});
            r.odometer_m += part;
            r.position = p;
            r.leg_start = t_ms;
        }
        break;
    }
    return out;
}

std::vector<Segment> World::advance_to(double t_ms) {
    std::vector<Segment> out;
    for (auto& r : robots) {
        auto s = move(r, t_ms);
        out.insert(out.end(), s.begin(), s.end());
    }
    clock_ms = std::max(clock_ms, t_ms);
    return out;
}

std::vector<Segment> World::stop(const std::string& id, double t_ms) {
    RobotState* r = robot(id);
    if (!r) throw std::invalid_argument("unknown robot " + id);
    auto out = move(*r, t_ms);
    r->path.clear();
    r->leg_start = t_ms;
    return out;
}

std::vector<Segment> World::finish_route(const std::string& id, Millis t_ms) {
    RobotState* r = robot(id);
    if (!r) throw std::invalid_argument("unknown robot " + id);
    auto out = move(*r, std::numeric_limits<double>::infinity());
    for (auto& s : out) s.end_ms = std::min(s.end_ms, t_ms);
    r->leg_start = static_cast<double>(t_ms);
    return out;
}

double World::sensing_radius(const RobotState& r) const {
    return subtask::is_aerial(r.platform) ? sensing_aerial_m : sensing_ground_m;
}

std::vector<Discovery> World::sense() {
    std::vector<Discovery> out;
    for (auto& f : features) {
        if (f.status != FeatureStatus::Undiscovered) continue;
        for (const auto& r : robots) {
            if (!r.failed && distance(r.position, f.position) <= sensing_radius(r)) {
                f.status = FeatureStatus::Discovered;
                out.push_back({true, f.id, r.id});
                break;
            }
        }
    }
    for (auto& s : resources) {
        if (s.known) continue;
        for (const auto& r : robots) {
            if (!r.failed && distance(r.position, s.position) <= sensing_radius(r)) {
                s.known = true;
                out.push_back({false, s.id, r.id});
                break;
            }
        }
    }
    return out;
}

bool World::anything_hidden() const {
    for (const auto& f : features) {
        if (f.status == FeatureStatus::Undiscovered) return true;
    }
    for (const auto& s : resources) {
        if (!s.known) return true;
    }
    return false;
}

std::vector<Discovery> World::step_motion(double dt_s, std::vector<Segment>* moved) {
    if (!(dt_s > 0.0)) throw std::invalid_argument("dt must be positive");
    auto segs = advance_to(clock_ms + dt_s * 1000.0);
    if (moved) *moved = std::move(segs);
    return sense();
}

std::optional<std::size_t> World::nearest_resource(const std::string& type, Vec2 to) const {
    std::optional<std::size_t> best;
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < resources.size(); ++i) {
        const auto& r = resources[i];
        if (!r.known || r.type != type) continue;
        double x = distance(r.position, to);
        if (x < d) {
            d = x;
            best = i;
        }
    }
    return best;
}

}  // namespace swarm::sim
