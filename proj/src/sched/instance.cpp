#include "swarmplan/sched/instance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swarm::sched {

std::vector<std::size_t> SchedInstance::capable(std::size_t s) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < robots.size(); ++r) {
        if (robots[r].skills.count(subtasks.at(s).skill)) out.push_back(r);
    }
    return out;
}

std::optional<std::size_t> SchedInstance::robot_index(const std::string& id) const {
    for (std::size_t r = 0; r < robots.size(); ++r) {
        if (robots[r].id == id) return r;
    }
    return std::nullopt;
}

std::optional<std::size_t> SchedInstance::subtask_index(const std::string& id) const {
    for (std::size_t s = 0; s < subtasks.size(); ++s) {
        if (subtasks[s].id == id) return s;
    }
    return std::nullopt;
}

double SchedInstance::risk() const {
    double r = 0.0;
    for (const auto& s : subtasks) r += (1.0 - s.p_success) * s.robots;
    return r;
}

void SchedInstance::validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
    std::set<std::string> ids;
    for (const auto& s : subtasks) {
        if (!ids.insert(s.id).second) throw std::invalid_argument("duplicate subtask id " + s.id);
        if (s.duration_ms <= 0) throw std::invalid_argument("subtask " + s.id + " has non-positive duration");
        if (!(s.p_success > 0.0 && s.p_success <= 1.0)) throw std::invalid_argument("subtask " + s.id + " has p outside (0, 1]");
        if (s.robots < 1) throw std::invalid_argument("subtask " + s.id + " needs no robots");
    }
    std::set<std::string> rids;
    for (const auto& r : robots) {
        if (!rids.insert(r.id).second) throw std::invalid_argument("duplicate robot id " + r.id);
        if (r.velocity <= 0) throw std::invalid_argument("robot " + r.id + " has non-positive velocity");
    }
    for (const auto& [a, b] : precedence) {
        if (a >= subtasks.size() || b >= subtasks.size() || a == b) throw std::invalid_argument("bad precedence pair");
    }
}

Millis big_m_bound(Millis now, const std::vector<SchedSubtask>& subtasks, const std::vector<Vec2>& points,
                   double velocity) {
    Millis sum = 0;
    for (const auto& s : subtasks) sum += s.duration_ms;
    double far = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) far = std::max(far, distance(points[i], points[j]));
    }
    return now + sum + travel_ms(far, velocity);
}

Vec2 node_location(const PlacedDag& p, std::size_t node) {
    const auto& n = p.dag.nodes.at(node);
    if (n.exploration && !n.region.empty()) return subtask::centroid(n.region);
    return p.site;
}

Millis staged_duration(const SchedRobot& r, const subtask::SubtaskNode& n, Vec2 location,
                       const std::vector<ResourceSite>& resources) {
    double meters = 0.0;
    const ResourceSite* best = nullptr;
    if (!n.resource.empty() && !n.exploration) {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& rs : resources) {
            if (rs.type != n.resource) continue;
            double via = distance(rs.position, location);
            if (via < d) {
                d = via;
                best = &rs;
            }
        }
    }
    if (best) {
        meters = distance(r.position, best->position) + distance(best->position, location);
    } else {
        meters = distance(r.position, location);
    }
    return travel_ms(meters, r.velocity) + n.duration_ms;
}

SchedInstance build_instance(const std::vector<PlacedDag>& dags, const std::vector<SchedRobot>& group,
                             const std::vector<ResourceSite>& resources, double epsilon, Millis now) {
    SchedInstance inst;
    inst.now = now;
    inst.epsilon = epsilon;
    inst.robots = group;
    std::vector<Vec2> points;
    for (const auto& r : group) points.push_back(r.position);
    for (const auto& p : dags) {
        std::map<std::size_t, std::size_t> local;
        for (std::size_t i = 0; i < p.dag.nodes.size(); ++i) {
            if (p.skip.count(i)) continue;
            const auto& n = p.dag.nodes[i];
            if (group.empty()) throw InfeasibleInstance("capability", "empty group cannot perform " + n.skill);
            SchedSubtask s;
            s.id = p.task + "/" + n.id;
            s.skill = n.skill;
            s.robots = n.robots;
            s.p_success = n.p_success;
            s.release_ms = now;
            auto pin = p.pinned.find(i);
            if (pin != p.pinned.end()) s.pinned = pin->second;
            Vec2 at = node_location(p, i);
            points.push_back(at);
            int capable = 0;
            Millis worst = 0;
            for (const auto& r : group) {
                if (!r.skills.count(n.skill)) continue;
                ++capable;
                worst = std::max(worst, staged_duration(r, n, at, resources));
            }
            if (capable < n.robots) {
                throw InfeasibleInstance("capability", "not enough robots in the group can " + n.skill + " (need " +
                                                           std::to_string(n.robots) + ", have " +
                                                           std::to_string(capable) + ")");
            }
            s.duration_ms = std::max<Millis>(worst, 1);
            local[i] = inst.subtasks.size();
            inst.subtasks.push_back(std::move(s));
        }
        for (const auto& [a, b] : p.dag.edges) {
            auto ia = local.find(a);
            auto ib = local.find(b);
            if (ia != local.end() && ib != local.end()) inst.precedence.emplace_back(ia->second, ib->second);
        }
    }
    for (const auto& rs : resources) points.push_back(rs.position);
    double v = std::numeric_limits<double>::infinity();
    for (const auto& r : group) v = std::min(v, r.velocity);
    inst.big_m = big_m_bound(now, inst.subtasks, points, std::isfinite(v) ? v : 1.0);
    return inst;
}

}  // namespace swarm::sched
