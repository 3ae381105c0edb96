// Environment state: features, resources and robot kinematics.

#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "swarmplan/sim/scenario.hpp"

namespace swarm::sim {

enum class FeatureStatus { Undiscovered, Discovered, Handled };

const char* feature_status_name(FeatureStatus s);

struct FeatureState {
    std::string id;
    std::string type;
    Vec2 position;
    FeatureStatus status = FeatureStatus::Undiscovered;
};

struct ResourceState {
    std::string id;
    std::string type;
    Vec2 position;
    bool known = false;
};

struct RobotState {
    std::string id;
    subtask::Platform platform = subtask::Platform::UGV;
    std::set<std::string> skills;  // platform row
    double velocity = 2.0;
    int group = 1;
    Vec2 position;
    bool failed = false;
    std::deque<Vec2> path;   // remaining waypoints
    double leg_start = 0.0;  // ms at which the robot left `position`
    double odometer_m = 0.0;
};

struct Segment {
    std::string robot;
    Vec2 from, to;
    double length_m = 0.0;
    Millis end_ms = 0;
};

struct Discovery {
    bool feature = true;  // false: resource
    std::string id;
    std::string by;       // robot id
};

/// Straight-line constant-velocity motion and disc sensing.
class World {
public:
    World() = default;
    World(const Scenario& sc, std::uint64_t seed);

    std::vector<FeatureState> features;
    std::vector<ResourceState> resources;
    std::vector<RobotState> robots;
    Vec2 arena_min, arena_max;
    double sensing_ground_m = 5.0;
    double sensing_aerial_m = 15.0;
    double clock_ms = 0.0;

    RobotState* robot(const std::string& id);
    const RobotState* robot(const std::string& id) const;
    FeatureState* feature(const std::string& id);
    ResourceState* resource(const std::string& id);
    bool in_bounds(Vec2 p) const;

    /// Replaces the robot's route; it leaves its current position at t.
    void set_path(const std::string& robot, double t_ms, std::vector<Vec2> waypoints);
    /// Time the robot reaches the end of its route, or now when idle.
    double arrival_ms(const std::string& robot) const;
    bool moving(const std::string& robot) const;
    bool any_moving() const;

    /// Moves every robot along its route up to `t_ms`; returns the pieces
    /// traversed. A robot stopped between waypoints logs a partial piece.
    std::vector<Segment> advance_to(double t_ms);
    /// Ends a robot's motion at its position at `t_ms`.
    std::vector<Segment> stop(const std::string& robot, double t_ms);
    /// Puts a robot at the end of its route (arrival events round time).
    std::vector<Segment> finish_route(const std::string& robot, Millis t_ms);

    double sensing_radius(const RobotState& r) const;
    /// Marks undiscovered features and unknown resources within sensing
    /// range of a working robot as found, in world order.
    std::vector<Discovery> sense();
    bool anything_hidden() const;

    /// advance_to(clock + dt) followed by sense(); dt in seconds, > 0.
    std::vector<Discovery> step_motion(double dt_s, std::vector<Segment>* moved = nullptr);

    std::optional<std::size_t> nearest_resource(const std::string& type, Vec2 to) const;

private:
    std::vector<Segment> move(RobotState& r, double t_ms);
};

/// Seeded Bernoulli draw keyed by a stable string; identical on every
/// platform.
bool bernoulli(std::uint64_t seed, const std::string& key, double p);
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(const std::string& s);

}  // namespace swarm::sim
