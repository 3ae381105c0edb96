// Planar positions in meters and travel-time helpers. Times are integer
// milliseconds throughout the planner so that comparisons are exact.

#pragma once

#include <cmath>
#include <cstdint>

namespace swarm {

using Millis = std::int64_t;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double distance(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Milliseconds to cover `meters` at `velocity` m/s, rounded to nearest.
inline Millis travel_ms(double meters, double velocity) {
    return static_cast<Millis>(std::llround(meters / velocity * 1000.0));
}

inline Millis seconds_to_ms(double s) { return static_cast<Millis>(std::llround(s * 1000.0)); }

}  // namespace swarm
