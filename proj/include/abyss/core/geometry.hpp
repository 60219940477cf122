// Spatial primitives shared by the simulator.
// Right-handed frame, meters. z is zero at the surface and negative below it.
// Polygons are planar (x, y) rings without a repeated closing vertex.
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "abyss/core/error.hpp"

namespace abyss {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const noexcept { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const noexcept { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const noexcept { return {x * s, y * s, z * s}; }
    constexpr bool operator==(const Vec3&) const noexcept = default;

    double norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }
    bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(const Vec3& a, const Vec3& b) noexcept { return (a - b).norm(); }

inline Vec3 lerp(const Vec3& a, const Vec3& b, double t) noexcept { return a + (b - a) * t; }

/// Moves from `from` toward `to` by at most `step` meters.
inline Vec3 advance_toward(const Vec3& from, const Vec3& to, double step) noexcept {
    const double d = distance(from, to);
    if (d <= step || d == 0.0) return to;
    return lerp(from, to, step / d);
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(const Vec2& o) const noexcept { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(const Vec2& o) const noexcept { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const noexcept { return {x * s, y * s}; }
    constexpr bool operator==(const Vec2&) const noexcept = default;
};

inline Vec2 planar(const Vec3& p) noexcept { return {p.x, p.y}; }

inline double cross(const Vec2& a, const Vec2& b) noexcept { return a.x * b.y - a.y * b.x; }
inline double dot(const Vec2& a, const Vec2& b) noexcept { return a.x * b.x + a.y * b.y; }
inline double length(const Vec2& a) noexcept { return std::hypot(a.x, a.y); }

struct Box2 {
    Vec2 min;
    Vec2 max;

    double width() const noexcept { return max.x - min.x; }
    double height() const noexcept { return max.y - min.y; }
};

inline Box2 bounding_box(std::span<const Vec2> pts) {
    if (pts.empty()) throw ArgumentError("bounding box of empty point set");
    Box2 b{pts.front(), pts.front()};
    for (const auto& p : pts) {
        b.min.x = std::min(b.min.x, p.x);
        b.min.y = std::min(b.min.y, p.y);
        b.max.x = std::max(b.max.x, p.x);
        b.max.y = std::max(b.max.y, p.y);
    }
    return b;
}

inline double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) noexcept {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return length(p - (a + ab * t));
}

namespace detail {

inline int orientation(const Vec2& a, const Vec2& b, const Vec2& c, double eps) noexcept {
    const double v = cross(b - a, c - a);
    if (std::abs(v) <= eps) return 0;
    return v > 0 ? 1 : -1;
}

inline bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p, double eps) noexcept {
    return std::min(a.x, b.x) - eps <= p.x && p.x <= std::max(a.x, b.x) + eps &&
           std::min(a.y, b.y) - eps <= p.y && p.y <= std::max(a.y, b.y) + eps;
}

}  // namespace detail

/// Closed-segment intersection test (touching counts).
inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2,
                               double eps = 1e-12) noexcept {
    using detail::on_segment;
    using detail::orientation;
    const int o1 = orientation(p1, p2, q1, eps);
    const int o2 = orientation(p1, p2, q2, eps);
    const int o3 = orientation(q1, q2, p1, eps);
    const int o4 = orientation(q1, q2, p2, eps);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(p1, p2, q1, eps)) return true;
    if (o2 == 0 && on_segment(p1, p2, q2, eps)) return true;
    if (o3 == 0 && on_segment(q1, q2, p1, eps)) return true;
    if (o4 == 0 && on_segment(q1, q2, p2, eps)) return true;
    return false;
}

inline double signed_area(std::span<const Vec2> ring) noexcept {
    double a = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        a += cross(ring[i], ring[(i + 1) % ring.size()]);
    }
    return 0.5 * a;
}

/// True for a ring of at least three vertices with non-zero area whose
/// non-adjacent edges never touch.
inline bool is_simple_polygon(std::span<const Vec2> ring) {
    const std::size_t n = ring.size();
    if (n < 3) return false;
    if (std::abs(signed_area(ring)) <= 1e-12) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a1 = ring[i];
        const Vec2& a2 = ring[(i + 1) % n];
        if (a1 == a2) return false;
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if (adjacent) continue;
            if (segments_intersect(a1, a2, ring[j], ring[(j + 1) % n])) return false;
        }
    }
    return true;
}

/// Even-odd containment; points within `eps` of an edge count as inside.
inline bool contains(std::span<const Vec2> ring, const Vec2& p, double eps = 1e-9) noexcept {
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (segment_distance(p, ring[i], ring[(i + 1) % n]) <= eps) return true;
    }
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = ring[i];
        const Vec2& b = ring[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

/// Zero inside the polygon, otherwise distance to its boundary.
inline double distance_to_polygon(std::span<const Vec2> ring, const Vec2& p) noexcept {
    if (contains(ring, p, 0.0)) return 0.0;
    double best = INFINITY;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        best = std::min(best, segment_distance(p, ring[i], ring[(i + 1) % ring.size()]));
    }
    return best;
}

}  // namespace abyss
