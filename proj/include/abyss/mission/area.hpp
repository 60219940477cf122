#pragma once

#include <optional>
#include <string>
#include <vector>

#include "abyss/core/error.hpp"
#include "abyss/core/geometry.hpp"

namespace abyss::mission {

/// Survey polygon on the surface plane plus the depth band to cover.
/// `depth_top` is the shallow end (closest to 0), `depth_bottom` the deep end.
struct AreaSpec {
    std::vector<Vec2> polygon;
    double depth_top = 0.0;
    double depth_bottom = 0.0;

    /// Throws ValidationError naming the first broken rule.
    void validate(double max_depth) const {
        if (polygon.size() < 3) throw ValidationError("area polygon needs at least 3 vertices");
        for (const auto& p : polygon) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ValidationError("area vertex is not finite");
        }
        if (!is_simple_polygon(polygon)) throw ValidationError("area polygon is not simple (self-intersecting or degenerate)");
        if (depth_top > 0.0 || depth_bottom > 0.0) throw ValidationError("depth_range must be <= 0");
        if (depth_bottom > depth_top) throw ValidationError("depth_range must go from shallow to deep");
        if (-depth_bottom > max_depth) throw ValidationError("depth_range exceeds the world's max_depth");
    }

    bool contains(const Vec2& p, double eps = 1e-6) const noexcept { return abyss::contains(polygon, p, eps); }
};

enum class ConstraintKind { MIN_STANDOFF };

/// Keep at least `distance` meters (horizontally) from a point or a region.
struct Constraint {
    ConstraintKind kind = ConstraintKind::MIN_STANDOFF;
    std::optional<Vec2> point;
    std::vector<Vec2> region;
    double distance = 0.0;
    std::string label;

    void validate() const {
        if (!(distance >= 0.0)) throw ValidationError("constraint distance must be >= 0");
        if (point.has_value() == !region.empty()) {
            throw ValidationError("constraint needs exactly one of point or region");
        }
        if (!region.empty() && !is_simple_polygon(region)) throw ValidationError("constraint region is not simple");
    }

    double clearance(const Vec2& p) const noexcept {
        if (point) return length(p - *point);
        return distance_to_polygon(region, p);
    }

    bool violated_by(const Vec2& p) const noexcept {
        if (!region.empty() && abyss::contains(region, p, 0.0)) return true;
        return clearance(p) < distance;
    }

    bool violated_by(const Vec3& p) const noexcept { return violated_by(planar(p)); }
};

inline bool violates_any(const std::vector<Constraint>& cs, const Vec3& p) noexcept {
    for (const auto& c : cs) {
        if (c.violated_by(p)) return true;
    }
    return false;
}

}  // namespace abyss::mission
