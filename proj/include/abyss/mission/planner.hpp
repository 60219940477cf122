// Boustrophedon transect planning.
// Strips run parallel to the longer side of the area's bounding box. The
// strip set is centred across the short side so the outermost strips sit at
// most spacing/2 from the edge. Each strip is the intersection of its line
// with the polygon, minus any stretch that breaks a standoff constraint, so a
// strip may consist of several survey segments. Strips alternate direction.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "abyss/core/error.hpp"
#include "abyss/core/geometry.hpp"
#include "abyss/mission/area.hpp"

namespace abyss::mission {

struct Segment {
    Vec3 start;
    Vec3 end;

    double length() const noexcept { return distance(start, end); }
};

struct Strip {
    std::size_t layer = 0;
    double offset = 0.0;  // lateral coordinate of the strip line
    double depth = 0.0;
    std::vector<Segment> segments;  // in travel order

    std::vector<Vec3> waypoints() const {
        std::vector<Vec3> w;
        for (const auto& s : segments) {
            w.push_back(s.start);
            w.push_back(s.end);
        }
        return w;
    }

    double survey_length() const noexcept {
        double l = 0.0;
        for (const auto& s : segments) l += s.length();
        return l;
    }

    Strip reversed() const {
        Strip r = *this;
        std::reverse(r.segments.begin(), r.segments.end());
        for (auto& s : r.segments) std::swap(s.start, s.end);
        return r;
    }

    /// Point at arc-length fraction `f` of the waypoint polyline (gaps included).
    Vec3 point_at(double f) const {
        const auto w = waypoints();
        if (w.empty()) throw ArgumentError("point_at on empty strip");
        double total = 0.0;
        for (std::size_t i = 1; i < w.size(); ++i) total += distance(w[i - 1], w[i]);
        double target = std::clamp(f, 0.0, 1.0) * total;
        for (std::size_t i = 1; i < w.size(); ++i) {
            const double d = distance(w[i - 1], w[i]);
            if (target <= d && d > 0.0) return lerp(w[i - 1], w[i], target / d);
            target -= d;
        }
        return w.back();
    }
};

enum class Dimensionality { BELT_2D, GRID_3D };

inline std::string to_string(Dimensionality d) { return d == Dimensionality::BELT_2D ? "belt" : "grid3d"; }

/// Strip frame: `along_x` means strips run along x and offsets are y values.
struct TransectPlan {
    std::vector<Strip> strips;
    double spacing = 0.0;
    double swath_width = 0.0;
    Dimensionality dimensionality = Dimensionality::BELT_2D;
    bool along_x = true;

    std::size_t layer_count() const noexcept {
        std::size_t n = 0;
        for (const auto& s : strips) n = std::max(n, s.layer + 1);
        return n;
    }
};

namespace detail {

/// Sub-intervals [u0, u1] of the line v = const inside the closed polygon,
/// expressed in the (u, v) frame given by `along_x`.
inline std::vector<std::pair<double, double>> line_intervals(const std::vector<Vec2>& polygon, double v,
                                                             bool along_x) {
    auto to_uv = [&](const Vec2& p) { return along_x ? Vec2{p.x, p.y} : Vec2{p.y, p.x}; };
    auto from_uv = [&](double u) { return along_x ? Vec2{u, v} : Vec2{v, u}; };
    constexpr double eps = 1e-9;
    std::vector<double> cuts;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = to_uv(polygon[i]);
        const Vec2 b = to_uv(polygon[(i + 1) % n]);
        if (std::abs(a.y - b.y) <= eps) {
            if (std::abs(a.y - v) <= eps) {
                cuts.push_back(a.x);
                cuts.push_back(b.x);
            }
            continue;
        }
        if (v < std::min(a.y, b.y) - eps || v > std::max(a.y, b.y) + eps) continue;
        const double t = std::clamp((v - a.y) / (b.y - a.y), 0.0, 1.0);
        cuts.push_back(a.x + t * (b.x - a.x));
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double x, double y) { return std::abs(x - y) <= eps; }),
               cuts.end());
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        if (!contains(polygon, from_uv(mid), 1e-9)) continue;
        if (!out.empty() && std::abs(out.back().second - cuts[i]) <= eps) {
            out.back().second = cuts[i + 1];
        } else {
            out.emplace_back(cuts[i], cuts[i + 1]);
        }
    }
    return out;
}

/// Splits a segment into maximal sub-segments that break no constraint.
/// Sampled every <= 0.25 m, boundaries refined by bisection.
inline std::vector<Segment> clip_segment(const Segment& seg, const std::vector<Constraint>& constraints) {
    if (constraints.empty()) return {seg};
    const double len = seg.length();
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(len / 0.25)));
    auto ok = [&](double t) { return !violates_any(constraints, lerp(seg.start, seg.end, t)); };
    auto refine = [&](double good, double bad) {
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (good + bad);
            (ok(mid) ? good : bad) = mid;
        }
        return good;
    };
    std::vector<Segment> out;
    bool in_run = ok(0.0);
    double run_start = 0.0;
    double prev = 0.0;
    for (std::size_t i = 1; i <= steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(steps);
        const bool now_ok = ok(t);
        if (in_run && !now_ok) {
            const double end = refine(prev, t);
            if (end - run_start > 1e-9) out.push_back({lerp(seg.start, seg.end, run_start), lerp(seg.start, seg.end, end)});
            in_run = false;
        } else if (!in_run && now_ok) {
            run_start = refine(t, prev);
            in_run = true;
        }
        prev = t;
    }
    if (in_run && 1.0 - run_start > 1e-9) out.push_back({lerp(seg.start, seg.end, run_start), seg.end});
    return out;
}

}  // namespace detail

/// Re-applies constraints to an existing strip; empty result means the strip is gone.
inline Strip clip_strip(const Strip& strip, const std::vector<Constraint>& constraints) {
    Strip out = strip;
    out.segments.clear();
    for (const auto& s : strip.segments) {
        for (auto& c : detail::clip_segment(s, constraints)) out.segments.push_back(c);
    }
    return out;
}

/// Lateral offsets: n = floor(extent / spacing) + 1 lines, centred on the extent.
inline std::vector<double> strip_offsets(double lo, double hi, double spacing) {
    const double extent = hi - lo;
    const auto n = static_cast<std::size_t>(std::floor(extent / spacing + 1e-9)) + 1;
    const double start = lo + 0.5 * (extent - static_cast<double>(n - 1) * spacing);
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = start + static_cast<double>(k) * spacing;
    return out;
}

namespace detail {

inline std::vector<Strip> layer_strips(const AreaSpec& area, double spacing, double depth, std::size_t layer,
                                       bool along_x, const std::vector<Constraint>& constraints) {
    const Box2 box = bounding_box(area.polygon);
    const double lo = along_x ? box.min.y : box.min.x;
    const double hi = along_x ? box.max.y : box.max.x;
    std::vector<Strip> strips;
    for (double v : strip_offsets(lo, hi, spacing)) {
        Strip strip{layer, v, depth, {}};
        for (const auto& [u0, u1] : line_intervals(area.polygon, v, along_x)) {
            if (u1 - u0 <= 1e-9) continue;
            const Vec3 a = along_x ? Vec3{u0, v, depth} : Vec3{v, u0, depth};
            const Vec3 b = along_x ? Vec3{u1, v, depth} : Vec3{v, u1, depth};
            for (auto& s : clip_segment({a, b}, constraints)) strip.segments.push_back(s);
        }
        if (!strip.segments.empty()) strips.push_back(std::move(strip));
    }
    return strips;
}

inline void serpentine(std::vector<Strip>& strips) {
    for (std::size_t k = 1; k < strips.size(); k += 2) strips[k] = strips[k].reversed();
}

inline void check_plan_inputs(double spacing, double swath) {
    if (!(spacing > 0.0)) throw ArgumentError("strip spacing must be > 0");
    if (!(swath > 0.0)) throw ArgumentError("swath width must be > 0");
}

}  // namespace detail

inline TransectPlan plan_belt_transects(const AreaSpec& area, double strip_spacing, double swath_width,
                                        const std::vector<Constraint>& constraints) {
    detail::check_plan_inputs(strip_spacing, swath_width);
    const Box2 box = bounding_box(area.polygon);
    TransectPlan plan;
    plan.spacing = strip_spacing;
    plan.swath_width = swath_width;
    plan.dimensionality = Dimensionality::BELT_2D;
    plan.along_x = box.width() >= box.height();
    plan.strips = detail::layer_strips(area, strip_spacing, area.depth_top, 0, plan.along_x, constraints);
    if (plan.strips.empty()) throw PlanningError("no surveyable strip remains after applying constraints");
    detail::serpentine(plan.strips);
    return plan;
}

/// Depth layers at depth_top, depth_top - layer_spacing, ... down to depth_bottom.
inline std::vector<double> layer_depths(const AreaSpec& area, double layer_spacing) {
    if (!(layer_spacing > 0.0)) throw ArgumentError("layer spacing must be > 0");
    const double extent = area.depth_top - area.depth_bottom;
    if (extent < 0.0) throw ArgumentError("depth range is empty");
    const auto n = static_cast<std::size_t>(std::floor(extent / layer_spacing + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = area.depth_top - static_cast<double>(k) * layer_spacing;
    return out;
}

inline TransectPlan plan_3d_grid(const AreaSpec& area, double strip_spacing, double layer_spacing,
                                 const std::vector<Constraint>& constraints, double swath_width) {
    detail::check_plan_inputs(strip_spacing, swath_width);
    const Box2 box = bounding_box(area.polygon);
    TransectPlan plan;
    plan.spacing = strip_spacing;
    plan.swath_width = swath_width;
    plan.dimensionality = Dimensionality::GRID_3D;
    plan.along_x = box.width() >= box.height();
    const auto depths = layer_depths(area, layer_spacing);
    for (std::size_t layer = 0; layer < depths.size(); ++layer) {
        for (auto& s : detail::layer_strips(area, strip_spacing, depths[layer], layer, plan.along_x, constraints)) {
            plan.strips.push_back(std::move(s));
        }
    }
    if (plan.strips.empty()) throw PlanningError("no surveyable strip remains after applying constraints");
    detail::serpentine(plan.strips);
    return plan;
}

inline TransectPlan plan_3d_grid(const AreaSpec& area, double strip_spacing, double layer_spacing,
                                 const std::vector<Constraint>& constraints) {
    return plan_3d_grid(area, strip_spacing, layer_spacing, constraints, strip_spacing);
}

}  // namespace abyss::mission
