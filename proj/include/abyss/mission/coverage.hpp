#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "abyss/core/error.hpp"
#include "abyss/core/geometry.hpp"
#include "abyss/mission/area.hpp"

namespace abyss::mission {

/// Square cells over the area's bounding box; only cells whose centre lies
/// inside the polygon count towards coverage.
class CoverageGrid {
public:
    CoverageGrid(const AreaSpec& area, double cell_size) : polygon_(area.polygon), cell_(cell_size) {
        if (!(cell_size > 0.0)) throw ArgumentError("coverage cell size must be > 0");
        const Box2 box = bounding_box(polygon_);
        origin_ = box.min;
        cols_ = static_cast<std::size_t>(std::max(1.0, std::ceil(box.width() / cell_)));
        rows_ = static_cast<std::size_t>(std::max(1.0, std::ceil(box.height() / cell_)));
        inside_.assign(cols_ * rows_, false);
        covered_.assign(cols_ * rows_, false);
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t c = 0; c < cols_; ++c) {
                if (abyss::contains(polygon_, center(c, r), 0.0)) {
                    inside_[r * cols_ + c] = true;
                    ++total_;
                }
            }
        }
    }

    /// Marks every inside cell whose centre is within `half_width` of segment ab.
    void mark_segment(const Vec2& a, const Vec2& b, double half_width) {
        const double x0 = std::min(a.x, b.x) - half_width;
        const double x1 = std::max(a.x, b.x) + half_width;
        const double y0 = std::min(a.y, b.y) - half_width;
        const double y1 = std::max(a.y, b.y) + half_width;
        const std::size_t c0 = clamp_col(x0), c1 = clamp_col(x1);
        const std::size_t r0 = clamp_row(y0), r1 = clamp_row(y1);
        for (std::size_t r = r0; r <= r1; ++r) {
            for (std::size_t c = c0; c <= c1; ++c) {
                const std::size_t i = r * cols_ + c;
                if (!inside_[i] || covered_[i]) continue;
                if (segment_distance(center(c, r), a, b) <= half_width + 1e-9) {
                    covered_[i] = true;
                    ++covered_count_;
                }
            }
        }
    }

    std::size_t total_cells() const noexcept { return total_; }
    std::size_t covered_cells() const noexcept { return covered_count_; }
    double cell_size() const noexcept { return cell_; }

    double fraction() const noexcept {
        return total_ == 0 ? 0.0 : static_cast<double>(covered_count_) / static_cast<double>(total_);
    }

private:
    Vec2 center(std::size_t c, std::size_t r) const noexcept {
        return {origin_.x + (static_cast<double>(c) + 0.5) * cell_, origin_.y + (static_cast<double>(r) + 0.5) * cell_};
    }

    std::size_t clamp_col(double x) const noexcept {
        const double c = std::floor((x - origin_.x) / cell_);
        return static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(cols_ - 1)));
    }

    std::size_t clamp_row(double y) const noexcept {
        const double r = std::floor((y - origin_.y) / cell_);
        return static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(rows_ - 1)));
    }

    std::vector<Vec2> polygon_;
    double cell_;
    Vec2 origin_;
    std::size_t cols_ = 0;
    std::size_t rows_ = 0;
    std::vector<bool> inside_;
    std::vector<bool> covered_;
    std::size_t total_ = 0;
    std::size_t covered_count_ = 0;
};

/// Covered cells over inside cells, pooled across grids.
inline double coverage_fraction(const std::vector<CoverageGrid>& grids) noexcept {
    std::size_t covered = 0;
    std::size_t total = 0;
    for (const auto& g : grids) {
        covered += g.covered_cells();
        total += g.total_cells();
    }
    return total == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(total);
}

inline double coverage_fraction(const CoverageGrid& grid) noexcept { return grid.fraction(); }

}  // namespace abyss::mission
