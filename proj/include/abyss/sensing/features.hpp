#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "abyss/core/error.hpp"
#include "abyss/sensing/trace.hpp"

namespace abyss::sensing {

inline constexpr std::size_t kFeatureCount = 6;

/// mean, population variance, min, max, interquartile range, lag-1 autocorrelation.
struct FeatureVector {
    std::array<double, kFeatureCount> values{};

    double mean() const noexcept { return values[0]; }
    double variance() const noexcept { return values[1]; }
    double min() const noexcept { return values[2]; }
    double max() const noexcept { return values[3]; }
    double iqr() const noexcept { return values[4]; }
    double autocorrelation() const noexcept { return values[5]; }

    double operator[](std::size_t i) const noexcept { return values[i]; }
    double& operator[](std::size_t i) noexcept { return values[i]; }
};

/// Linear-interpolated quantile of sorted data (R type 7).
inline double quantile_sorted(std::span<const double> sorted, double q) noexcept {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline FeatureVector extract_features(std::span<const double> samples) {
    if (samples.size() < 2) throw ArgumentError("extract_features: need at least 2 samples");
    const double n = static_cast<double>(samples.size());
    double sum = 0.0;
    for (double v : samples) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    double lag = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double d = samples[i] - mean;
        ss += d * d;
        if (i + 1 < samples.size()) lag += d * (samples[i + 1] - mean);
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    FeatureVector f;
    f[0] = mean;
    f[1] = ss / n;
    f[2] = sorted.front();
    f[3] = sorted.back();
    f[4] = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    f[5] = ss > 0.0 ? lag / ss : 0.0;
    return f;
}

inline FeatureVector extract_features(const LightTrace& trace) { return extract_features(trace.samples); }

}  // namespace abyss::sensing
