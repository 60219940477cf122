// Kruskal-Wallis H with midranks and tie correction. eta^2 = (H - g + 1) / (n - g).
#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "abyss/core/error.hpp"

namespace abyss::sensing {

struct KruskalWallisResult {
    double h = 0.0;
    double eta_squared = 0.0;
    std::size_t degrees_of_freedom = 0;
    double p_value = 1.0;
};

inline KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw ArgumentError("kruskal_wallis: need at least 2 groups");
    std::vector<std::pair<double, std::size_t>> pooled;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) throw ArgumentError("kruskal_wallis: group " + std::to_string(g) + " is empty");
        for (double v : groups[g]) pooled.emplace_back(v, g);
    }
    std::sort(pooled.begin(), pooled.end());
    const std::size_t n = pooled.size();
    const double nd = static_cast<double>(n);
    std::vector<double> rank_sum(groups.size(), 0.0);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && pooled[j].first == pooled[i].first) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) rank_sum[pooled[k].second] += midrank;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    KruskalWallisResult r;
    r.degrees_of_freedom = groups.size() - 1;
    const double correction = 1.0 - tie_term / (nd * nd * nd - nd);
    if (correction <= 0.0) return r;  // every observation tied

    const double grand = 0.5 * (nd + 1.0);
    double between = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double ng = static_cast<double>(groups[g].size());
        const double d = rank_sum[g] / ng - grand;
        between += ng * d * d;
    }
    r.h = 12.0 / (nd * (nd + 1.0)) * between / correction;
    const double gd = static_cast<double>(groups.size());
    if (nd > gd) r.eta_squared = std::clamp((r.h - gd + 1.0) / (nd - gd), 0.0, 1.0);
    boost::math::chi_squared chi(static_cast<double>(r.degrees_of_freedom));
    r.p_value = boost::math::cdf(boost::math::complement(chi, r.h));
    return r;
}

}  // namespace abyss::sensing
