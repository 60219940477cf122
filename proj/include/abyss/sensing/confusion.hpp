#pragma once

#include <array>
#include <cmath>
#include <map>

#include "abyss/core/error.hpp"
#include "abyss/core/world.hpp"
#include "abyss/sim/rng.hpp"

namespace abyss::sensing {

using ConfusionRow = std::array<double, kMaterialCount>;
using ConfusionMatrix = std::array<ConfusionRow, kMaterialCount>;

/// Per-condition row-stochastic matrices; rows are true material, columns predicted.
class ConfusionModel {
public:
    ConfusionModel() {
        for (auto c : kAllConditions) set(c, diagonal_matrix(1.0));
    }

    void set(Condition c, const ConfusionMatrix& m) {
        for (std::size_t r = 0; r < kMaterialCount; ++r) {
            double sum = 0.0;
            for (double p : m[r]) {
                if (!(p >= 0.0 && p <= 1.0)) throw ConfigurationError("confusion entries must be in [0, 1]");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                throw ConfigurationError("confusion row " + std::to_string(r) + " for " + to_string(c) +
                                         " sums to " + std::to_string(sum));
            }
        }
        matrices_[c.index()] = m;
    }

    const ConfusionMatrix& at(Condition c) const noexcept { return matrices_[c.index()]; }

    double diagonal(Condition c, MaterialClass m) const noexcept { return at(c)[index_of(m)][index_of(m)]; }

    /// `correct` on the diagonal, the rest spread evenly over the other five classes.
    static ConfusionMatrix diagonal_matrix(double correct) {
        if (!(correct >= 0.0 && correct <= 1.0)) throw ConfigurationError("diagonal must be in [0, 1]");
        ConfusionMatrix m{};
        const double off = (1.0 - correct) / static_cast<double>(kMaterialCount - 1);
        for (std::size_t r = 0; r < kMaterialCount; ++r) {
            for (std::size_t c = 0; c < kMaterialCount; ++c) m[r][c] = r == c ? correct : off;
        }
        return m;
    }

    static ConfusionMatrix uniform_matrix() { return diagonal_matrix(1.0 / static_cast<double>(kMaterialCount)); }

private:
    std::array<ConfusionMatrix, 4> matrices_{};
};

namespace presets {

/// Diagonal mass from the classification-accuracy table: luminosity-matched
/// averages in air, the underwater k-NN figure for both water conditions.
inline ConfusionModel table2_confusion() {
    ConfusionModel m;
    m.set({Medium::AIR, Luminosity::AMBIENT}, ConfusionModel::diagonal_matrix(0.817));
    m.set({Medium::AIR, Luminosity::DARKNESS}, ConfusionModel::diagonal_matrix(0.792));
    m.set({Medium::WATER, Luminosity::AMBIENT}, ConfusionModel::diagonal_matrix(0.667));
    m.set({Medium::WATER, Luminosity::DARKNESS}, ConfusionModel::diagonal_matrix(0.667));
    return m;
}

}  // namespace presets

/// One categorical draw from the true-class row.
inline MaterialClass sample_confusion(const ConfusionModel& model, MaterialClass truth, Condition condition,
                                      RngStream& rng) {
    const auto& row = model.at(condition)[index_of(truth)];
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t c = 0; c < kMaterialCount; ++c) {
        acc += row[c];
        if (u < acc) return static_cast<MaterialClass>(c);
    }
    // Rounding left u above the cumulative sum: last class with mass.
    for (std::size_t c = kMaterialCount; c-- > 0;) {
        if (row[c] > 0.0) return static_cast<MaterialClass>(c);
    }
    return truth;
}

}  // namespace abyss::sensing
