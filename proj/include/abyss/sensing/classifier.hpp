// Small from-scratch classifiers over FeatureVector: k-nearest neighbours and
// a random forest of Gini-split trees. Vote ties always go to the material
// with the smaller enum index.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <variant>
#include <vector>

#include "abyss/core/error.hpp"
#include "abyss/core/world.hpp"
#include "abyss/sensing/features.hpp"
#include "abyss/sim/rng.hpp"

namespace abyss::sensing {

struct Example {
    FeatureVector features;
    MaterialClass label = MaterialClass::PAPERBOARD;
};

using Dataset = std::vector<Example>;

using VoteCounts = std::array<std::size_t, kMaterialCount>;

/// Plurality winner; ties resolve to the smallest class index.
inline MaterialClass plurality(const VoteCounts& votes) noexcept {
    std::size_t best = 0;
    for (std::size_t c = 1; c < kMaterialCount; ++c) {
        if (votes[c] > votes[best]) best = c;
    }
    return static_cast<MaterialClass>(best);
}

struct KnnParams {
    int k = 5;
};

struct ForestParams {
    int trees = 50;
    int max_depth = 8;
    int feature_subsample = 3;
};

using ClassifierKind = std::variant<KnnParams, ForestParams>;

inline double squared_distance(const FeatureVector& a, const FeatureVector& b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

class KnnModel {
public:
    KnnModel(KnnParams params, Dataset data) : params_(params), data_(std::move(data)) {
        if (params_.k < 1 || params_.k % 2 == 0) throw ArgumentError("k-NN: k must be odd and >= 1");
        if (data_.size() < static_cast<std::size_t>(params_.k)) throw ArgumentError("k-NN: fewer examples than k");
    }

    /// Majority among the k nearest (distance, then dataset order).
    MaterialClass predict(const FeatureVector& x) const {
        std::vector<std::pair<double, std::size_t>> d(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) d[i] = {squared_distance(x, data_[i].features), i};
        const auto k = static_cast<std::size_t>(params_.k);
        std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
        VoteCounts votes{};
        for (std::size_t i = 0; i < k; ++i) ++votes[index_of(data_[d[i].second].label)];
        return plurality(votes);
    }

    const KnnParams& params() const noexcept { return params_; }

private:
    KnnParams params_;
    Dataset data_;
};

class DecisionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        MaterialClass label = MaterialClass::PAPERBOARD;
    };

    DecisionTree(const Dataset& data, std::vector<std::size_t> rows, const ForestParams& params, RngStream& rng) {
        build(data, rows, 0, params, rng);
    }

    MaterialClass predict(const FeatureVector& x) const noexcept {
        int at = 0;
        while (nodes_[static_cast<std::size_t>(at)].feature >= 0) {
            const auto& n = nodes_[static_cast<std::size_t>(at)];
            at = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return nodes_[static_cast<std::size_t>(at)].label;
    }

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    static double gini(const VoteCounts& c, std::size_t n) noexcept {
        if (n == 0) return 0.0;
        double s = 1.0;
        for (auto v : c) {
            const double p = static_cast<double>(v) / static_cast<double>(n);
            s -= p * p;
        }
        return s;
    }

    int build(const Dataset& data, std::vector<std::size_t>& rows, int depth, const ForestParams& params,
              RngStream& rng) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        VoteCounts counts{};
        for (auto r : rows) ++counts[index_of(data[r].label)];
        nodes_[static_cast<std::size_t>(id)].label = plurality(counts);
        const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
        if (pure || depth >= params.max_depth || rows.size() < 2) return id;

        // Feature subsample without replacement (partial Fisher-Yates).
        std::array<std::size_t, kFeatureCount> features{};
        std::iota(features.begin(), features.end(), 0);
        const auto m = static_cast<std::size_t>(std::clamp(params.feature_subsample, 1, static_cast<int>(kFeatureCount)));
        for (std::size_t i = 0; i < m; ++i) std::swap(features[i], features[i + rng.index(kFeatureCount - i)]);

        const std::size_t n = rows.size();
        const double parent = gini(counts, n);
        double best_score = parent;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::size_t> order(rows);
        for (std::size_t fi = 0; fi < m; ++fi) {
            const std::size_t f = features[fi];
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return data[a].features[f] < data[b].features[f];
            });
            VoteCounts left{};
            VoteCounts right = counts;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const auto c = index_of(data[order[i]].label);
                ++left[c];
                --right[c];
                const double v = data[order[i]].features[f];
                const double next = data[order[i + 1]].features[f];
                if (!(next > v)) continue;
                const double nl = static_cast<double>(i + 1);
                const double nr = static_cast<double>(n - i - 1);
                const double score = (nl * gini(left, i + 1) + nr * gini(right, n - i - 1)) / static_cast<double>(n);
                if (score < best_score - 1e-12) {
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (v + next);
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<std::size_t> lrows;
        std::vector<std::size_t> rrows;
        for (auto r : rows) {
            (data[r].features[static_cast<std::size_t>(best_feature)] <= best_threshold ? lrows : rrows).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        const int l = build(data, lrows, depth + 1, params, rng);
        const int r = build(data, rrows, depth + 1, params, rng);
        auto& node = nodes_[static_cast<std::size_t>(id)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    std::vector<Node> nodes_;
};

class ForestModel {
public:
    ForestModel(ForestParams params, const Dataset& data, RngStream& rng) : params_(params) {
        if (params_.trees < 1) throw ArgumentError("random forest: trees must be >= 1");
        if (params_.max_depth < 0) throw ArgumentError("random forest: max_depth must be >= 0");
        const std::size_t n = data.size();
        trees_.reserve(static_cast<std::size_t>(params_.trees));
        for (int t = 0; t < params_.trees; ++t) {
            std::vector<std::size_t> rows(n);
            for (auto& r : rows) r = rng.index(n);
            trees_.emplace_back(data, std::move(rows), params_, rng);
        }
    }

    MaterialClass predict(const FeatureVector& x) const noexcept {
        VoteCounts votes{};
        for (const auto& t : trees_) ++votes[index_of(t.predict(x))];
        return plurality(votes);
    }

    const ForestParams& params() const noexcept { return params_; }
    std::size_t tree_count() const noexcept { return trees_.size(); }

private:
    ForestParams params_;
    std::vector<DecisionTree> trees_;
};

using ClassifierModel = std::variant<KnnModel, ForestModel>;

inline ClassifierModel fit(const ClassifierKind& kind, const Dataset& data, RngStream& rng) {
    if (data.empty()) throw ArgumentError("fit: empty dataset");
    if (const auto* knn = std::get_if<KnnParams>(&kind)) return KnnModel(*knn, data);
    return ForestModel(std::get<ForestParams>(kind), data, rng);
}

inline MaterialClass predict(const ClassifierModel& model, const FeatureVector& x) {
    return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

/// Per-feature z-scoring fitted on training data; constant features pass through centred.
class Standardizer {
public:
    explicit Standardizer(const Dataset& train) {
        const double n = static_cast<double>(train.size());
        for (const auto& e : train) {
            for (std::size_t i = 0; i < kFeatureCount; ++i) mean_[i] += e.features[i] / n;
        }
        for (const auto& e : train) {
            for (std::size_t i = 0; i < kFeatureCount; ++i) {
                const double d = e.features[i] - mean_[i];
                scale_[i] += d * d / n;
            }
        }
        for (auto& s : scale_) s = s > 0.0 ? std::sqrt(s) : 1.0;
    }

    FeatureVector apply(const FeatureVector& f) const noexcept {
        FeatureVector out;
        for (std::size_t i = 0; i < kFeatureCount; ++i) out[i] = (f[i] - mean_[i]) / scale_[i];
        return out;
    }

    Dataset apply(const Dataset& d) const {
        Dataset out = d;
        for (auto& e : out) e.features = apply(e.features);
        return out;
    }

private:
    std::array<double, kFeatureCount> mean_{};
    std::array<double, kFeatureCount> scale_{};
};

}  // namespace abyss::sensing
