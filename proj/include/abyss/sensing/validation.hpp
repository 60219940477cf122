#pragma once

#include <string>
#include <vector>

#include "abyss/core/error.hpp"
#include "abyss/sensing/classifier.hpp"
#include "abyss/sim/rng.hpp"

namespace abyss::sensing {

/// Fold index per example: seeded shuffle, then round robin within each class.
inline std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t folds, RngStream& rng) {
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    std::vector<std::size_t> fold_of(data.size());
    std::array<std::size_t, kMaterialCount> next{};
    for (auto i : order) fold_of[i] = next[index_of(data[i].label)]++ % folds;
    return fold_of;
}

struct CvOptions {
    std::size_t folds = 6;
    bool standardize = true;
};

/// Pooled held-out accuracy. Each fold fits on its own derived stream, so the
/// result does not depend on fold evaluation order.
inline double kfold_cv(const Dataset& data, const ClassifierKind& kind, RngStream& rng, CvOptions opts = {}) {
    if (opts.folds < 2) throw ArgumentError("kfold_cv: need at least 2 folds");
    if (data.size() < opts.folds) throw ArgumentError("kfold_cv: fewer examples than folds");
    const auto fold_of = stratified_folds(data, opts.folds, rng);
    const std::uint64_t fold_seed = rng.next_u64();
    std::size_t correct = 0;
    for (std::size_t f = 0; f < opts.folds; ++f) {
        Dataset train;
        Dataset test;
        for (std::size_t i = 0; i < data.size(); ++i) (fold_of[i] == f ? test : train).push_back(data[i]);
        if (test.empty() || train.empty()) continue;
        if (opts.standardize) {
            const Standardizer scaler(train);
            train = scaler.apply(train);
            test = scaler.apply(test);
        }
        RngStream fold_rng = derive_stream(fold_seed, "cv-fold-" + std::to_string(f));
        const auto model = fit(kind, train, fold_rng);
        for (const auto& e : test) correct += predict(model, e.features) == e.label ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace abyss::sensing
