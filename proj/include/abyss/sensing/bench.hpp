// Classification bench. Windows of generated traces, scored by stratified CV
// per condition subset; KW separability on 1 s window means alongside.
#pragma once

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "abyss/sensing/classifier.hpp"
#include "abyss/sensing/features.hpp"
#include "abyss/sensing/kruskal.hpp"
#include "abyss/sensing/trace.hpp"
#include "abyss/sensing/validation.hpp"
#include "abyss/sim/canonical.hpp"

namespace abyss::sensing {

struct BenchConfig {
    std::size_t repetitions = 6;
    double window_seconds = 10.0;
    double stats_window_seconds = 1.0;
    std::size_t folds = 6;
    KnnParams knn;
    ForestParams forest;
    std::uint64_t seed = 1;
};

struct BenchRow {
    std::string name;
    std::size_t examples = 0;
    double knn = 0.0;
    double forest = 0.0;
    double average = 0.0;
};

struct SeparabilityRow {
    Condition condition;
    std::size_t observations = 0;
    KruskalWallisResult kw;
};

struct BenchTable {
    std::vector<BenchRow> rows;
    std::vector<SeparabilityRow> separability;

    const BenchRow& row(const std::string& name) const {
        for (const auto& r : rows) {
            if (r.name == name) return r;
        }
        throw ArgumentError("no bench row named " + name);
    }
};

struct LabeledWindow {
    Example example;
    Condition condition;
};

struct BenchData {
    std::vector<LabeledWindow> windows;
    /// Per condition, per material: 1 s window means.
    std::array<std::array<std::vector<double>, kMaterialCount>, 4> window_means;
};

inline BenchData generate_bench_data(const GeneratorSpec& gen, const BenchConfig& cfg) {
    BenchData out;
    RngStream rng = derive_stream(cfg.seed, "sensing-generator");
    for (auto c : kAllConditions) {
        for (auto m : kAllMaterials) {
            for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
                const LightTrace trace = generate_trace(gen, m, c, rng);
                for (const auto& w : split_windows(trace, cfg.window_seconds)) {
                    out.windows.push_back({Example{extract_features(w), m}, c});
                }
                for (const auto& w : split_windows(trace, cfg.stats_window_seconds)) {
                    double s = 0.0;
                    for (double v : w.samples) s += v;
                    out.window_means[c.index()][index_of(m)].push_back(s / static_cast<double>(w.samples.size()));
                }
            }
        }
    }
    return out;
}

struct ConditionSubset {
    std::string name;
    std::function<bool(Condition)> keep;
};

inline std::vector<ConditionSubset> table_subsets() {
    return {
        {"all", [](Condition) { return true; }},
        {"ambient", [](Condition c) { return c.luminosity == Luminosity::AMBIENT; }},
        {"darkness", [](Condition c) { return c.luminosity == Luminosity::DARKNESS; }},
        {"air", [](Condition c) { return c.medium == Medium::AIR; }},
        {"water", [](Condition c) { return c.medium == Medium::WATER; }},
    };
}

inline BenchTable bench_sensing(const GeneratorSpec& gen, const BenchConfig& cfg) {
    const BenchData data = generate_bench_data(gen, cfg);
    BenchTable table;
    for (const auto& subset : table_subsets()) {
        Dataset ds;
        for (const auto& w : data.windows) {
            if (subset.keep(w.condition)) ds.push_back(w.example);
        }
        BenchRow row;
        row.name = subset.name;
        row.examples = ds.size();
        RngStream knn_rng = derive_stream(cfg.seed, "bench/" + subset.name + "/knn");
        RngStream rf_rng = derive_stream(cfg.seed, "bench/" + subset.name + "/forest");
        row.knn = kfold_cv(ds, cfg.knn, knn_rng, {cfg.folds, true});
        row.forest = kfold_cv(ds, cfg.forest, rf_rng, {cfg.folds, true});
        row.average = 0.5 * (row.knn + row.forest);
        table.rows.push_back(row);
    }
    for (auto c : kAllConditions) {
        std::vector<std::vector<double>> groups;
        std::size_t n = 0;
        for (const auto& g : data.window_means[c.index()]) {
            groups.push_back(g);
            n += g.size();
        }
        table.separability.push_back({c, n, kruskal_wallis(groups)});
    }
    return table;
}

inline Json to_json(const BenchTable& t) {
    Json rows = Json::array();
    for (const auto& r : t.rows) {
        rows.push_back({{"subset", r.name},
                        {"examples", r.examples},
                        {"knn", r.knn},
                        {"random_forest", r.forest},
                        {"average", r.average}});
    }
    Json sep = Json::array();
    for (const auto& s : t.separability) {
        sep.push_back({{"condition", to_string(s.condition)},
                       {"observations", s.observations},
                       {"h", s.kw.h},
                       {"eta_squared", s.kw.eta_squared},
                       {"p_value", s.kw.p_value}});
    }
    return {{"rows", rows}, {"separability", sep}};
}

/// Human-readable table, accuracies in percent.
inline std::string format_table(const BenchTable& t) {
    std::string out = "Cross validation test      k-NN   Random forest   Average\n";
    char buf[160];
    for (const auto& r : t.rows) {
        std::snprintf(buf, sizeof buf, "%-22s %8.1f %15.1f %9.1f\n", (r.name + " 6-folds").c_str(), 100.0 * r.knn,
                      100.0 * r.forest, 100.0 * r.average);
        out += buf;
    }
    out += "\nKruskal-Wallis on 1 s window means\n";
    for (const auto& s : t.separability) {
        std::snprintf(buf, sizeof buf, "%-16s n=%-6zu H=%10.1f eta^2=%.3f p=%.3g\n", to_string(s.condition).c_str(),
                      s.observations, s.kw.h, s.kw.eta_squared, s.kw.p_value);
        out += buf;
    }
    return out;
}

}  // namespace abyss::sensing
