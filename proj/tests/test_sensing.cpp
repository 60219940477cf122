#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "abyss/sensing/bench.hpp"
#include "abyss/sensing/confusion.hpp"

using namespace abyss;
using namespace abyss::sensing;

namespace {

constexpr Condition kWaterAmbient{Medium::WATER, Luminosity::AMBIENT};
constexpr Condition kAirDark{Medium::AIR, Luminosity::DARKNESS};

FeatureVector fv(std::initializer_list<double> v) {
    FeatureVector f;
    std::copy(v.begin(), v.end(), f.values.begin());
    return f;
}

// six clusters shifted along the diagonal; `spread` sets how separable they are
Dataset clusters(std::size_t per_class, double spread, std::uint64_t seed) {
    RngStream r(seed, "clusters");
    Dataset d;
    for (auto m : kAllMaterials) {
        for (std::size_t i = 0; i < per_class; ++i) {
            FeatureVector f;
            for (std::size_t k = 0; k < kFeatureCount; ++k) {
                f[k] = r.normal(0, 1) + spread * static_cast<double>(index_of(m));
            }
            d.push_back({f, m});
        }
    }
    return d;
}

// one shared distribution, labels cycle through the classes
Dataset no_signal(std::size_t n, std::uint64_t seed) {
    RngStream r(seed, "noise");
    Dataset d;
    for (std::size_t i = 0; i < n; ++i) {
        FeatureVector f;
        for (std::size_t k = 0; k < kFeatureCount; ++k) f[k] = r.normal(0, 1);
        d.push_back({f, kAllMaterials[i % kMaterialCount]});
    }
    return d;
}

// midranks by counting, then the textbook sum-of-squared-rank-sums form
double brute_force_h(const std::vector<std::vector<double>>& groups) {
    std::vector<double> all;
    for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
    const double n = static_cast<double>(all.size());
    auto rank_of = [&](double x) {
        double less = 0, equal = 0;
        for (double y : all) {
            if (y < x) less += 1;
            if (y == x) equal += 1;
        }
        return less + (equal + 1) / 2;
    };
    double s = 0;
    for (const auto& g : groups) {
        double r = 0;
        for (double x : g) r += rank_of(x);
        s += r * r / static_cast<double>(g.size());
    }
    double ties = 0;
    std::vector<double> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        ties += t * t * t - t;
        i = j;
    }
    const double h = 12.0 / (n * (n + 1)) * s - 3 * (n + 1);
    const double c = 1 - ties / (n * n * n - n);
    return c > 0 ? h / c : 0.0;
}

}  // namespace

TEST(Trace, PaperLength) {
    auto r = derive_stream(1, "trace");
    const auto t = generate_trace(presets::paper_like(), MaterialClass::PET, kWaterAmbient, r);
    EXPECT_EQ(t.samples.size(), 9000u);
    EXPECT_DOUBLE_EQ(t.duration(), 90.0);
}

TEST(Trace, NoiselessDarknessIsConstant) {
    GeneratorSpec g;
    g.set(MaterialClass::WOOD, kAirDark, {33.0, 0.0, 0.0});
    auto r = derive_stream(1, "trace");
    const auto t = generate_trace(g, MaterialClass::WOOD, kAirDark, r);
    for (double v : t.samples) ASSERT_DOUBLE_EQ(v, 33.0);
}

TEST(Trace, NoisyMeanConverges) {
    GeneratorSpec g;
    g.duration = 100.0;  // 10^4 samples
    g.set(MaterialClass::HDPE, kAirDark, {40.0, 2.0, 0.0});
    auto r = derive_stream(8, "trace");
    const auto t = generate_trace(g, MaterialClass::HDPE, kAirDark, r);
    ASSERT_EQ(t.samples.size(), 10000u);
    double s = 0;
    for (double v : t.samples) s += v;
    EXPECT_NEAR(s / 1e4, 40.0, 0.1);
}

TEST(Trace, MissingEntryIsConfigurationError) {
    GeneratorSpec g;
    auto r = derive_stream(1, "trace");
    EXPECT_THROW(generate_trace(g, MaterialClass::PET, kAirDark, r), ConfigurationError);
}

TEST(Trace, CsvRoundTrip) {
    auto r = derive_stream(3, "trace");
    const auto t = generate_trace(presets::paper_like(), MaterialClass::CERAMIC, kAirDark, r);
    std::stringstream ss;
    write_trace_csv(ss, t);
    const auto back = read_trace_csv(ss, t.material, t.condition);
    ASSERT_EQ(back.samples.size(), t.samples.size());
    for (std::size_t i = 0; i < t.samples.size(); i += 97) EXPECT_NEAR(back.samples[i], t.samples[i], 1e-6);
}

TEST(Features, Constant) {
    const std::vector<double> c(50, 7.5);
    const auto f = extract_features(c);
    EXPECT_DOUBLE_EQ(f.mean(), 7.5);
    EXPECT_DOUBLE_EQ(f.variance(), 0.0);
    EXPECT_DOUBLE_EQ(f.iqr(), 0.0);
}

TEST(Features, HandArithmetic) {
    const std::vector<double> s{1, 2, 3, 4};
    const auto f = extract_features(s);
    EXPECT_DOUBLE_EQ(f.mean(), 2.5);
    EXPECT_DOUBLE_EQ(f.variance(), 1.25);
    EXPECT_DOUBLE_EQ(f.min(), 1.0);
    EXPECT_DOUBLE_EQ(f.max(), 4.0);
}

TEST(Features, AlternatingAutocorrelation) {
    std::vector<double> s(1000);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i % 2);
    EXPECT_NEAR(extract_features(s).autocorrelation(), -1.0, 0.01);
}

TEST(Features, TooShort) {
    const std::vector<double> s{1.0};
    EXPECT_THROW(extract_features(s), ArgumentError);
}

TEST(Knn, OneNeighbourRecallsTrainingPoint) {
    const Dataset d = clusters(10, 0.5, 1);
    auto r = derive_stream(1, "fit");
    const auto model = fit(KnnParams{1}, d, r);
    for (const auto& e : d) EXPECT_EQ(predict(model, e.features), e.label);
}

TEST(Knn, MajorityVote) {
    const Dataset d{{fv({0.0}), MaterialClass::PET}, {fv({0.1}), MaterialClass::PET},
                    {fv({0.2}), MaterialClass::HDPE}, {fv({9.0}), MaterialClass::WOOD}};
    const KnnModel m(KnnParams{3}, d);
    EXPECT_EQ(m.predict(fv({0.05})), MaterialClass::PET);
}

TEST(Knn, TieGoesToSmallerClassIndex) {
    VoteCounts v{};
    v[index_of(MaterialClass::WOOD)] = 1;
    v[index_of(MaterialClass::ALUMINIUM)] = 1;
    EXPECT_EQ(plurality(v), MaterialClass::ALUMINIUM);
    EXPECT_THROW(KnnModel(KnnParams{2}, clusters(2, 1, 1)), ArgumentError);
}

TEST(Knn, MatchesBruteForceScan) {
    const Dataset train = clusters(15, 1.0, 4);
    const Dataset probe = clusters(5, 1.0, 5);
    const KnnModel m(KnnParams{5}, train);
    for (const auto& p : probe) {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t i = 0; i < train.size(); ++i) {
            double s = 0;
            for (std::size_t k = 0; k < kFeatureCount; ++k) {
                s += (train[i].features[k] - p.features[k]) * (train[i].features[k] - p.features[k]);
            }
            d.emplace_back(s, i);
        }
        std::sort(d.begin(), d.end());
        std::array<int, kMaterialCount> votes{};
        for (int k = 0; k < 5; ++k) ++votes[index_of(train[d[k].second].label)];
        const auto best = std::max_element(votes.begin(), votes.end()) - votes.begin();
        EXPECT_EQ(m.predict(p.features), static_cast<MaterialClass>(best));
    }
}

TEST(Forest, SingleClassAlwaysThatClass) {
    Dataset d;
    for (int i = 0; i < 30; ++i) d.push_back({fv({double(i), double(-i)}), MaterialClass::CERAMIC});
    auto r = derive_stream(2, "fit");
    const auto model = fit(ForestParams{}, d, r);
    for (int i = -5; i < 40; ++i) EXPECT_EQ(predict(model, fv({double(i), 3.0})), MaterialClass::CERAMIC);
}

TEST(Forest, SeparableTwoClass) {
    RngStream g(6, "twoclass");
    Dataset d;
    for (int i = 0; i < 200; ++i) {
        const bool upper = i % 2 == 0;
        FeatureVector f;
        for (std::size_t k = 0; k < kFeatureCount; ++k) f[k] = g.uniform(-1, 1);
        f[1] += upper ? 2.0 : -2.0;
        d.push_back({f, upper ? MaterialClass::PET : MaterialClass::HDPE});
    }
    auto r = derive_stream(6, "fit");
    const auto model = fit(ForestParams{50, 8, 3}, d, r);
    int ok = 0;
    for (const auto& e : d) ok += predict(model, e.features) == e.label;
    EXPECT_GE(ok / 200.0, 0.95);
}

TEST(Fit, EmptyDataset) {
    auto r = derive_stream(1, "fit");
    EXPECT_THROW(fit(KnnParams{1}, {}, r), ArgumentError);
    EXPECT_THROW(fit(ForestParams{}, {}, r), ArgumentError);
}

TEST(CrossValidation, SeparableSixClass) {
    const Dataset d = clusters(30, 12.0, 9);
    auto r1 = derive_stream(1, "cv");
    auto r2 = derive_stream(2, "cv");
    EXPECT_GE(kfold_cv(d, KnnParams{5}, r1), 0.95);
    EXPECT_GE(kfold_cv(d, ForestParams{}, r2), 0.95);
}

TEST(CrossValidation, ChanceLevel) {
    const Dataset d = no_signal(600, 10);
    auto r1 = derive_stream(1, "cv");
    auto r2 = derive_stream(2, "cv");
    EXPECT_NEAR(kfold_cv(d, KnnParams{5}, r1), 1.0 / 6.0, 0.10);
    EXPECT_NEAR(kfold_cv(d, ForestParams{}, r2), 1.0 / 6.0, 0.10);
}

TEST(CrossValidation, FoldsAreStratified) {
    const Dataset d = clusters(12, 1.0, 2);
    auto r = derive_stream(1, "cv");
    const auto folds = stratified_folds(d, 6, r);
    std::array<std::array<int, kMaterialCount>, 6> per{};
    for (std::size_t i = 0; i < d.size(); ++i) ++per[folds[i]][index_of(d[i].label)];
    for (const auto& f : per) {
        for (int c : f) EXPECT_EQ(c, 2);
    }
}

TEST(CrossValidation, TooFewExamples) {
    auto r = derive_stream(1, "cv");
    EXPECT_THROW(kfold_cv(clusters(0, 1, 1), KnnParams{1}, r), ArgumentError);
    Dataset five;
    for (int i = 0; i < 5; ++i) five.push_back({fv({double(i)}), MaterialClass::PET});
    EXPECT_THROW(kfold_cv(five, KnnParams{1}, r), ArgumentError);
}

TEST(Kruskal, AllEqualIsZero) {
    const auto r = kruskal_wallis({{3, 3, 3}, {3, 3}, {3, 3, 3, 3}});
    EXPECT_DOUBLE_EQ(r.h, 0.0);
}

TEST(Kruskal, HandExample) {
    const std::vector<std::vector<double>> g{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
    EXPECT_NEAR(kruskal_wallis(g).h, brute_force_h(g), 1e-9);
    EXPECT_NEAR(kruskal_wallis(g).h, 7.2, 1e-9);
}

TEST(Kruskal, RandomSetsWithTies) {
    RngStream r(11, "kw");
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + r.index(5);
        std::vector<std::vector<double>> g(k);
        for (auto& grp : g) {
            const std::size_t n = 1 + r.index(15);
            for (std::size_t i = 0; i < n; ++i) grp.push_back(static_cast<double>(r.index(8)));  // heavy ties
        }
        const double oracle = brute_force_h(g);
        const auto got = kruskal_wallis(g);
        EXPECT_NEAR(got.h, oracle, 1e-9);
        EXPECT_GE(got.eta_squared, 0.0);
        EXPECT_LE(got.eta_squared, 1.0);
    }
}

TEST(Kruskal, EmptyGroup) { EXPECT_THROW(kruskal_wallis({{1.0}, {}}), ArgumentError); }

TEST(Kruskal, SeparatedGroupsHaveLargeEffect) {
    // sized like one condition of the bench: 6 materials x 6 reps x 90 windows
    RngStream r(12, "kw");
    std::vector<std::vector<double>> g(6);
    for (std::size_t m = 0; m < 6; ++m) {
        for (int i = 0; i < 540; ++i) g[m].push_back(12.0 * static_cast<double>(m) + r.normal(0, 2));
    }
    EXPECT_GE(kruskal_wallis(g).eta_squared, 0.9);
}

TEST(Confusion, Identity) {
    ConfusionModel id;
    auto r = derive_stream(1, "sensing");
    for (int i = 0; i < 1000; ++i) {
        const auto m = kAllMaterials[i % kMaterialCount];
        EXPECT_EQ(sample_confusion(id, m, kWaterAmbient, r), m);
    }
}

TEST(Confusion, Table2WaterAmbient) {
    const auto model = presets::table2_confusion();
    EXPECT_DOUBLE_EQ(model.diagonal(kWaterAmbient, MaterialClass::PET), 0.667);
    auto r = derive_stream(5, "sensing");
    int ok = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto m = kAllMaterials[i % kMaterialCount];
        ok += sample_confusion(model, m, kWaterAmbient, r) == m;
    }
    EXPECT_NEAR(ok / 1e4, 0.667, 0.02);
}

TEST(Confusion, UniformRows) {
    ConfusionModel model;
    for (auto c : kAllConditions) model.set(c, ConfusionModel::uniform_matrix());
    auto r = derive_stream(6, "sensing");
    std::array<int, kMaterialCount> counts{};
    for (int i = 0; i < 10000; ++i) ++counts[index_of(sample_confusion(model, MaterialClass::WOOD, kAirDark, r))];
    for (int c : counts) EXPECT_NEAR(c / 1e4, 1.0 / 6.0, 0.02);
}

TEST(Confusion, RowsMustBeStochastic) {
    ConfusionModel model;
    auto m = ConfusionModel::diagonal_matrix(0.5);
    m[2][2] = 0.9;
    EXPECT_THROW(model.set(kAirDark, m), ConfigurationError);
}

TEST(Bench, PaperLikeBracketsTable) {
    BenchConfig cfg;
    cfg.seed = 11;
    const auto t = bench_sensing(presets::paper_like(), cfg);
    EXPECT_GE(t.row("all").average, 0.62);
    EXPECT_LE(t.row("all").average, 0.82);
    for (const auto& s : t.separability) EXPECT_GE(s.kw.eta_squared, 0.9);
}

TEST(Bench, ChanceGeneratorNearOneSixth) {
    BenchConfig cfg;
    cfg.seed = 3;
    const auto t = bench_sensing(presets::chance(), cfg);
    for (const auto& row : t.rows) EXPECT_NEAR(row.average, 1.0 / 6.0, 0.10) << row.name;
}

TEST(Bench, FixedSeedIsReproducible) {
    BenchConfig cfg;
    cfg.repetitions = 2;
    cfg.seed = 5;
    EXPECT_EQ(to_json(bench_sensing(presets::paper_like(), cfg)), to_json(bench_sensing(presets::paper_like(), cfg)));
}
