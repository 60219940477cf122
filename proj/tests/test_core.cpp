#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "abyss/core/geometry.hpp"
#include "abyss/core/world.hpp"
#include "abyss/sim/engine.hpp"

using namespace abyss;

namespace {

World random_world(std::size_t n, std::uint64_t seed) {
    RngStream rng(seed, "test-world");
    WorldSpec spec{{-50, -50, -50}, {50, 50, 0}, 200.0, {}};
    std::vector<PollutantItem> items;
    for (std::uint32_t i = 0; i < n; ++i) {
        items.push_back({i, {rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 0)},
                         kAllMaterials[rng.index(kMaterialCount)], 0.2});
    }
    return World(spec, items);
}

}  // namespace

TEST(Geometry, DistanceExamples) {
    EXPECT_DOUBLE_EQ(distance({0, 0, 0}, {3, 4, 0}), 5.0);
    EXPECT_DOUBLE_EQ(distance({1, 1, 1}, {1, 1, 1}), 0.0);
    EXPECT_NEAR(distance({0, 0, 0}, {1, 1, 1}), 1.7320508, 1e-7);
}

TEST(Geometry, DistanceIsAMetric) {
    RngStream rng(7, "metric");
    auto pt = [&] { return Vec3{rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100)}; };
    for (int i = 0; i < 1000; ++i) {
        const Vec3 a = pt(), b = pt(), c = pt();
        EXPECT_GE(distance(a, b), 0.0);
        EXPECT_DOUBLE_EQ(distance(a, b), distance(b, a));
        EXPECT_LE(distance(a, c), distance(a, b) + distance(b, c) + 1e-9);
    }
}

TEST(Geometry, SimplePolygon) {
    const std::vector<Vec2> square{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
    const std::vector<Vec2> bowtie{{0, 0}, {10, 10}, {10, 0}, {0, 10}};
    EXPECT_TRUE(is_simple_polygon(square));
    EXPECT_FALSE(is_simple_polygon(bowtie));
    EXPECT_TRUE(contains(square, {5, 5}));
    EXPECT_FALSE(contains(square, {11, 5}));
    EXPECT_DOUBLE_EQ(std::abs(signed_area(square)), 100.0);
    EXPECT_DOUBLE_EQ(distance_to_polygon(square, {13, 14}), 5.0);
}

TEST(World, ItemsWithinTrivial) {
    const World w = random_world(100, 3);
    EXPECT_TRUE(w.items_within({0.123, 0.456, -0.789}, 0.0).empty());
    EXPECT_EQ(w.items_within({0, 0, 0}, w.spec().diagonal()).size(), 100u);
    EXPECT_THROW(w.items_within({0, 0, 0}, -1.0), ArgumentError);
}

TEST(World, ItemsWithinMatchesLinearScan) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const World w = random_world(100, seed);
        RngStream rng(seed, "centers");
        for (int q = 0; q < 10; ++q) {
            const Vec3 c{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 0)};
            std::vector<std::uint32_t> expect;
            for (const auto& it : w.items()) {
                const double dx = it.position.x - c.x, dy = it.position.y - c.y, dz = it.position.z - c.z;
                if (std::sqrt(dx * dx + dy * dy + dz * dz) <= 5.0) expect.push_back(it.id);
            }
            std::vector<std::uint32_t> got;
            for (const auto& it : w.items_within(c, 5.0)) got.push_back(it.id);
            EXPECT_EQ(got, expect);
        }
    }
}

TEST(World, RemoveItem) {
    World w = random_world(10, 1);
    EXPECT_TRUE(w.remove_item(4));
    EXPECT_FALSE(w.remove_item(4));
    EXPECT_EQ(w.items().size(), 9u);
}

TEST(World, RejectsOutOfBoundsItem) {
    WorldSpec spec{{0, 0, -10}, {10, 10, 0}, 200.0, {}};
    EXPECT_THROW(World(spec, {{1, {20, 0, -1}, MaterialClass::PET, 0.1}}), ConfigurationError);
    spec.max_depth = 250;
    EXPECT_THROW(World(spec, {}), ConfigurationError);
}

TEST(Plume, Examples) {
    EXPECT_DOUBLE_EQ(plume_concentration({}, {1, 2, 3}), 0.0);
    PlumeField one{{{{1, 2, 3}, 2.0, 5.0}}};
    EXPECT_DOUBLE_EQ(plume_concentration(one, {1, 2, 3}), 2.0);
    PlumeField far{{{{0, 0, 0}, 1.0, 10.0}}};
    EXPECT_NEAR(plume_concentration(far, {10, 0, 0}), 0.3678794, 1e-7);
}

TEST(Plume, NonNegativeAndDecaying) {
    PlumeField f{{{{0, 0, 0}, 3.0, 4.0}, {{10, 0, 0}, 1.0, 2.0}}};
    double prev = plume_concentration(f, {0, 0, 0});
    for (double y = 1; y < 50; y += 1) {
        const double c = plume_concentration(f, {0, y, 0});
        EXPECT_GE(c, 0.0);
        EXPECT_LE(c, prev);
        prev = c;
    }
}

TEST(Engine, PopsByTime) {
    Engine e;
    e.schedule(5, "B");
    e.schedule(3, "A");
    e.run_until_idle();
    ASSERT_EQ(e.log().size(), 2u);
    EXPECT_EQ(e.log()[0].kind, "A");
    EXPECT_EQ(e.log()[1].kind, "B");
    EXPECT_DOUBLE_EQ(e.now(), 5.0);
}

TEST(Engine, TieBreakByInsertion) {
    Engine e;
    e.schedule(7, "A");
    e.schedule(7, "B");
    e.run_until_idle();
    EXPECT_EQ(e.log()[0].kind, "A");
    EXPECT_EQ(e.log()[1].kind, "B");
}

TEST(Engine, RandomPairsMatchSortOracle) {
    std::mt19937_64 gen(99);
    std::uniform_int_distribution<int> t(0, 50);  // coarse times force ties
    Engine e;
    std::vector<std::pair<int, int>> expect;
    for (int i = 0; i < 1000; ++i) {
        const int time = t(gen);
        e.schedule(time, "E", Json{{"i", i}});
        expect.emplace_back(time, i);
    }
    std::sort(expect.begin(), expect.end());
    e.run_until_idle();
    ASSERT_EQ(e.log().size(), 1000u);
    for (std::size_t k = 0; k < expect.size(); ++k) {
        EXPECT_EQ(e.log()[k].payload["i"].get<int>(), expect[k].second);
        EXPECT_DOUBLE_EQ(e.log()[k].time, expect[k].first);
        EXPECT_EQ(e.log()[k].seq, k);
    }
}

TEST(Engine, EmptyRunUntilAdvancesClock) {
    Engine e;
    e.run_until(10);
    EXPECT_DOUBLE_EQ(e.now(), 10.0);
    EXPECT_TRUE(e.log().empty());
}

TEST(Engine, PastScheduleRejected) {
    Engine e;
    e.run_until(4);
    EXPECT_THROW(e.schedule(3, "X"), SchedulingError);
    EXPECT_THROW(e.schedule(std::nan(""), "X"), SchedulingError);
    EXPECT_THROW(e.run_until(2), SchedulingError);
}

TEST(Engine, InterleavedTimersHandTrace) {
    // periods 2, 3, 5 up to t = 10
    Engine e;
    for (auto [name, period] : {std::pair{"a", 2.0}, {"b", 3.0}, {"c", 5.0}}) {
        const std::string kind = name;
        const double p = period;
        e.on(kind, [&e, kind, p](const SimEvent&) {
            if (e.now() + p <= 10) e.schedule_in(p, kind);
        });
        e.schedule(p, kind);
    }
    e.run_until(10);
    std::vector<std::string> got;
    for (const auto& ev : e.log()) got.push_back(format_fixed6(ev.time).substr(0, 2) + ev.kind);
    const std::vector<std::string> expect{"2.a", "3.b", "4.a", "5.c", "6.b", "6.a", "8.a", "9.b", "10c", "10a"};
    EXPECT_EQ(got, expect);
}

TEST(Engine, CancelSkipsEvent) {
    Engine e;
    auto h = e.schedule(1, "X");
    e.schedule(2, "Y");
    EXPECT_TRUE(e.cancel(h));
    EXPECT_FALSE(e.cancel(h));
    EXPECT_EQ(e.pending(), 1u);
    e.run_until_idle();
    ASSERT_EQ(e.log().size(), 1u);
    EXPECT_EQ(e.log()[0].kind, "Y");
}

TEST(Engine, HandlerErrorAbortsRun) {
    Engine e;
    e.on("BOOM", [](const SimEvent&) { throw std::runtime_error("bad"); });
    e.schedule(1, "BOOM");
    e.schedule(2, "LATER");
    EXPECT_THROW(e.run_until_idle(), SimulationError);
    EXPECT_EQ(e.log().back().kind, "ERROR");
    EXPECT_EQ(e.pending(), 1u);
}

TEST(Engine, SameSeedSameLog) {
    auto run = [](std::uint64_t seed) {
        Engine e(seed);
        e.on("T", [&e](const SimEvent&) {
            auto& r = e.stream("timer");
            e.record("DRAW", Json{{"u", r.uniform()}});
            if (e.now() < 100) e.schedule_in(r.uniform(0.1, 3.0), "T");
        });
        e.schedule(0, "T");
        e.run_until_idle();
        return canonical_log(e.log());
    };
    EXPECT_EQ(run(5), run(5));
    EXPECT_NE(run(5), run(6));
}

TEST(Engine, ReplayReproducesSequence) {
    Engine e(3);
    for (int i = 0; i < 50; ++i) e.schedule(e.stream("t").uniform(0, 10), "K" + std::to_string(i % 3));
    e.run_until_idle();
    const auto replayed = replay_through_engine(e.log());
    EXPECT_EQ(log_hash(replayed), log_hash(e.log()));
}

TEST(Rng, SameSeedAndLabelSameDraws) {
    auto a = derive_stream(42, "comms");
    auto b = derive_stream(42, "comms");
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, LabelsGiveDifferentStreams) {
    auto a = derive_stream(42, "comms");
    auto b = derive_stream(42, "sensing");
    EXPECT_NE(a.key(), b.key());
    EXPECT_NE(a.next_u64(), b.next_u64());
    EXPECT_THROW(derive_stream(42, ""), ArgumentError);
}

TEST(Rng, KeyIsFnv1aOverSeedThenLabel) {
    // independent byte loop
    std::uint64_t h = 0xcbf29ce484222325ull;
    const std::uint64_t seed = 0x0102030405060708ull;
    std::string bytes;
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((seed >> (8 * i)) & 0xff));
    bytes += "comms";
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    EXPECT_EQ(derive_stream(seed, "comms").key(), h);
}

TEST(Rng, ChiSquareUniformity) {
    auto r = derive_stream(2024, "sensing");
    constexpr int kBins = 100;
    constexpr int kDraws = 100000;
    std::vector<int> counts(kBins, 0);
    for (int i = 0; i < kDraws; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        ++counts[static_cast<int>(u * kBins)];
    }
    const double expected = static_cast<double>(kDraws) / kBins;
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    const double critical = boost::math::quantile(boost::math::chi_squared(kBins - 1), 0.99);
    EXPECT_LT(chi2, critical);
}

TEST(Rng, IndexStaysInRange) {
    auto r = derive_stream(1, "idx");
    for (int i = 0; i < 10000; ++i) EXPECT_LT(r.index(7), 7u);
    EXPECT_THROW(r.index(0), ArgumentError);
}

TEST(Canonical, FixedSixDecimalsAndSortedPayloadKeys) {
    EXPECT_EQ(format_fixed6(1.0), "1.000000");
    EXPECT_EQ(format_fixed6(-0.0000001), "0.000000");
    EXPECT_EQ(canonical_dump(Json{{"b", 1}, {"a", 2.5}}), R"({"a":2.500000,"b":1})");
    const SimEvent ev{3, 1.5, "X", Json{{"z", true}, {"m", {1, 2}}}};
    const auto line = serialize_event(ev);
    EXPECT_EQ(line, R"({"seq":3,"time":1.500000,"kind":"X","payload":{"m":[1,2],"z":true}})");
    EXPECT_EQ(serialize_event(parse_event(line)), line);
}

TEST(Canonical, Sha256KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
