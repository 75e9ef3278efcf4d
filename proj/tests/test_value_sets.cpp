#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "phisigma/value_sets.hpp"

using namespace phisigma;

namespace {

// Values <= x of phi and sigma by a double loop over all n up to a generous
// preimage limit (phi(n) >= sqrt(n / 2), so n <= 2 x^2 covers everything).
struct OracleSets {
    std::vector<bool> phi, sigma;
};

OracleSets oracle_sets(u64 x) {
    OracleSets s{std::vector<bool>(x + 1), std::vector<bool>(x + 1)};
    for (u64 n = 1; n <= std::max<u64>(2 * x * x, 10); ++n) {
        const u64 p = oracle::phi(n);
        if (p <= x) s.phi[p] = true;
        if (n <= x) {
            const u64 g = oracle::sigma(n);
            if (g <= x) s.sigma[g] = true;
        }
    }
    return s;
}

}  // namespace

TEST(PreimageBound, PinnedValues) {
    EXPECT_EQ(phi_preimage_bound(1), 100u);
    EXPECT_EQ(phi_preimage_bound(100), 491u);
    EXPECT_EQ(phi_preimage_bound(10000), 55126u);
    EXPECT_EQ(phi_preimage_bound(10'000'000), 61811117u);
    EXPECT_THROW(phi_preimage_bound(0), DomainError);
}

TEST(PreimageBound, NoPreimageBeyondBound) {
    // phi(n) <= x forces n <= B(x); checked against every n up to 4 B(x)
    for (const u64 x : {10ULL, 100ULL, 1000ULL, 5000ULL}) {
        const u64 B = phi_preimage_bound(x);
        for (u64 n = B + 1; n <= 4 * B; ++n) ASSERT_GT(oracle::phi(n), x) << "x=" << x << " n=" << n;
    }
}

TEST(ValueBitmaps, EqualDoubleLoopOracle) {
    for (const u64 x : {1ULL, 2ULL, 10ULL, 64ULL, 65ULL, 1000ULL}) {
        const auto ref = oracle_sets(x);
        const auto bms = build_value_bitmaps(x);
        for (u64 v = 0; v <= x; ++v) {
            EXPECT_EQ(bms.phi.test(v), ref.phi[v]) << "phi x=" << x << " v=" << v;
            EXPECT_EQ(bms.sigma.test(v), ref.sigma[v]) << "sigma x=" << x << " v=" << v;
        }
    }
}

TEST(ValueBitmaps, EqualOracleAtTenThousand) {
    const u64 x = 10000;
    // bounded preimage range from the proven bound keeps the oracle cheap
    std::vector<bool> phi(x + 1), sigma(x + 1);
    for (u64 n = 1; n <= phi_preimage_bound(x); ++n) {
        const u64 p = oracle::phi(n);
        if (p <= x) phi[p] = true;
        if (n <= x && oracle::sigma(n) <= x) sigma[oracle::sigma(n)] = true;
    }
    const auto bms = build_value_bitmaps(x);
    for (u64 v = 0; v <= x; ++v) {
        ASSERT_EQ(bms.phi.test(v), phi[v]) << v;
        ASSERT_EQ(bms.sigma.test(v), sigma[v]) << v;
    }
}

TEST(ValueBitmaps, SingleBuildsMatchJointBuild) {
    const auto both = build_value_bitmaps(50000);
    EXPECT_EQ(build_value_bitmap(Fn::phi, 50000), both.phi);
    EXPECT_EQ(build_value_bitmap(Fn::sigma, 50000), both.sigma);
}

TEST(ValueBitmaps, DeterministicAcrossThreadsAndSegments) {
    const auto ref = build_value_bitmaps(300000, {1, std::size_t{1} << 16});
    for (const unsigned t : {2u, 4u})
        for (const std::size_t seg : {std::size_t{1} << 12, std::size_t{1} << 15, std::size_t{1} << 18}) {
            const auto other = build_value_bitmaps(300000, {t, seg});
            EXPECT_EQ(other.phi, ref.phi);
            EXPECT_EQ(other.sigma, ref.sigma);
        }
}

TEST(Counts, QueriesBeyondLimitAreRangeErrors) {
    const auto bms = build_value_bitmaps(100);
    EXPECT_THROW(count_values(bms.phi, 101), RangeError);
    EXPECT_THROW(intersect_count(bms.phi, bms.sigma, 101), RangeError);
    EXPECT_THROW(bms.phi.test(101), RangeError);
}

TEST(Counts, SmallValuesByHand) {
    // phi values <= 10: 1 2 4 6 8 10; sigma values <= 10: 1 3 4 6 7 8
    const auto bms = build_value_bitmaps(10);
    EXPECT_EQ(count_values(bms.phi, 10), 6u);
    EXPECT_EQ(count_values(bms.sigma, 10), 6u);
    EXPECT_EQ(intersect_count(bms.phi, bms.sigma, 10), 4u);
}

TEST(ValuesTable, TableRowsThroughOneMillion) {
    const auto rows = values_table({10000, 100000, 1000000});
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], (ValuesTableRow{10000, 2374, 2503, 1368, 1368.0 / 2374, 1368.0 / 2503}));
    EXPECT_EQ(rows[1].v_phi, 20254u);
    EXPECT_EQ(rows[1].v_sigma, 21399u);
    EXPECT_EQ(rows[1].v_common, 11116u);
    EXPECT_EQ(rows[2].v_phi, 180184u);
    EXPECT_EQ(rows[2].v_sigma, 189511u);
    EXPECT_EQ(rows[2].v_common, 95145u);
}

TEST(ValuesTable, StreamingMatchesFullBitmaps) {
    const std::vector<u64> limits{1000, 77777, 200000};
    const auto full = values_table(limits);
    for (const u64 window : {4096ULL, 50000ULL, 1ULL << 20}) {
        TableOptions opt;
        opt.streaming = true;
        opt.streaming_window = window;
        opt.build.threads = 2;
        EXPECT_EQ(values_table(limits, opt), full) << "window " << window;
    }
}

TEST(ValuesTable, StreamingWithTinyWindows) {
    // every window rescans all preimages, so tiny windows stay at small x
    const std::vector<u64> limits{100, 1000, 5000};
    for (const u64 window : {1ULL, 64ULL, 200ULL}) {
        TableOptions opt;
        opt.streaming = true;
        opt.streaming_window = window;
        EXPECT_EQ(values_table(limits, opt), values_table(limits)) << "window " << window;
    }
}

TEST(ValuesTable, RejectsBadLimits) {
    EXPECT_THROW(values_table({100, 10}), DomainError);
    EXPECT_THROW(values_table({0}), DomainError);
    EXPECT_THROW(values_table({10, 10}), DomainError);
    EXPECT_TRUE(values_table({}).empty());
}

TEST(ValuesTable, CsvFormat) {
    std::ostringstream os;
    write_values_csv(os, values_table({10000}));
    EXPECT_EQ(os.str(), "N,V_phi,V_sigma,V_common,ratio_phi,ratio_sigma\n10000,2374,2503,1368,0.5762426,0.5465441\n");
}

TEST(ValuesTable, RatiosInUnitInterval) {
    for (const auto& r : values_table({10, 100, 1000, 10000})) {
        EXPECT_LE(r.v_common, std::min(r.v_phi, r.v_sigma));
        EXPECT_GE(r.ratio_phi, 0.0);
        EXPECT_LE(r.ratio_phi, 1.0);
        EXPECT_LE(r.ratio_sigma, 1.0);
    }
}
