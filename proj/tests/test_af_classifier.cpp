#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "phisigma/af_classifier.hpp"

using namespace phisigma;

namespace {

oracle::NaiveParams naive_from(const AfParams& p) {
    return {p.x, p.S, p.omega, static_cast<int>(p.L), p.xi};
}

void expect_matches_oracle(u64 n, Fn f, const AfParams& params, const FactorSieve& sieve) {
    const auto rep = classify(n, f, params, sieve);
    ASSERT_TRUE(rep.applicable) << n;
    const auto ref = oracle::naive_conditions(n, f == Fn::phi, naive_from(params));
    for (int i = 0; i < 9; ++i)
        ASSERT_EQ(rep.cond[i], ref[i]) << "n=" << n << " f=" << to_string(f) << " x=" << params.x << " S=" << params.S
                                       << " cond " << i << ": " << rep.detail[i];
}

}  // namespace

TEST(AfParams, Identities) {
    for (const double x : {1e4, 1e6, 1e20, 1e100}) {
        const auto p = af_params(x);
        EXPECT_NEAR(p.delta * p.delta * p.logs.log2, 36 * p.logs.log3, 1e-10) << x;
        EXPECT_NEAR(std::log(p.omega), -0.45 * std::log(p.logs.log2), 1e-12);
        EXPECT_GE(p.L, 2);
        EXPECT_EQ(p.xi.size(), static_cast<std::size_t>(p.L - 1));
        for (const double v : p.xi) {
            EXPECT_GT(v, 1.0);
            EXPECT_LE(v, 1.1);
        }
    }
    EXPECT_DOUBLE_EQ(af_params(1e6, 1.0).omega, 1.0);
}

TEST(AfParams, PinnedAtGoogol) {
    // log_2 = ln(100 ln 10) ~ 5.4392, log_3 ~ 1.6936, log_4 ~ 0.5269
    const auto p = af_params(1e100);
    EXPECT_NEAR(p.logs.log2, std::log(100 * std::log(10.0)), 1e-12);
    EXPECT_TRUE(std::isinf(p.S_formula));
    EXPECT_NEAR(p.log_S_formula, std::pow(p.logs.log2, 36.0), 1e-6 * p.log_S_formula);
    EXPECT_DOUBLE_EQ(p.S, std::pow(1e100, 0.1));
    EXPECT_TRUE(p.S_overridden);
    EXPECT_EQ(p.L0_formula, 1);
    EXPECT_EQ(p.L_formula, -2);
    EXPECT_EQ(p.L, 2);
    EXPECT_TRUE(p.L_overridden);
    EXPECT_EQ(p.L0_effective, 2);
    ASSERT_EQ(p.xi.size(), 1u);
    EXPECT_DOUBLE_EQ(p.xi[0], 1 + 1.0 / 80);
    EXPECT_NEAR(p.omega, std::pow(p.logs.log2, -0.45), 1e-15);
}

TEST(AfParams, SmallXClampsSToEE) {
    const auto p = af_params(1e4);
    EXPECT_DOUBLE_EQ(p.S, e_to_e());
    const auto q = af_params(1e4, 0.1, {300.0, 4});
    EXPECT_EQ(q.S, 300.0);
    EXPECT_EQ(q.L, 4);
    EXPECT_EQ(q.xi.size(), 3u);
}

TEST(AfParams, DomainErrors) {
    EXPECT_THROW(af_params(1e6, 0.0), DomainError);
    EXPECT_THROW(af_params(1e6, 1.5), DomainError);
    EXPECT_THROW(af_params(15.0), DomainError);
    EXPECT_THROW(af_params(1e6, 0.1, {10.0, {}}), DomainError);
    EXPECT_THROW(af_params(1e6, 0.1, {{}, 1}), DomainError);
}

TEST(Classify, PrimeFailsConditionSeven) {
    const FactorSieve sieve(2, 100002);
    const auto r = classify(99991, Fn::sigma, af_params(1e5), sieve);
    ASSERT_TRUE(r.applicable);
    EXPECT_FALSE(r.cond[7]);
    EXPECT_NE(r.detail[7].find("does not exist"), std::string::npos);
    EXPECT_FALSE(r.member);
}

TEST(Classify, PowersOfTwoHaveNoOddPrimes) {
    const FactorSieve sieve(2, 100002);
    const auto r = classify(1 << 15, Fn::phi, af_params(1e5), sieve);
    EXPECT_FALSE(r.cond[6]);
    EXPECT_FALSE(r.member);
    EXPECT_EQ(r.f_value, 1u << 14);
}

TEST(Classify, NotApplicableAboveX) {
    const FactorSieve sieve(2, 100002);
    const auto r = classify(99990, Fn::sigma, af_params(1e5), sieve);
    EXPECT_FALSE(r.applicable);
    EXPECT_FALSE(r.member);
    EXPECT_NE(r.detail[0].find("not applicable"), std::string::npos);
    EXPECT_THROW(classify(0, Fn::phi, af_params(1e5), sieve), DomainError);
    EXPECT_THROW(classify(100002, Fn::phi, af_params(1e6), sieve), ResourceError);
}

TEST(Classify, AgreesWithNaiveOracle) {
    const u64 xmax = 100000;
    const FactorSieve sieve(2, phi_preimage_bound(xmax) + 2);
    std::mt19937_64 rng(2024);
    const double Ss[] = {e_to_e(), 50.0, 300.0};
    int checked = 0;
    while (checked < 400) {
        const u64 x = 10000 + rng() % (xmax - 10000);
        const Fn f = rng() & 1 ? Fn::phi : Fn::sigma;
        const auto params = af_params(static_cast<double>(x), 0.1, {Ss[rng() % 3], static_cast<long>(2 + rng() % 3)});
        const u64 lo = static_cast<u64>(static_cast<double>(x) / std::log(static_cast<double>(x)));
        const u64 n = lo + rng() % (x - lo);
        if (apply(f, factorize(n, sieve)) > x) continue;
        expect_matches_oracle(n, f, params, sieve);
        ++checked;
    }
}

TEST(Classify, TableAndDirectNormalityAgree) {
    const auto params = af_params(30000, 0.1, {40.0, {}});
    const FactorSieve sieve(2, phi_preimage_bound(30000) + 2);
    const NormalityTable table(30000, params.S, sieve, 2);
    for (u64 n = 20000; n < 30000; n += 3) {
        const auto a = classify(n, Fn::sigma, params, sieve);
        const auto b = classify(n, Fn::sigma, params, sieve, &table);
        ASSERT_EQ(a.cond, b.cond) << n;
    }
    EXPECT_THROW(NormalityTable(sieve.window_hi(), 40.0, sieve), RangeError);
}

TEST(Classify, ConditionFiveImpliesComparisonInequalities) {
    const auto params = af_params(1e5, 0.1, {{}, 3});
    const FactorSieve sieve(2, 100002);
    const double rho = default_constants().rho;
    u64 inside = 0;
    for (u64 n = 10000; n <= 100000; ++n) {
        const auto r = classify(n, Fn::sigma, params, sieve);
        if (!r.applicable || !r.cond[5]) continue;
        ++inside;
        const auto v = renormalize(n, 1e5, 3, Offset::from_p1);
        ASSERT_TRUE(comparison_inequalities_hold(v.entries, rho)) << n;
    }
    EXPECT_GT(inside, 0u);
}

TEST(Classify, LargerEpsilonOnlyShrinksMembership) {
    const FactorSieve sieve(2, 50002);
    const auto lo = af_params(5e4, 0.1, {20.0, {}}), hi = af_params(5e4, 0.9, {20.0, {}});
    for (u64 n = 5000; n <= 50000; ++n) {
        const auto a = classify(n, Fn::sigma, lo, sieve), b = classify(n, Fn::sigma, hi, sieve);
        if (b.cond[8]) {
            ASSERT_TRUE(a.cond[8]) << n;
        }
        if (b.member) {
            ASSERT_TRUE(a.member) << n;
        }
    }
}

TEST(Classify, OmegaConditionNeverBindsAtDeskScale) {
    // 10 loglog x ~ 24.4 at x = 1e5, while Omega(n) <= 16 below 1e5
    const FactorSieve sieve(2, 100002);
    const auto params = af_params(1e5);
    for (u64 n = 9000; n <= 100000; n += 7) {
        const auto r = classify(n, Fn::sigma, params, sieve);
        if (r.applicable) {
            ASSERT_TRUE(r.cond[3]) << n;
        }
    }
}

TEST(CaptureCensus, AgreesWithOracleAtSmallX) {
    for (const Fn f : {Fn::phi, Fn::sigma}) {
        const u64 x = 800;
        const auto c = capture_census(f, x, 0.1, {30.0, {}});
        const auto naive = naive_from(c.params);
        const u64 top = f == Fn::phi ? phi_preimage_bound(x) : x;
        std::vector<bool> all(x + 1), outside(x + 1);
        u64 scanned = 0;
        for (u64 n = 1; n <= top; ++n) {
            const u64 v = f == Fn::phi ? oracle::phi(n) : oracle::sigma(n);
            if (v > x) continue;
            ++scanned;
            all[v] = true;
            const auto cs = oracle::naive_conditions(n, f == Fn::phi, naive);
            if (std::find(cs.begin(), cs.end(), false) != cs.end()) outside[v] = true;
        }
        EXPECT_EQ(c.preimages_scanned, scanned);
        EXPECT_EQ(c.total_values, static_cast<u64>(std::count(all.begin(), all.end(), true)));
        EXPECT_EQ(c.values_with_outside_preimage, static_cast<u64>(std::count(outside.begin(), outside.end(), true)));
    }
}

TEST(CaptureCensus, PinnedAtTenThousand) {
    const auto phi = capture_census(Fn::phi, 10000);
    const auto sigma = capture_census(Fn::sigma, 10000);
    EXPECT_EQ(phi.total_values, 2374u);
    EXPECT_EQ(sigma.total_values, 2503u);
    for (const auto* c : {&phi, &sigma}) {
        EXPECT_GE(c->fraction, 0.0);
        EXPECT_LE(c->fraction, 1.0);
    }
    // every value has a preimage outside A_f at this scale
    EXPECT_EQ(phi.values_with_outside_preimage, phi.total_values);
    EXPECT_EQ(sigma.values_with_outside_preimage, sigma.total_values);
}

TEST(CaptureCensus, DeterministicAcrossThreads) {
    const auto a = capture_census(Fn::phi, 50000, 0.1, {}, 1);
    const auto b = capture_census(Fn::phi, 50000, 0.1, {}, 4);
    EXPECT_EQ(a.preimages_scanned, b.preimages_scanned);
    EXPECT_EQ(a.values_with_outside_preimage, b.values_with_outside_preimage);
    EXPECT_THROW(capture_census(Fn::phi, kCaptureMaxX + 1), ResourceError);
}
