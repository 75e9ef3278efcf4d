#pragma once

// The simplices S_L(xi): renormalized prime-factor vectors, membership,
// volumes (Monte Carlo for any L, exact for L <= 3) and the reciprocal sums
// R_L over integers whose vectors land inside.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "phisigma/anatomy.hpp"
#include "phisigma/constants.hpp"
#include "phisigma/errors.hpp"
#include "phisigma/parallel.hpp"
#include "phisigma/philox.hpp"
#include "phisigma/sieve_core.hpp"

namespace phisigma {

/// Which prime starts the vector: p_0(n) (largest) or p_1(n).
enum class Offset { from_p0, from_p1 };

inline const char* to_string(Offset o) { return o == Offset::from_p0 ? "p0" : "p1"; }

struct RenormalizedVector {
    std::vector<double> entries;
    u64 source_n = 0;
    double level_x = 0;
};

/// x_i = loglog p_i(n) / loglog x with p_0 >= p_1 >= ... listed with
/// multiplicity; zero past Omega(n) and wherever p_i = 2.
inline RenormalizedVector renormalize(const Factorization& fact, u64 n, double x, std::size_t L, Offset offset) {
    if (!(x > std::exp(1.0))) throw DomainError("renormalize: need x > e so that loglog x > 0");
    if (L < 1) throw DomainError("renormalize: L must be >= 1");
    RenormalizedVector v;
    v.source_n = n;
    v.level_x = x;
    v.entries.assign(L, 0.0);
    const double llx = loglog(x);
    const std::size_t skip = offset == Offset::from_p0 ? 0 : 1;
    std::size_t index = 0;
    for (auto it = fact.end(); it != fact.begin();) {
        --it;
        for (unsigned e = 0; e < it->exponent; ++e, ++index) {
            if (index < skip) continue;
            const std::size_t slot = index - skip;
            if (slot >= L) return v;
            if (it->prime > 2) v.entries[slot] = loglog(static_cast<double>(it->prime)) / llx;
        }
    }
    return v;
}

inline RenormalizedVector renormalize(u64 n, double x, std::size_t L, Offset offset) {
    if (n == 0) throw DomainError("renormalize: n must be >= 1");
    if (n == 1) return renormalize(Factorization{}, 1, x, L, offset);
    const FactorSieve sieve(n, n + 1);
    return renormalize(factorize(n, sieve), n, x, L, offset);
}

/// a_i from the series F.
inline double simplex_weight(std::size_t i) { return series_coefficient(i); }

struct SimplexSpec {
    std::size_t L = 2;
    /// xi_0 .. xi_{L-2}
    std::vector<double> xi;

    void validate() const {
        if (L < 2) throw DomainError("SimplexSpec: L must be >= 2");
        if (xi.size() != L - 1) throw DomainError("SimplexSpec: need exactly L-1 xi values");
        for (const double v : xi)
            if (!(v >= 1.0)) throw DomainError("SimplexSpec: every xi must be >= 1");
    }

    static SimplexSpec ones(std::size_t L) {
        SimplexSpec s{L, std::vector<double>(L >= 2 ? L - 1 : 0, 1.0)};
        s.validate();
        return s;
    }

    /// xi_i = 1 + 1 / (10 (L0 - i)^3); needs L <= L0.
    static SimplexSpec xi_for(std::size_t L, long L0) {
        if (L < 2 || static_cast<long>(L) > L0) throw DomainError("xi_for: need 2 <= L <= L0");
        SimplexSpec s{L, {}};
        for (std::size_t i = 0; i + 2 <= L; ++i) {
            const double k = static_cast<double>(L0 - static_cast<long>(i));
            s.xi.push_back(1.0 + 1.0 / (10.0 * k * k * k));
        }
        return s;
    }
};

struct DefaultXi {
    long L0 = 0;
    long L = 0;
    SimplexSpec spec;
};

/// L = floor(L0 - 2 sqrt(log_3 x)) and the matching xi.
inline DefaultXi default_xi(const IteratedLogs& t, const StructureConstants& k = default_constants()) {
    DefaultXi d;
    d.L0 = l0_of(t, k);
    d.L = static_cast<long>(std::floor(static_cast<double>(d.L0) - 2.0 * std::sqrt(t.log3)));
    if (d.L < 2)
        throw DomainError("default_xi: L = " + std::to_string(d.L) + " at this x (L0 = " + std::to_string(d.L0) +
                          "); need L0 >= 2 + 2 sqrt(log_3 x)");
    d.spec = SimplexSpec::xi_for(static_cast<std::size_t>(d.L), d.L0);
    return d;
}

inline DefaultXi default_xi(double x, const StructureConstants& k = default_constants()) {
    return default_xi(IteratedLogs::of(x), k);
}

namespace detail {
// sum_{i=1}^{m} a_i v[start + i - 1]
inline double weighted_tail(std::span<const double> v, std::size_t start, std::size_t m) {
    double s = 0;
    for (std::size_t i = 1; i <= m; ++i) s += simplex_weight(i) * v[start + i - 1];
    return s;
}
}  // namespace detail

/// Ordering 0 <= x_L <= ... <= x_1 <= 1 and inequalities (I_0) .. (I_{L-2}).
inline bool simplex_contains(std::span<const double> v, const SimplexSpec& spec) {
    if (v.size() != spec.L) throw DomainError("simplex_contains: vector length differs from L");
    const std::size_t L = spec.L;
    if (v[0] > 1.0 || v[L - 1] < 0.0) return false;
    for (std::size_t i = 0; i + 1 < L; ++i)
        if (v[i] < v[i + 1]) return false;
    // (I_k): a_1 x_{k+1} + ... + a_{L-k} x_L <= xi_k * (k == 0 ? 1 : x_k), 1-based x
    for (std::size_t k = 0; k + 2 <= L; ++k) {
        const double rhs = spec.xi[k] * (k == 0 ? 1.0 : v[k - 1]);
        if (detail::weighted_tail(v, k, L - k) > rhs) return false;
    }
    return true;
}

inline bool simplex_contains(const RenormalizedVector& v, const SimplexSpec& spec) {
    return simplex_contains(std::span<const double>(v.entries), spec);
}

struct VolumeEstimate {
    double mean = 0;
    double std_error = 0;
    u64 samples = 0;
    u64 seed = 0;
    u64 accepted = 0;
};

inline double factorial(std::size_t n) {
    double f = 1;
    for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
    return f;
}

namespace detail {

inline constexpr u64 kSampleChunk = u64{1} << 16;

// Sample `index` of a stream: a uniform point of the ordered simplex
// 1 >= x_1 >= ... >= x_L >= 0, built from descending order statistics.
inline void ordered_point(Philox4x32::Key key, u64 index, std::uint32_t stream, std::span<double> out) {
    const std::size_t L = out.size();
    double prev = 1.0;
    for (std::size_t k = 0; k < L; k += 2) {
        const auto u = Philox4x32::uniform_pair(key, index, static_cast<std::uint32_t>(k / 2), stream);
        for (std::size_t j = k; j < std::min(L, k + 2); ++j) {
            const double w = Philox4x32::open_low(u[j - k]);
            prev *= std::pow(w, 1.0 / static_cast<double>(L - j));
            out[j] = prev;
        }
    }
}

}  // namespace detail

/// Volume of S_L(xi) as (acceptance rate) / L! over uniform points of the
/// ordered simplex. Result depends only on (spec, samples, seed).
inline VolumeEstimate simplex_volume_mc(const SimplexSpec& spec, u64 samples, u64 seed, unsigned threads = 1) {
    spec.validate();
    if (samples < 1000) throw DomainError("simplex_volume_mc: need at least 1000 samples");
    const auto key = Philox4x32::key_from_seed(seed);
    const std::size_t chunks = static_cast<std::size_t>((samples + detail::kSampleChunk - 1) / detail::kSampleChunk);
    std::vector<u64> hits(chunks, 0);
    parallel_for_chunks(chunks, threads, [&](std::size_t c) {
        std::vector<double> point(spec.L);
        const u64 lo = c * detail::kSampleChunk, hi = std::min(samples, lo + detail::kSampleChunk);
        u64 h = 0;
        for (u64 i = lo; i < hi; ++i) {
            detail::ordered_point(key, i, 0, point);
            h += simplex_contains(point, spec);
        }
        hits[c] = h;
    });
    VolumeEstimate est;
    est.samples = samples;
    est.seed = seed;
    for (const u64 h : hits) est.accepted += h;
    const double p = static_cast<double>(est.accepted) / static_cast<double>(samples);
    const double scale = 1.0 / factorial(spec.L);
    est.mean = p * scale;
    est.std_error = std::sqrt(p * (1 - p) / static_cast<double>(samples)) * scale;
    return est;
}

namespace detail {

// A line c0 + c1 * t.
struct Line {
    double c0, c1;
    double at(double t) const { return c0 + c1 * t; }
};

// Integral over [lo, hi] of max(0, min of the lines), which is piecewise
// linear, so the trapezoid rule between breakpoints is exact.
inline double integrate_min_lines(const std::vector<Line>& lines, double lo, double hi) {
    if (!(hi > lo)) return 0;
    std::vector<double> knots{lo, hi};
    std::vector<Line> all = lines;
    all.push_back({0, 0});
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            const double dc = all[i].c1 - all[j].c1;
            if (dc == 0) continue;
            const double t = (all[j].c0 - all[i].c0) / dc;
            if (t > lo && t < hi) knots.push_back(t);
        }
    std::sort(knots.begin(), knots.end());
    auto g = [&](double t) {
        double m = lines.front().at(t);
        for (const auto& l : lines) m = std::min(m, l.at(t));
        return std::max(0.0, m);
    };
    double total = 0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) total += 0.5 * (knots[i + 1] - knots[i]) * (g(knots[i]) + g(knots[i + 1]));
    return total;
}

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                           double whole, double tol, int depth) {
    const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6 * (fa + 4 * flm + fm), right = (b - m) / 6 * (fm + 4 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15 * tol) return left + right + delta / 15;
    return simpson_step(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return simpson_step(f, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, 50);
}

}  // namespace detail

/// Exact volume for L in {2, 3}: piecewise-linear inner integrals, with an
/// adaptive Simpson outer integral for L = 3 (absolute error well below 1e-8).
inline double simplex_volume_exact(const SimplexSpec& spec) {
    spec.validate();
    const double a1 = simplex_weight(1), a2 = simplex_weight(2), a3 = simplex_weight(3);
    if (spec.L == 2) {
        // x2 in [0, min(x1, (xi0 - a1 x1) / a2)]
        return detail::integrate_min_lines({{0, 1}, {spec.xi[0] / a2, -a1 / a2}}, 0, 1);
    }
    if (spec.L == 3) {
        const double xi0 = spec.xi[0], xi1 = spec.xi[1];
        auto area = [&](double x1) {
            // x2 in [0, x1], x3 in [0, min(x2, (xi0 - a1 x1 - a2 x2) / a3, (xi1 x1 - a1 x2) / a2)]
            return detail::integrate_min_lines(
                {{0, 1}, {(xi0 - a1 * x1) / a3, -a2 / a3}, {xi1 * x1 / a2, -a1 / a2}}, 0, x1);
        };
        // area is piecewise quadratic in x1; split at its kinks for clean convergence
        std::vector<double> cuts{0.0, 1.0};
        for (const double c : {xi0 / a1, xi0 / (a1 + a2), xi0 / (a1 + a2 + a3)})
            if (c > 0 && c < 1) cuts.push_back(c);
        std::sort(cuts.begin(), cuts.end());
        double total = 0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            total += detail::adaptive_simpson(area, cuts[i], cuts[i + 1], 1e-13);
        return total;
    }
    throw DomainError("simplex_volume_exact: only L = 2 and L = 3 are supported");
}

inline constexpr double kComparisonHypothesis = 1.1;

/// xi_0^L xi_1^{L-1} ... xi_{L-2}^2.
inline double xi_product(const SimplexSpec& spec) {
    double prod = 1;
    for (std::size_t k = 0; k + 2 <= spec.L; ++k) prod *= std::pow(spec.xi[k], static_cast<double>(spec.L - k));
    return prod;
}

/// x_j <= 3 rho^{j-i} x_i for 1 <= i < j <= L and x_j < 3 rho^j, 1-based.
inline bool comparison_inequalities_hold(std::span<const double> v, double rho) {
    for (std::size_t j = 1; j <= v.size(); ++j) {
        if (!(v[j - 1] < 3.0 * std::pow(rho, static_cast<double>(j)))) return false;
        for (std::size_t i = 1; i < j; ++i)
            if (v[j - 1] > 3.0 * std::pow(rho, static_cast<double>(j - i)) * v[i - 1]) return false;
    }
    return true;
}

struct ComparisonCheck {
    bool holds = true;
    u64 accepted = 0;
    u64 proposals = 0;
    u64 violations = 0;
};

inline constexpr u64 kMaxComparisonProposals = u64{1} << 34;

/// Draws at least `trials` points of S_L(xi) by rejection from the ordered
/// simplex and tests the comparison inequalities on each.
inline ComparisonCheck check_comparison_lemma(const SimplexSpec& spec, u64 trials, u64 seed, unsigned threads = 1,
                                              double rho = default_constants().rho) {
    spec.validate();
    if (xi_product(spec) > kComparisonHypothesis)
        throw DomainError("check_comparison_lemma: xi product exceeds 1.1");
    const auto key = Philox4x32::key_from_seed(seed);
    constexpr std::size_t kRound = 16;
    ComparisonCheck out;
    std::size_t next_chunk = 0;
    while (out.accepted < trials) {
        if (out.proposals >= kMaxComparisonProposals)
            throw ResourceError("check_comparison_lemma: acceptance too low for the requested trials");
        std::vector<u64> acc(kRound, 0), bad(kRound, 0);
        parallel_for_chunks(kRound, threads, [&](std::size_t r) {
            std::vector<double> point(spec.L);
            const u64 lo = (next_chunk + r) * detail::kSampleChunk;
            for (u64 i = lo; i < lo + detail::kSampleChunk; ++i) {
                detail::ordered_point(key, i, 1, point);
                if (!simplex_contains(point, spec)) continue;
                ++acc[r];
                bad[r] += !comparison_inequalities_hold(point, rho);
            }
        });
        for (std::size_t r = 0; r < kRound; ++r) {
            out.accepted += acc[r];
            out.violations += bad[r];
        }
        out.proposals += kRound * detail::kSampleChunk;
        next_chunk += kRound;
    }
    out.holds = out.violations == 0;
    return out;
}

inline constexpr u64 kRlSumMaxX = 100'000'000;

/// R_L^{(f)}(xi; x): sum of 1/f(n) over n <= x with Omega(n) <= L and the
/// renormalized vector (from the chosen offset) in S_L(xi).
inline double r_l_sum(Fn f, const SimplexSpec& spec, u64 x, Offset offset = Offset::from_p0, unsigned threads = 1) {
    spec.validate();
    if (x < 1) throw DomainError("r_l_sum: x must be >= 1");
    if (x > kRlSumMaxX) throw ResourceError("r_l_sum: x capped at 1e8");
    const double level = static_cast<double>(x);
    if (!(level > std::exp(1.0))) throw DomainError("r_l_sum: need x > e");
    const auto base = primes_up_to(isqrt(x));
    constexpr u64 kChunk = u64{1} << 16;
    const std::size_t chunks = static_cast<std::size_t>((x + kChunk - 1) / kChunk);
    std::vector<detail::CompensatedSum> partial(chunks);
    parallel_for_chunks(chunks, threads, [&](std::size_t c) {
        const u64 lo = 1 + c * kChunk, hi = std::min<u64>(x + 1, lo + kChunk);
        auto& acc = partial[c];
        for_each_factorization(lo, hi, base, [&](u64 n, const Factorization& fact) {
            if (fact.big_omega() > spec.L) return;
            const auto v = renormalize(fact, n, level, spec.L, offset);
            if (simplex_contains(v, spec)) acc.add(1.0 / static_cast<double>(apply(f, fact)));
        });
    });
    detail::CompensatedSum total;
    for (const auto& p : partial) {
        total.add(p.sum);
        total.add(p.comp);
    }
    return total.value();
}

}  // namespace phisigma
