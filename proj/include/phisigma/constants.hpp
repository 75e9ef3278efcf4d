#pragma once

// The power series F(z) = sum a_n z^n with a_n = (n+1)log(n+1) - n log n - 1,
// its root rho of F = 1, and the constants and predictor functions built on
// them. All logarithms are natural; log_k is the k-fold iterate.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "phisigma/errors.hpp"

namespace phisigma {

/// a_n, written as n*log1p(1/n) + log(n+1) - 1 to avoid cancellation.
inline double series_coefficient(std::uint64_t n) {
    if (n == 0) throw DomainError("series_coefficient: n must be >= 1");
    const double d = static_cast<double>(n);
    return d * std::log1p(1.0 / d) + std::log1p(d) - 1.0;
}

struct SeriesValue {
    double value = 0;
    /// certified bound on |value - exact| from truncation (rounding excluded)
    double tail_bound = 0;
    std::uint64_t terms = 0;
};

namespace detail {

inline void check_unit_interval(double z, double tol, const char* what) {
    if (!(z > 0.0 && z < 1.0)) throw DomainError(std::string(what) + ": z must lie in (0, 1)");
    if (!(tol > 0.0)) throw DomainError(std::string(what) + ": tol must be positive");
}

// Neumaier compensated accumulator.
struct CompensatedSum {
    double sum = 0, comp = 0;
    void add(double v) {
        const double t = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

// Tail majorants beyond term N. For n > N,
//   a_n <= 1 + log(n+1) <= c + (n-N)/(N+1),   c = 1 + log(N+1),
// and with k = n - N the remaining sums have closed forms.
inline double f_tail_majorant(double z, double N) {
    const double c = 1.0 + std::log(N + 1.0);
    const double zN = std::pow(z, N), q = 1.0 - z;
    return zN * (c * z / q + z / (q * q) / (N + 1.0));
}

inline double fprime_tail_majorant(double z, double N) {
    const double c = 1.0 + std::log(N + 1.0);
    const double q = 1.0 - z;
    // sum_{n>N} n z^(n-1)
    const double s0 = ((N + 1.0) * std::pow(z, N) * q + std::pow(z, N + 1.0)) / (q * q);
    // sum_{n>N} n (n-N) z^(n-1) = z^(N-1) * (sum k^2 z^k + N sum k z^k)
    const double s1 = std::pow(z, N - 1.0) * (z * (1.0 + z) / (q * q * q) + N * z / (q * q));
    return c * s0 + s1 / (N + 1.0);
}

constexpr double kTailSafety = 4.0;

template <class Term, class Tail>
SeriesValue certified_series(double tol, Term&& term, Tail&& tail) {
    std::uint64_t N = 16;
    while (kTailSafety * tail(static_cast<double>(N)) >= tol / 4) {
        N *= 2;
        if (N > (std::uint64_t{1} << 40)) throw DomainError("series does not converge to tolerance");
    }
    CompensatedSum acc;
    // smallest terms first
    for (std::uint64_t n = N; n >= 1; --n) acc.add(term(n));
    return {acc.value(), kTailSafety * tail(static_cast<double>(N)), N};
}

}  // namespace detail

inline SeriesValue eval_F_certified(double z, double tol) {
    detail::check_unit_interval(z, tol, "eval_F");
    return detail::certified_series(
        tol, [z](std::uint64_t n) { return series_coefficient(n) * std::pow(z, static_cast<double>(n)); },
        [z](double N) { return detail::f_tail_majorant(z, N); });
}

inline SeriesValue eval_F_prime_certified(double z, double tol) {
    detail::check_unit_interval(z, tol, "eval_F_prime");
    return detail::certified_series(
        tol,
        [z](std::uint64_t n) {
            return static_cast<double>(n) * series_coefficient(n) * std::pow(z, static_cast<double>(n - 1));
        },
        [z](double N) { return detail::fprime_tail_majorant(z, N); });
}

inline double eval_F(double z, double tol) { return eval_F_certified(z, tol).value; }
inline double eval_F_prime(double z, double tol) { return eval_F_prime_certified(z, tol).value; }

inline constexpr double kRhoBracketLo = 0.5;
inline constexpr double kRhoBracketHi = 0.6;

/// Root of F(rho) = 1 by bisection on [0.5, 0.6]; F is strictly increasing.
inline double solve_rho(double tol) {
    if (!(tol >= 1e-15)) throw DomainError("solve_rho: tol below double-precision floor 1e-15");
    const double ftol = 1e-17;
    double lo = kRhoBracketLo, hi = kRhoBracketHi;
    if (!(eval_F(lo, ftol) < 1.0 && eval_F(hi, ftol) > 1.0)) throw DomainError("solve_rho: bracket does not straddle the root");
    // bisect all the way down to adjacent doubles; tol only bounds the contract
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (eval_F(mid, ftol) < 1.0 ? lo : hi) = mid;
    }
    const double flo = std::abs(eval_F(lo, ftol) - 1.0), fhi = std::abs(eval_F(hi, ftol) - 1.0);
    return flo <= fhi ? lo : hi;
}

struct StructureConstants {
    double rho = 0;
    double f_prime_at_rho = 0;
    double c_const = 0;
    double d_const = 0;
    /// absolute error bound shared by all four fields
    double tol = 0;
};

inline double c_from_rho(double rho) { return 1.0 / (2.0 * std::abs(std::log(rho))); }

inline double d_from(double c, double f_prime) {
    return 2.0 * c * (1.0 + std::log(f_prime) - std::log(2.0 * c)) - 1.5;
}

inline StructureConstants structure_constants(double tol = 1e-15) {
    const double rho = solve_rho(tol);
    const double ftol = 1e-17;
    StructureConstants k;
    k.rho = rho;
    k.f_prime_at_rho = eval_F_prime(rho, ftol);
    k.c_const = c_from_rho(rho);
    k.d_const = d_from(k.c_const, k.f_prime_at_rho);
    // propagate the root uncertainty through every derived field
    double spread = tol * k.f_prime_at_rho;
    for (const double r : {rho - tol, rho + tol}) {
        const double fp = eval_F_prime(r, ftol);
        const double c = c_from_rho(r);
        spread = std::max({spread, std::abs(fp - k.f_prime_at_rho), std::abs(c - k.c_const),
                           std::abs(d_from(c, fp) - k.d_const)});
    }
    k.tol = 2.0 * spread;
    return k;
}

/// Process-wide constants at the double-precision floor.
inline const StructureConstants& default_constants() {
    static const StructureConstants k = structure_constants(1e-15);
    return k;
}

/// Q(lambda) = lambda log lambda - lambda + 1.
inline double q_function(double lambda) {
    if (!(lambda > 0)) throw DomainError("q_function: lambda must be positive");
    return lambda * std::log(lambda) - lambda + 1.0;
}

/// Iterated natural logs of a level x. Can be seeded at log_3 for levels
/// far beyond double range. Undefined iterates are NaN.
struct IteratedLogs {
    double x = 0;
    double log1 = 0;
    double log2 = 0;
    double log3 = 0;
    double log4 = 0;

    static double safe_log(double v) {
        return v > 0 ? std::log(v) : (v == 0 ? -std::numeric_limits<double>::infinity()
                                               : std::numeric_limits<double>::quiet_NaN());
    }

    static IteratedLogs of(double x) {
        IteratedLogs t;
        t.x = x;
        t.log1 = safe_log(x);
        t.log2 = safe_log(t.log1);
        t.log3 = safe_log(t.log2);
        t.log4 = safe_log(t.log3);
        return t;
    }

    static IteratedLogs from_log3(double log3) {
        IteratedLogs t;
        t.log3 = log3;
        t.log4 = safe_log(log3);
        t.log2 = std::exp(log3);
        t.log1 = std::exp(t.log2);
        t.x = std::exp(t.log1);
        return t;
    }
};

/// e^(e^e): the smallest level with log_4 x > 0.
inline double log4_threshold() { return std::exp(std::exp(std::exp(1.0))); }

inline double y_predictor(const IteratedLogs& t, const StructureConstants& k) {
    if (!(t.log4 > 0))
        throw DomainError("y_predictor: need log_4 x > 0, i.e. x > e^(e^e) ~ 3.8147e6");
    const double C = k.c_const, D = k.d_const;
    const double gap = t.log3 - t.log4;
    return std::exp(C * gap * gap + D * t.log3 - (D + 0.5 - 2.0 * C) * t.log4);
}

inline double y_predictor(double x, const StructureConstants& k) { return y_predictor(IteratedLogs::of(x), k); }

/// L_0(x) = floor(2C(log_3 x - log_4 x)).
inline long l0_of(const IteratedLogs& t, const StructureConstants& k) {
    if (!(t.log4 > 0)) throw DomainError("l0_of: need log_3 x > 1, i.e. x > e^(e^e) ~ 3.8147e6");
    return static_cast<long>(std::floor(2.0 * k.c_const * (t.log3 - t.log4)));
}

inline long l0_of(double x, const StructureConstants& k) { return l0_of(IteratedLogs::of(x), k); }

}  // namespace phisigma
