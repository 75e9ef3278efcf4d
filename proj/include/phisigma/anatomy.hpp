#pragma once

// Prime-factor anatomy: Omega over ranges, largest prime factors, S-normal
// primes, smooth-number counts and the tail censuses.
//
// Throughout, loglog(t) = log(log t) is the doubly iterated natural log.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "phisigma/constants.hpp"
#include "phisigma/errors.hpp"
#include "phisigma/parallel.hpp"
#include "phisigma/sieve_core.hpp"

namespace phisigma {

/// Omega(n, U, T): prime factors p of n with U < p <= T, with multiplicity.
inline unsigned big_omega_range(const Factorization& fact, double U, double T) {
    if (!(U < T)) return 0;
    unsigned total = 0;
    for (const auto& [p, e] : fact) {
        const double q = static_cast<double>(p);
        if (q > U && q <= T) total += e;
    }
    return total;
}

/// P+(n), with P+(1) = 1.
inline u64 largest_prime_factor(const Factorization& fact) { return fact.empty() ? 1 : fact.back().prime; }

inline double loglog(double t) { return std::log(std::log(t)); }

inline double e_to_e() { return std::exp(std::exp(1.0)); }

struct WindowReport {
    double U = 0;
    double T = 0;
    unsigned observed = 0;
    double expected = 0;
    /// |observed - expected| - sqrt(loglog S * loglog T); >= 0 is a violation
    double margin = 0;
    Fn f = Fn::phi;
};

struct NormalityReport {
    u64 p = 0;
    double S = 0;
    bool passed_1S_phi = false;
    bool passed_1S_sigma = false;
    bool passed_window_phi = false;
    bool passed_window_sigma = false;
    /// window with the largest margin over both shifts; absent when every
    /// window condition was vacuous
    std::optional<WindowReport> worst_window;

    bool passed(Fn f) const {
        return f == Fn::phi ? passed_1S_phi && passed_window_phi : passed_1S_sigma && passed_window_sigma;
    }
    bool normal() const { return passed(Fn::phi) && passed(Fn::sigma); }
    double worst_margin() const {
        return worst_window ? worst_window->margin : std::numeric_limits<double>::quiet_NaN();
    }
};

namespace detail {

// A point t or the left limit t- on the real line.
struct Location {
    double at = 0;
    bool left_limit = false;
};

inline bool window_valid(const Location& u, const Location& t) {
    return u.at < t.at || (u.at == t.at && u.left_limit && !t.left_limit);
}

// Omega over (u, t] where either end may be a left limit.
inline unsigned omega_between(const Factorization& fact, const Location& u, const Location& t) {
    unsigned total = 0;
    for (const auto& [p, e] : fact) {
        const double q = static_cast<double>(p);
        const bool above = u.left_limit ? q >= u.at : q > u.at;
        const bool below = t.left_limit ? q < t.at : q <= t.at;
        if (above && below) total += e;
    }
    return total;
}

// The window margin is a step function plus a term continuous and monotone
// between consecutive prime locations, so its supremum over S <= U < T <= m
// is reached at S, m, a prime q, or the left limit at q.
inline std::optional<WindowReport> worst_window_for(const Factorization& fact, u64 m, double S, Fn f) {
    const double top = static_cast<double>(m);
    if (!(top > S)) return std::nullopt;
    std::vector<Location> us{{S, false}}, ts{{top, false}, {top, true}};
    for (const auto& pp : fact) {
        const double q = static_cast<double>(pp.prime);
        if (q <= S) continue;
        us.push_back({q, false});
        us.push_back({q, true});
        ts.push_back({q, false});
        ts.push_back({q, true});
    }
    const double lls = loglog(S);
    std::optional<WindowReport> worst;
    for (const auto& u : us)
        for (const auto& t : ts) {
            if (!window_valid(u, t)) continue;
            const unsigned obs = omega_between(fact, u, t);
            const double expected = loglog(t.at) - loglog(u.at);
            const double margin = std::abs(obs - expected) - std::sqrt(lls * loglog(t.at));
            if (!worst || margin > worst->margin) worst = WindowReport{u.at, t.at, obs, expected, margin, f};
        }
    return worst;
}

inline void check_normality_S(double S) {
    if (!(S >= e_to_e())) throw DomainError("S must be >= e^e ~ 15.154 so that loglog S >= 1");
}

inline Factorization factor_shift(u64 m, const FactorSieve& sieve) {
    if (m > 1 && !sieve.contains(m)) throw RangeError(sieve.out_of_window(m));
    return factorize(m, sieve);
}

}  // namespace detail

/// Tests (1S) and the window condition for f(p) = p - 1 and f(p) = p + 1.
/// The window test is exact: the critical windows are enumerated, and a
/// margin of exactly zero (reachable only as a limit) counts as a violation.
inline NormalityReport is_s_normal(u64 p, double S, const FactorSieve& sieve) {
    detail::check_normality_S(S);
    if (!sieve.contains(p) || !sieve.is_prime(p)) {
        if (!sieve.contains(p)) throw RangeError(sieve.out_of_window(p));
        throw DomainError("is_s_normal: " + std::to_string(p) + " is not prime");
    }
    NormalityReport r;
    r.p = p;
    r.S = S;
    const double bound_1s = 2.0 * loglog(S);
    for (const Fn f : {Fn::phi, Fn::sigma}) {
        const u64 m = f == Fn::phi ? p - 1 : p + 1;
        const Factorization fm = detail::factor_shift(m, sieve);
        const bool ok_1s = big_omega_range(fm, 1.0, S) <= bound_1s;
        const auto worst = detail::worst_window_for(fm, m, S, f);
        const bool ok_window = !worst || worst->margin < 0;
        (f == Fn::phi ? r.passed_1S_phi : r.passed_1S_sigma) = ok_1s;
        (f == Fn::phi ? r.passed_window_phi : r.passed_window_sigma) = ok_window;
        if (worst && (!r.worst_window || worst->margin > r.worst_window->margin)) r.worst_window = worst;
    }
    return r;
}

/// loglog P+(f(p)) >= loglog p - log_3 x - log 4, for one shift.
inline bool pplus_inequality(u64 p, const Factorization& fp, double x) {
    const double lhs = loglog(static_cast<double>(largest_prime_factor(fp)));
    const double rhs = loglog(static_cast<double>(p)) - std::log(loglog(x)) - std::log(4.0);
    return lhs >= rhs;
}

/// The lower bound for P+(f(p)) of an S-normal prime, for both shifts.
inline bool check_pplus_lower(u64 p, double S, double x, const FactorSieve& sieve) {
    detail::check_normality_S(S);
    if (p < 5 || !(static_cast<double>(p) <= x))
        throw DomainError("check_pplus_lower: need 5 <= p <= x");
    if (!(static_cast<double>(p - 1) >= S)) throw DomainError("check_pplus_lower: need f(p) >= S for both shifts");
    if (!is_s_normal(p, S, sieve).normal()) throw DomainError("check_pplus_lower: p is not S-normal");
    return pplus_inequality(p, detail::factor_shift(p - 1, sieve), x) &&
           pplus_inequality(p, detail::factor_shift(p + 1, sieve), x);
}

struct SmoothCount {
    u64 x = 0;
    u64 y = 0;
    u64 psi_exact = 0;
    double u = 0;
    double cep_estimate = 0;
};

inline constexpr u64 kPsiMaxX = 100'000'000;

namespace detail {

inline void check_psi_args(u64 x, u64 y, const char* what) {
    if (x < 1) throw DomainError(std::string(what) + ": x must be >= 1");
    if (y < 2) throw DomainError(std::string(what) + ": y must be >= 2");
    if (x > kPsiMaxX) throw ResourceError(std::string(what) + ": x capped at 1e8");
}

// Calls mark(n) for every y-smooth n in [2, x]. Dividing out the primes up
// to min(y, sqrt) leaves a remainder r that is <= y exactly when n is smooth.
template <class Mark>
void scan_smooth(u64 x, u64 y, Mark&& mark, std::size_t block = std::size_t{1} << 16) {
    const auto base = primes_up_to(std::min(y, isqrt(x)));
    std::vector<std::uint32_t> rem(block);
    for (u64 lo = 2; lo <= x; lo += block) {
        const u64 hi = std::min<u64>(x + 1, lo + block);
        for (u64 n = lo; n < hi; ++n) rem[n - lo] = static_cast<std::uint32_t>(n);
        for (const u64 p : base) {
            if (p * p >= hi) break;
            for (u64 m = (lo + p - 1) / p * p; m < hi; m += p) {
                auto& r = rem[m - lo];
                do r /= static_cast<std::uint32_t>(p);
                while (r % p == 0);
            }
        }
        for (u64 n = lo; n < hi; ++n)
            if (rem[n - lo] <= y) mark(n);
    }
}

}  // namespace detail

/// psi[k] = Psi(k, y) for k in [0, x_max].
inline std::vector<u64> psi_smooth_table(u64 x_max, u64 y) {
    detail::check_psi_args(std::max<u64>(x_max, 1), y, "psi_smooth_table");
    require_memory((x_max + 1) * sizeof(u64), "psi table");
    std::vector<u64> psi(x_max + 1, 0);
    if (x_max >= 1) psi[1] = 1;
    detail::scan_smooth(x_max, y, [&](u64 n) { psi[n] = 1; });
    for (u64 k = 2; k <= x_max; ++k) psi[k] += psi[k - 1];
    return psi;
}

/// Psi(x, y) exactly, with the x u^{-u} comparator.
inline SmoothCount psi_smooth_count(u64 x, u64 y) {
    detail::check_psi_args(x, y, "psi_smooth_count");
    SmoothCount s;
    s.x = x;
    s.y = y;
    if (y >= x) {
        s.psi_exact = x;
    } else {
        u64 count = 1;
        detail::scan_smooth(x, y, [&](u64) { ++count; });
        s.psi_exact = count;
    }
    s.u = std::log(static_cast<double>(x)) / std::log(static_cast<double>(y));
    s.cep_estimate = static_cast<double>(x) * std::pow(s.u, -s.u);
    return s;
}

struct OmegaCensus {
    u64 x = 0;
    double alpha = 0;
    /// alpha * loglog x
    double threshold = 0;
    u64 observed = 0;
    double bound_shape = 0;
    double ratio = 0;
};

/// Omega(n) for every n in [lo, hi), lo >= 1.
inline std::vector<std::uint8_t> big_omega_block(u64 lo, u64 hi, std::span<const u64> base) {
    std::vector<std::uint8_t> omega(hi - lo, 0);
    std::vector<u64> rem(hi - lo);
    for (u64 n = lo; n < hi; ++n) rem[n - lo] = n;
    for (const u64 p : base) {
        if (p * p >= hi) break;
        for (u64 m = (lo + p - 1) / p * p; m < hi; m += p) {
            auto& r = rem[m - lo];
            do {
                r /= p;
                ++omega[m - lo];
            } while (r % p == 0);
        }
    }
    for (u64 n = lo; n < hi; ++n)
        if (rem[n - lo] > 1) ++omega[n - lo];
    return omega;
}

/// Counts n <= x with Omega(n) >= alpha loglog x and compares with the
/// bound's shape, whose constant factor is unknown.
inline OmegaCensus omega_tail_census(u64 x, double alpha, unsigned threads = 1) {
    if (!(alpha > 1)) throw DomainError("omega_tail_census: alpha must exceed 1");
    if (!(static_cast<double>(x) >= e_to_e())) throw DomainError("omega_tail_census: need x >= e^e");
    if (x > kMaxInput / 100) throw ResourceError("omega_tail_census: x capped at 1e10");
    OmegaCensus c;
    c.x = x;
    c.alpha = alpha;
    const double lx = std::log(static_cast<double>(x)), llx = std::log(lx);
    c.threshold = alpha * llx;
    const auto base = primes_up_to(isqrt(x));
    constexpr u64 kChunk = u64{1} << 16;
    const std::size_t chunks = static_cast<std::size_t>((x + kChunk - 1) / kChunk);
    std::vector<u64> counts(chunks, 0);
    parallel_for_chunks(chunks, threads, [&](std::size_t ci) {
        const u64 lo = 1 + ci * kChunk, hi = std::min<u64>(x + 1, lo + kChunk);
        const auto omega = big_omega_block(lo, hi, base);
        u64 k = 0;
        for (const auto w : omega) k += w >= c.threshold;
        counts[ci] = k;
    });
    for (const u64 k : counts) c.observed += k;
    c.bound_shape = alpha < 2 ? static_cast<double>(x) * std::pow(lx, -q_function(alpha))
                              : static_cast<double>(x) * std::pow(lx, 1.0 - alpha * std::log(2.0)) * llx;
    c.ratio = static_cast<double>(c.observed) / c.bound_shape;
    return c;
}

/// e^{(1 - Q(alpha)) z} = (e / alpha)^{alpha z}.
inline double poisson_tail_bound(double z, double alpha) {
    if (!(z > 0)) throw DomainError("poisson_tail_bound: z must be positive");
    if (!(alpha > 0 && alpha < 1)) throw DomainError("poisson_tail_bound: alpha must lie in (0, 1)");
    return std::exp((1.0 - q_function(alpha)) * z);
}

/// Checks sum_{k <= alpha z} z^k / k! < e^{(1 - Q(alpha)) z}, comparing logs.
inline bool check_poisson_tail(double z, double alpha) {
    poisson_tail_bound(z, alpha);  // argument checks
    const auto kmax = static_cast<long>(std::floor(alpha * z));
    const double lz = std::log(z);
    double peak = -std::numeric_limits<double>::infinity();
    std::vector<double> logs;
    for (long k = 0; k <= kmax; ++k) {
        logs.push_back(k * lz - std::lgamma(k + 1.0));
        peak = std::max(peak, logs.back());
    }
    double acc = 0;
    for (const double l : logs) acc += std::exp(l - peak);
    return peak + std::log(acc) < (1.0 - q_function(alpha)) * z;
}

struct LinearForm {
    std::int64_t a = 1;
    std::int64_t b = 0;
};

struct SieveCensus {
    u64 x = 0;
    u64 observed = 0;
    /// log |E|
    double log_abs_E = 0;
    double shape = 0;
    double ratio = 0;
};

inline constexpr u64 kSieveCensusMaxX = 100'000'000;

/// Counts n <= x with every a_i n + b_i prime and compares with
/// x (loglog(|E| + 2))^h / (log x)^h.
inline SieveCensus sieve_bound_census(const std::vector<LinearForm>& forms, u64 x) {
    const std::size_t h = forms.size();
    if (h < 1 || h > 4) throw DomainError("sieve_bound_census: need 1 to 4 forms");
    if (x < 3) throw DomainError("sieve_bound_census: need x >= 3");
    if (x > kSieveCensusMaxX) throw ResourceError("sieve_bound_census: x capped at 1e8");
    using i128 = __int128;
    double log_e = 0;
    i128 top = 0;
    for (std::size_t i = 0; i < h; ++i) {
        const auto [a, b] = forms[i];
        if (a < 1) throw DomainError("sieve_bound_census: coefficients a_i must be >= 1");
        log_e += std::log(static_cast<double>(a));
        top = std::max(top, static_cast<i128>(a) * x + b);
        for (std::size_t j = i + 1; j < h; ++j) {
            const i128 d = static_cast<i128>(a) * forms[j].b - static_cast<i128>(forms[j].a) * b;
            if (d == 0) throw DomainError("sieve_bound_census: degenerate forms (E = 0)");
            log_e += std::log(std::abs(static_cast<double>(d)));
        }
    }
    if (top > static_cast<i128>(kMaxInput)) throw ResourceError("sieve_bound_census: form values exceed 1e12");
    const PrimeFlags flags(top < 2 ? 2 : static_cast<u64>(top));
    SieveCensus c;
    c.x = x;
    for (u64 n = 1; n <= x; ++n) {
        bool all = true;
        for (const auto& [a, b] : forms) {
            const i128 v = static_cast<i128>(a) * n + b;
            if (v < 2 || !flags.is_prime(static_cast<u64>(v))) {
                all = false;
                break;
            }
        }
        c.observed += all;
    }
    c.log_abs_E = log_e;
    // log(|E| + 2) without overflow for huge |E|
    const double log_e2 = log_e < 30 ? std::log(std::exp(log_e) + 2.0) : log_e;
    const double hh = static_cast<double>(h);
    c.shape = static_cast<double>(x) * std::pow(std::log(log_e2), hh) / std::pow(std::log(static_cast<double>(x)), hh);
    c.ratio = static_cast<double>(c.observed) / c.shape;
    return c;
}

}  // namespace phisigma
