#pragma once

// Membership conditions (0)-(8) of the preimage sets A_phi and A_sigma at a
// level x, and the census of values that have a preimage outside A_f.

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "phisigma/anatomy.hpp"
#include "phisigma/constants.hpp"
#include "phisigma/errors.hpp"
#include "phisigma/parallel.hpp"
#include "phisigma/sieve_core.hpp"
#include "phisigma/structure.hpp"
#include "phisigma/value_sets.hpp"

namespace phisigma {

struct AfOverrides {
    std::optional<double> S;
    std::optional<long> L;
};

/// Parameters at level x. The formula values are always reported; the
/// effective S and L used by the classifier may differ at desk scale, where
/// S_formula dwarfs x and the formula L is below 2.
struct AfParams {
    double x = 0;
    double epsilon = 0;
    IteratedLogs logs;

    /// (loglog x)^36 = log S_formula
    double log_S_formula = 0;
    /// exp((loglog x)^36); +inf once it leaves double range
    double S_formula = 0;
    double S = 0;
    bool S_overridden = false;

    double delta = 0;
    double omega = 0;

    long L0_formula = 0;
    long L_formula = 0;
    long L = 0;
    bool L_overridden = false;
    /// L0 used for xi: max(L0_formula, L)
    long L0_effective = 0;
    std::vector<double> xi;

    SimplexSpec spec() const { return SimplexSpec{static_cast<std::size_t>(L), xi}; }
};

inline constexpr double kDefaultEpsilon = 0.1;

/// Default S: min(S_formula, max(x^(1/10), e^e)).
inline double default_S_override(double x, double S_formula) {
    return std::min(S_formula, std::max(std::pow(x, 0.1), e_to_e()));
}

inline AfParams af_params(double x, double epsilon = kDefaultEpsilon, const AfOverrides& over = {},
                          const StructureConstants& k = default_constants()) {
    if (!(epsilon > 0 && epsilon <= 1)) throw DomainError("af_params: epsilon must lie in (0, 1]");
    if (!(x > e_to_e())) throw DomainError("af_params: need x > e^e ~ 15.154 so that log_3 x > 0");
    AfParams p;
    p.x = x;
    p.epsilon = epsilon;
    p.logs = IteratedLogs::of(x);
    const auto& t = p.logs;
    p.log_S_formula = std::pow(t.log2, 36.0);
    p.S_formula = std::exp(p.log_S_formula);
    p.delta = std::sqrt(36.0 * t.log3 / t.log2);
    p.omega = std::pow(t.log2, -0.5 + epsilon / 2);
    p.L0_formula = static_cast<long>(std::floor(2.0 * k.c_const * (t.log3 - t.log4)));
    p.L_formula = static_cast<long>(std::floor(static_cast<double>(p.L0_formula) - 2.0 * std::sqrt(t.log3)));

    if (over.S) {
        if (!(*over.S >= e_to_e())) throw DomainError("af_params: S override must be >= e^e ~ 15.154");
        p.S = *over.S;
        p.S_overridden = true;
    } else {
        p.S = default_S_override(x, p.S_formula);
        p.S_overridden = p.S != p.S_formula;
    }
    if (over.L) {
        if (*over.L < 2) throw DomainError("af_params: L override must be >= 2");
        p.L = *over.L;
        p.L_overridden = true;
    } else {
        p.L = std::max<long>(p.L_formula, 2);
        p.L_overridden = p.L != p.L_formula;
    }
    p.L0_effective = std::max(p.L0_formula, p.L);
    p.xi = SimplexSpec::xi_for(static_cast<std::size_t>(p.L), p.L0_effective).xi;
    return p;
}

/// S-normality flags for every prime up to a limit, built once and then
/// shared read-only.
class NormalityTable {
public:
    NormalityTable(u64 limit, double S, const FactorSieve& sieve, unsigned threads = 1)
        : limit_(limit), S_(S), bits_(limit / 64 + 1, 0) {
        if (limit + 2 > sieve.window_hi() || sieve.window_lo() > 2)
            throw RangeError("NormalityTable: sieve must cover [2, limit + 1]");
        constexpr u64 kChunk = u64{1} << 16;
        const std::size_t chunks = static_cast<std::size_t>(limit / kChunk + 1);
        parallel_for_chunks(chunks, threads, [&](std::size_t c) {
            // chunk boundaries are word aligned, so workers never share a word
            const u64 lo = std::max<u64>(2, c * kChunk), hi = std::min(limit + 1, (c + 1) * kChunk);
            for (u64 p = lo; p < hi; ++p)
                if (sieve.is_prime(p) && is_s_normal(p, S, sieve).normal()) bits_[p >> 6] |= u64{1} << (p & 63);
        });
    }

    u64 limit() const { return limit_; }
    double S() const { return S_; }

    bool is_normal(u64 p) const {
        if (p > limit_) throw RangeError("NormalityTable: prime beyond limit");
        return (bits_[p >> 6] >> (p & 63)) & 1;
    }

private:
    u64 limit_;
    double S_;
    std::vector<u64> bits_;
};

struct AfConditionsReport {
    u64 n = 0;
    Fn f = Fn::phi;
    /// false when f(n) > x; then no condition is evaluated
    bool applicable = false;
    u64 f_value = 0;
    std::array<bool, 9> cond{};
    bool member = false;
    std::array<std::string, 9> detail;
};

inline constexpr std::size_t kMaxUnitaryPrimes = 20;

namespace detail {

inline u64 squarefull_part(const Factorization& fact) {
    u64 m = 1;
    for (const auto& [p, e] : fact)
        if (e >= 2) m = checked_mul(m, checked_pow(p, e));
    return m;
}

inline unsigned odd_prime_count(const Factorization& fact) {
    unsigned c = 0;
    for (const auto& [p, e] : fact)
        if (p != 2) c += e;
    return c;
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

inline std::string vector_text(std::span<const double> v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s + ")";
}

// Omega(f(p^e)) via the sieve window.
inline unsigned omega_of_f_prime_power(Fn f, u64 p, unsigned e, const FactorSieve& sieve) {
    if (f == Fn::phi) return e - 1 + factor_shift(p - 1, sieve).big_omega();
    return factor_shift(sigma_of(Factorization{{p, e}}), sieve).big_omega();
}

}  // namespace detail

/// Evaluates all nine conditions. The sieve must cover n + 1 and f(n);
/// `normal` may supply precomputed S-normality for the primes of n.
inline AfConditionsReport classify(u64 n, Fn f, const AfParams& params, const FactorSieve& sieve,
                                   const NormalityTable* normal = nullptr) {
    if (n == 0) throw DomainError("classify: n must be >= 1");
    AfConditionsReport r;
    r.n = n;
    r.f = f;
    if (n > 1 && !sieve.contains(n)) throw ResourceError("classify: " + sieve.out_of_window(n));
    const Factorization fn = factorize(n, sieve);
    try {
        r.f_value = apply(f, fn);
    } catch (const OverflowError&) {
        r.f_value = ~u64{0};
    }
    if (!(static_cast<double>(r.f_value) <= params.x)) {
        r.detail[0] = "not applicable: f(n) = " + std::to_string(r.f_value) + " exceeds x";
        return r;
    }
    r.applicable = true;
    if (r.f_value > 1 && !sieve.contains(r.f_value)) throw ResourceError("classify: " + sieve.out_of_window(r.f_value));
    const Factorization ffn = factorize(r.f_value, sieve);
    const auto& t = params.logs;
    const double x = params.x;
    const double llx = t.log2;

    // (0)
    r.cond[0] = static_cast<double>(n) >= x / t.log1;
    r.detail[0] = "n = " + std::to_string(n) + ", x/log x = " + detail::fmt(x / t.log1);

    // (1)
    {
        const double cap = t.log1 * t.log1;
        const u64 qn = detail::squarefull_part(fn), qf = detail::squarefull_part(ffn);
        r.cond[1] = static_cast<double>(qn) <= cap && static_cast<double>(qf) <= cap;
        r.detail[1] = "squarefull parts: n -> " + std::to_string(qn) + ", f(n) -> " + std::to_string(qf) +
                      ", bound log^2 x = " + detail::fmt(cap);
    }

    // (2)
    {
        r.cond[2] = true;
        r.detail[2] = "all primes of n are S-normal, S = " + detail::fmt(params.S);
        for (const auto& pp : fn) {
            const bool ok = normal && pp.prime <= normal->limit() ? normal->is_normal(pp.prime)
                                                                   : is_s_normal(pp.prime, params.S, sieve).normal();
            if (!ok) {
                r.cond[2] = false;
                r.detail[2] = "prime " + std::to_string(pp.prime) + " is not S-normal, S = " + detail::fmt(params.S);
                break;
            }
        }
    }

    // (3)
    {
        const double cap = 10.0 * llx;
        const unsigned on = fn.big_omega(), of = ffn.big_omega();
        r.cond[3] = of <= cap && on <= cap;
        r.detail[3] = "Omega(n) = " + std::to_string(on) + ", Omega(f(n)) = " + std::to_string(of) +
                      ", bound 10 loglog x = " + detail::fmt(cap);
    }

    // (4)
    {
        const std::size_t k = fn.size();
        if (k > kMaxUnitaryPrimes) throw ResourceError("classify: more than 2^20 unitary divisors");
        const double dmin = std::exp(std::sqrt(llx));
        std::array<unsigned, Factorization::kCapacity> omega_fp{};
        std::array<u64, Factorization::kCapacity> pe{}, fpe{};
        for (std::size_t i = 0; i < k; ++i) {
            pe[i] = detail::checked_pow(fn[i].prime, fn[i].exponent);
            fpe[i] = apply(f, Factorization{fn[i]});
            omega_fp[i] = detail::omega_of_f_prime_power(f, fn[i].prime, fn[i].exponent, sieve);
        }
        r.cond[4] = true;
        r.detail[4] = "every unitary divisor d >= " + detail::fmt(dmin) + " has Omega(f(d)) <= 10 loglog f(d)";
        for (u64 mask = 1; mask < (u64{1} << k); ++mask) {
            u64 d = 1, fd = 1;
            unsigned om = 0;
            for (std::size_t i = 0; i < k; ++i)
                if (mask >> i & 1) {
                    d *= pe[i];
                    fd *= fpe[i];
                    om += omega_fp[i];
                }
            if (static_cast<double>(d) < dmin) continue;
            const double bound = 10.0 * loglog(static_cast<double>(fd));
            if (!(om <= bound)) {
                r.cond[4] = false;
                r.detail[4] = "unitary divisor d = " + std::to_string(d) + ": Omega(f(d)) = " + std::to_string(om) +
                              " > 10 loglog f(d) = " + detail::fmt(bound);
                break;
            }
        }
    }

    // (5), (8): vector (x_1, ..., x_L)
    const SimplexSpec spec = params.spec();
    const auto v = renormalize(fn, n, x, spec.L, Offset::from_p1);
    {
        r.cond[5] = simplex_contains(v, spec);
        r.detail[5] = "x-vector " + detail::vector_text(v.entries);
    }
    {
        const double sum = detail::weighted_tail(v.entries, 0, spec.L);
        r.cond[8] = sum <= 1.0 - params.omega;
        r.detail[8] = "sum a_i x_i = " + detail::fmt(sum) + ", bound 1 - omega = " + detail::fmt(1.0 - params.omega);
    }

    // (6)
    {
        const unsigned odd = detail::odd_prime_count(fn);
        r.cond[6] = odd >= static_cast<unsigned>(params.L + 1);
        r.detail[6] = "odd prime factors (with multiplicity) = " + std::to_string(odd) +
                      ", need L + 1 = " + std::to_string(params.L + 1);
    }

    // (7)
    if (fn.big_omega() < 2) {
        r.cond[7] = false;
        r.detail[7] = "p_1(n) does not exist (Omega(n) <= 1)";
    } else {
        const u64 p0 = fn.back().prime;
        const u64 p1 = fn.back().exponent >= 2 ? p0 : fn[fn.size() - 2].prime;
        const u64 fp0 = f == Fn::phi ? p0 - 1 : p0 + 1;
        const u64 pplus = largest_prime_factor(detail::factor_shift(fp0, sieve));
        const double lo_pplus = t.log1 / llx, hi_p1 = t.log1 / (100.0 * llx);
        const bool a = std::log(static_cast<double>(pplus)) >= lo_pplus;
        const bool b = std::log(static_cast<double>(p1)) < hi_p1;
        r.cond[7] = a && b;
        r.detail[7] = "P+(f(p_0)) = " + std::to_string(pplus) + " vs x^(1/loglog x) = " + detail::fmt(std::exp(lo_pplus)) +
                      "; p_1 = " + std::to_string(p1) + " vs x^(1/(100 loglog x)) = " + detail::fmt(std::exp(hi_p1));
    }

    r.member = true;
    for (const bool c : r.cond) r.member = r.member && c;
    return r;
}

struct CaptureCensus {
    Fn f = Fn::phi;
    u64 x = 0;
    AfParams params;
    u64 preimages_scanned = 0;
    u64 total_values = 0;
    u64 values_with_outside_preimage = 0;
    double fraction = 0;
};

inline constexpr u64 kCaptureMaxX = 10'000'000;

/// Scans every preimage n with f(n) <= x, classifies it, and counts values
/// that have at least one preimage outside A_f.
inline CaptureCensus capture_census(Fn f, u64 x, double epsilon = kDefaultEpsilon, const AfOverrides& over = {},
                                    unsigned threads = 1) {
    if (x > kCaptureMaxX) throw ResourceError("capture_census: x capped at 1e7");
    CaptureCensus c;
    c.f = f;
    c.x = x;
    c.params = af_params(static_cast<double>(x), epsilon, over);
    const u64 top = f == Fn::phi ? phi_preimage_bound(x) : x;
    require_memory((top + 2) * 4 + x / 4 + top / 8, "capture census");
    const FactorSieve sieve(2, top + 2);
    const NormalityTable normal(top, c.params.S, sieve, threads);
    ValueBitmap all(f, x), outside(f, x);
    constexpr u64 kChunk = u64{1} << 16;
    const std::size_t chunks = static_cast<std::size_t>(top / kChunk + 1);
    std::vector<u64> scanned(chunks, 0);
    parallel_for_chunks(chunks, threads, [&](std::size_t ci) {
        const u64 lo = std::max<u64>(1, ci * kChunk), hi = std::min(top + 1, (ci + 1) * kChunk);
        u64 k = 0;
        for (u64 n = lo; n < hi; ++n) {
            const auto rep = classify(n, f, c.params, sieve, &normal);
            if (!rep.applicable) continue;
            ++k;
            all.set_concurrent(rep.f_value);
            if (!rep.member) outside.set_concurrent(rep.f_value);
        }
        scanned[ci] = k;
    });
    for (const u64 k : scanned) c.preimages_scanned += k;
    c.total_values = count_values(all, x);
    c.values_with_outside_preimage = count_values(outside, x);
    c.fraction = c.total_values ? static_cast<double>(c.values_with_outside_preimage) / static_cast<double>(c.total_values) : 0;
    return c;
}

}  // namespace phisigma
