#pragma once

// Segmented sieving primitives: prime lists, smallest-prime-factor windows,
// and block evaluation of Euler's phi and the sum-of-divisors sigma.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "phisigma/errors.hpp"

namespace phisigma {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

/// Largest integer any sieve window may reach. sigma(n) < 2^64 well past it.
inline constexpr u64 kMaxInput = 1'000'000'000'000ULL;
inline constexpr std::size_t kDefaultSegment = std::size_t{1} << 22;

enum class Fn { phi, sigma };
enum class Which { phi, sigma, both };

inline const char* to_string(Fn f) { return f == Fn::phi ? "phi" : "sigma"; }

inline u64 isqrt(u64 n) {
    u64 r = static_cast<u64>(std::sqrt(static_cast<double>(n)));
    while (r > 0 && static_cast<u128>(r) * r > n) --r;
    while (static_cast<u128>(r + 1) * (r + 1) <= n) ++r;
    return r;
}

/// Primality flags for [0, limit], one bit per odd number.
class PrimeFlags {
public:
    explicit PrimeFlags(u64 limit) : limit_(limit) {
        if (limit > kMaxInput) throw ResourceError("PrimeFlags: limit exceeds 1e12");
        require_memory(limit / 16 + 8, "prime flags");
        const u64 odd_count = limit / 2 + 1;  // bit i stands for 2i+1
        composite_.assign((odd_count + 63) / 64, 0);
        composite_[0] |= 1;  // 1 is not prime
        for (u64 i = 1; (2 * i + 1) * (2 * i + 1) <= limit; ++i) {
            if (bit(i)) continue;
            const u64 p = 2 * i + 1;
            for (u64 j = (p * p) / 2; j < odd_count; j += p) composite_[j >> 6] |= std::uint64_t{1} << (j & 63);
        }
    }

    u64 limit() const { return limit_; }

    bool is_prime(u64 n) const {
        if (n > limit_) throw RangeError("PrimeFlags: query beyond limit");
        if (n < 3) return n == 2;
        return (n & 1) && !bit(n / 2);
    }

private:
    bool bit(u64 i) const { return (composite_[i >> 6] >> (i & 63)) & 1; }
    u64 limit_;
    std::vector<std::uint64_t> composite_;
};

/// All primes <= limit in ascending order.
inline std::vector<u64> primes_up_to(u64 limit) {
    if (limit < 2) return {};
    const double approx_count = 1.3 * static_cast<double>(limit) / std::log(static_cast<double>(limit)) + 16;
    require_memory(limit / 16 + static_cast<u64>(approx_count) * sizeof(u64), "primes_up_to");
    const PrimeFlags flags(limit);
    std::vector<u64> primes;
    primes.reserve(static_cast<std::size_t>(approx_count));
    primes.push_back(2);
    for (u64 n = 3; n <= limit; n += 2)
        if (flags.is_prime(n)) primes.push_back(n);
    return primes;
}

struct PrimePower {
    u64 prime = 0;
    unsigned exponent = 0;
    friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

/// Prime factorization with strictly increasing primes. Stored inline: no
/// 64-bit integer has more than 15 distinct prime factors.
class Factorization {
public:
    static constexpr std::size_t kCapacity = 15;

    Factorization() = default;
    Factorization(std::initializer_list<PrimePower> pairs) {
        for (const auto& pp : pairs) push(pp.prime, pp.exponent);
    }

    void push(u64 prime, unsigned exponent) {
        if (size_ == kCapacity) throw OverflowError("factorization: too many distinct primes");
        pairs_[size_++] = {prime, exponent};
    }

    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }
    const PrimePower& operator[](std::size_t i) const { return pairs_[i]; }
    const PrimePower* begin() const { return pairs_.data(); }
    const PrimePower* end() const { return pairs_.data() + size_; }
    const PrimePower& back() const { return pairs_[size_ - 1]; }

    unsigned big_omega() const {
        unsigned total = 0;
        for (const auto& pp : *this) total += pp.exponent;
        return total;
    }

    u64 value() const {
        u128 v = 1;
        for (const auto& pp : *this)
            for (unsigned e = 0; e < pp.exponent; ++e) {
                v *= pp.prime;
                if (v > ~u64{0}) throw OverflowError("factorization value exceeds 64 bits");
            }
        return static_cast<u64>(v);
    }

    friend bool operator==(const Factorization& a, const Factorization& b) {
        return std::equal(a.begin(), a.end(), b.begin(), b.end());
    }

private:
    std::array<PrimePower, kCapacity> pairs_{};
    std::size_t size_ = 0;
};

namespace detail {
inline u64 checked_mul(u64 a, u64 b) {
    const u128 r = static_cast<u128>(a) * b;
    if (r > ~u64{0}) throw OverflowError("arithmetic value exceeds 64 bits");
    return static_cast<u64>(r);
}
inline u64 checked_pow(u64 p, unsigned e) {
    u64 r = 1;
    for (unsigned i = 0; i < e; ++i) r = checked_mul(r, p);
    return r;
}
}  // namespace detail

inline u64 phi_of(const Factorization& fact) {
    u64 r = 1;
    for (const auto& [p, e] : fact)
        r = detail::checked_mul(r, detail::checked_mul(detail::checked_pow(p, e - 1), p - 1));
    return r;
}

inline u64 sigma_of(const Factorization& fact) {
    u64 r = 1;
    for (const auto& [p, e] : fact) {
        u128 term = 1, pk = 1;
        for (unsigned i = 0; i < e; ++i) {
            pk *= p;
            term += pk;
            if (term > ~u64{0}) throw OverflowError("sigma exceeds 64 bits");
        }
        r = detail::checked_mul(r, static_cast<u64>(term));
    }
    return r;
}

inline u64 apply(Fn f, const Factorization& fact) {
    return f == Fn::phi ? phi_of(fact) : sigma_of(fact);
}

/// Smallest-prime-factor table for the window [lo, hi). Entries are 32-bit;
/// 0 marks a prime (its smallest factor exceeds sqrt(hi)). Immutable once
/// built, so concurrent reads are safe.
class FactorSieve {
public:
    FactorSieve(u64 lo, u64 hi) : lo_(lo), hi_(hi) {
        if (lo < 2 || hi <= lo) throw DomainError("FactorSieve: need 2 <= lo < hi");
        if (hi > kMaxInput + 2) throw ResourceError("FactorSieve: window exceeds 1e12");
        require_memory((hi - lo) * sizeof(std::uint32_t), "FactorSieve window");
        base_ = primes_up_to(isqrt(hi));
        spf_.assign(hi - lo, 0);
        for (const u64 p : base_) {
            u64 start = std::max(p * p, (lo + p - 1) / p * p);
            for (u64 m = start; m < hi; m += p) {
                auto& slot = spf_[m - lo];
                if (slot == 0) slot = static_cast<std::uint32_t>(p);
            }
        }
    }

    u64 window_lo() const { return lo_; }
    u64 window_hi() const { return hi_; }
    bool contains(u64 n) const { return n >= lo_ && n < hi_; }
    std::span<const u64> base_primes() const { return base_; }

    u64 smallest_prime_factor(u64 n) const {
        if (!contains(n)) throw RangeError(out_of_window(n));
        const std::uint32_t s = spf_[n - lo_];
        return s == 0 ? n : s;
    }

    bool is_prime(u64 n) const { return contains(n) ? spf_[n - lo_] == 0 : throw RangeError(out_of_window(n)); }

    std::string out_of_window(u64 n) const {
        return "value " + std::to_string(n) + " outside sieve window [" + std::to_string(lo_) + ", " +
               std::to_string(hi_) + ")";
    }

private:
    u64 lo_, hi_;
    std::vector<std::uint32_t> spf_;
    std::vector<u64> base_;
};

/// Factors n using the window table; cofactors that fall below the window
/// are finished by trial division over the base primes.
inline Factorization factorize(u64 n, const FactorSieve& sieve) {
    Factorization out;
    if (n == 0) throw DomainError("factorize: n must be positive");
    if (n == 1) return out;
    if (!sieve.contains(n)) throw RangeError(sieve.out_of_window(n));

    u64 current = 0;
    unsigned exp = 0;
    auto emit = [&](u64 p) {
        if (p == current) {
            ++exp;
        } else {
            if (current) out.push(current, exp);
            current = p;
            exp = 1;
        }
    };
    while (n > 1 && sieve.contains(n)) {
        const u64 p = sieve.smallest_prime_factor(n);
        emit(p);
        n /= p;
    }
    if (n > 1) {
        const auto base = sieve.base_primes();
        auto it = std::lower_bound(base.begin(), base.end(), current);
        for (; it != base.end() && *it * *it <= n; ++it) {
            while (n % *it == 0) {
                emit(*it);
                n /= *it;
            }
        }
        if (n > 1) emit(n);
    }
    if (current) out.push(current, exp);
    return out;
}

struct SegmentValues {
    u64 lo = 0;
    std::vector<u64> phi;
    std::vector<u64> sigma;
};

namespace detail {

template <bool kPhi, bool kSigma, class Rem>
void fill_segment(u64 lo, u64 hi, std::span<const u64> base, u64* phi, u64* sigma, Rem* rem) {
    const std::size_t len = hi - lo;
    for (std::size_t k = 0; k < len; ++k) {
        rem[k] = static_cast<Rem>(lo + k);
        if constexpr (kPhi) phi[k] = 1;
        if constexpr (kSigma) sigma[k] = 1;
    }
    for (const u64 p64 : base) {
        if (p64 * p64 >= hi) break;
        const Rem p = static_cast<Rem>(p64);
        for (u64 m = (lo + p64 - 1) / p64 * p64; m < hi; m += p64) {
            const std::size_t k = m - lo;
            Rem r = rem[k] / p;
            u64 pe = p64;
            while (r % p == 0) {
                r /= p;
                pe *= p64;
            }
            rem[k] = r;
            if constexpr (kPhi) phi[k] *= pe - pe / p64;
            if constexpr (kSigma) sigma[k] *= (pe * p64 - 1) / (p64 - 1);
        }
    }
    for (std::size_t k = 0; k < len; ++k) {
        const u64 r = rem[k];
        if (r > 1) {
            if constexpr (kPhi) phi[k] *= r - 1;
            if constexpr (kSigma) sigma[k] *= r + 1;
        }
    }
}

}  // namespace detail

/// Reusable remainder buffers for segment_map_into; 32-bit when the window allows.
struct SegmentScratch {
    std::vector<std::uint32_t> rem32;
    std::vector<u64> rem64;
};

namespace detail {

template <bool kPhi, bool kSigma>
void fill_segment(u64 lo, u64 hi, std::span<const u64> base, u64* phi, u64* sigma, SegmentScratch& scratch) {
    if (hi <= (u64{1} << 32)) {
        scratch.rem32.resize(hi - lo);
        fill_segment<kPhi, kSigma>(lo, hi, base, phi, sigma, scratch.rem32.data());
    } else {
        scratch.rem64.resize(hi - lo);
        fill_segment<kPhi, kSigma>(lo, hi, base, phi, sigma, scratch.rem64.data());
    }
}

inline void check_segment_bounds(u64 lo, u64 hi, const char* what) {
    if (lo < 2 || hi <= lo) throw DomainError(std::string(what) + ": need 2 <= lo < hi");
    if (hi > kMaxInput + 1) throw ResourceError(std::string(what) + ": inputs capped at 1e12");
}

}  // namespace detail

/// phi and/or sigma over [lo, hi), using caller-supplied primes that must
/// include every prime <= sqrt(hi - 1).
inline void segment_map_into(u64 lo, u64 hi, Which which, std::span<const u64> base, SegmentValues& out,
                             SegmentScratch& scratch) {
    detail::check_segment_bounds(lo, hi, "segment_map");
    out.lo = lo;
    const std::size_t len = hi - lo;
    out.phi.resize(which == Which::sigma ? 0 : len);
    out.sigma.resize(which == Which::phi ? 0 : len);
    switch (which) {
        case Which::phi: detail::fill_segment<true, false>(lo, hi, base, out.phi.data(), nullptr, scratch); break;
        case Which::sigma: detail::fill_segment<false, true>(lo, hi, base, nullptr, out.sigma.data(), scratch); break;
        case Which::both:
            detail::fill_segment<true, true>(lo, hi, base, out.phi.data(), out.sigma.data(), scratch);
            break;
    }
}

inline SegmentValues segment_map(u64 lo, u64 hi, Which which, std::span<const u64> base) {
    SegmentValues out;
    SegmentScratch scratch;
    segment_map_into(lo, hi, which, base, out, scratch);
    return out;
}

inline SegmentValues segment_map(u64 lo, u64 hi, Which which) {
    detail::check_segment_bounds(lo, hi, "segment_map");
    require_memory((hi - lo) * 3 * sizeof(u64), "segment_map");
    const auto base = primes_up_to(isqrt(hi - 1));
    return segment_map(lo, hi, which, base);
}

/// Calls fn(n, factorization) for every n in [lo, hi) in ascending order.
/// Works block by block, so memory stays bounded for any window length.
template <class Fn>
void for_each_factorization(u64 lo, u64 hi, std::span<const u64> base, Fn&& fn,
                            std::size_t block = std::size_t{1} << 14) {
    if (lo < 1 || hi <= lo) throw DomainError("for_each_factorization: need 1 <= lo < hi");
    if (hi > kMaxInput + 2) throw ResourceError("for_each_factorization: inputs capped at 1e12");
    std::vector<Factorization> facts(block);
    std::vector<u64> rem(block);
    for (u64 b = lo; b < hi; b += block) {
        const u64 e = std::min<u64>(hi, b + block);
        const std::size_t len = e - b;
        for (std::size_t k = 0; k < len; ++k) {
            rem[k] = b + k;
            facts[k] = Factorization{};
        }
        for (const u64 p : base) {
            if (p * p >= e) break;
            for (u64 m = (b + p - 1) / p * p; m < e; m += p) {
                const std::size_t k = m - b;
                unsigned exp = 0;
                do {
                    rem[k] /= p;
                    ++exp;
                } while (rem[k] % p == 0);
                facts[k].push(p, exp);
            }
        }
        for (std::size_t k = 0; k < len; ++k) {
            if (rem[k] > 1) facts[k].push(rem[k], 1);
            fn(b + k, static_cast<const Factorization&>(facts[k]));
        }
    }
}

}  // namespace phisigma
