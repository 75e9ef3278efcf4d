#pragma once

// Value sets of phi and sigma up to x as one-bit-per-integer bitmaps, their
// counts and intersection counts, and the common-values table.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "phisigma/errors.hpp"
#include "phisigma/parallel.hpp"
#include "phisigma/sieve_core.hpp"

namespace phisigma {

/// Smallest B with phi(n) <= x  =>  n <= B. Uses
///   n / phi(n) < e^gamma * loglog n + 3 / loglog n   (n >= 3),
/// whose right side grows slowly enough that n / h(n) increases from n = 27.
inline u64 phi_preimage_bound(u64 x) {
    if (x == 0) throw DomainError("phi_preimage_bound: x must be >= 1");
    const double eg = std::exp(std::numbers::egamma);
    auto g = [eg](double n) {
        const double ll = std::log(std::log(n));
        return n / (eg * ll + 3.0 / ll);
    };
    const double target = static_cast<double>(x);
    double lo = 27, hi = 64;
    while (g(hi) < target) hi *= 2;
    while (hi - lo > 0.5) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < target ? lo : hi) = mid;
    }
    // round up and pad against floating error in g
    const u64 bound = static_cast<u64>(std::ceil(hi * (1 + 1e-12))) + 1;
    return std::max<u64>(bound, 100);
}

/// One bit per integer v in [0, limit_x]; bit v set means v is a value of f.
class ValueBitmap {
public:
    ValueBitmap() = default;
    ValueBitmap(Fn f, u64 limit_x) : f_(f), limit_(limit_x), words_(limit_x / 64 + 1, 0) {}

    Fn f_tag() const { return f_; }
    u64 limit_x() const { return limit_; }
    std::span<const std::uint64_t> words() const { return words_; }

    bool test(u64 v) const {
        if (v > limit_) throw RangeError("ValueBitmap::test beyond limit");
        return (words_[v >> 6] >> (v & 63)) & 1;
    }
    void set(u64 v) { words_[v >> 6] |= std::uint64_t{1} << (v & 63); }
    void set_concurrent(u64 v) {
        std::atomic_ref<std::uint64_t>(words_[v >> 6]).fetch_or(std::uint64_t{1} << (v & 63),
                                                                 std::memory_order_relaxed);
    }

    friend bool operator==(const ValueBitmap&, const ValueBitmap&) = default;

private:
    Fn f_ = Fn::phi;
    u64 limit_ = 0;
    std::vector<std::uint64_t> words_;
};

namespace detail {
// popcount over bits [1, x] of the AND of the given bitmaps
template <class... Bm>
u64 masked_popcount(u64 x, const Bm&... bms) {
    const u64 full = (x + 1) / 64;
    u64 total = 0;
    for (u64 w = 0; w < full; ++w) total += std::popcount((bms.words()[w] & ...));
    if (const u64 tail = (x + 1) % 64; tail)
        total += std::popcount((bms.words()[full] & ...) & ((std::uint64_t{1} << tail) - 1));
    // bit 0 is never set, so [0, x] and [1, x] agree
    return total;
}
}  // namespace detail

/// V_f(x): number of set bits in [1, x].
inline u64 count_values(const ValueBitmap& bm, u64 x) {
    if (x > bm.limit_x()) throw RangeError("count_values: x beyond bitmap limit");
    return detail::masked_popcount(x, bm);
}

/// V_{phi,sigma}(x): values <= x set in both bitmaps.
inline u64 intersect_count(const ValueBitmap& a, const ValueBitmap& b, u64 x) {
    if (x > a.limit_x() || x > b.limit_x()) throw RangeError("intersect_count: x beyond bitmap limit");
    return detail::masked_popcount(x, a, b);
}

struct BuildOptions {
    unsigned threads = 1;
    std::size_t segment = std::size_t{1} << 16;
};

struct ValueBitmaps {
    ValueBitmap phi;
    ValueBitmap sigma;
};

namespace detail {

/// Scans preimages n in [2, max(phi_hi, sigma_hi)] and hands every value in
/// [vlo, vhi) to the sinks. phi is evaluated for n <= phi_hi, sigma for
/// n <= sigma_hi (either may be 0 to skip).
template <class PhiSink, class SigmaSink>
void scan_values(u64 phi_hi, u64 sigma_hi, u64 vlo, u64 vhi, const BuildOptions& opt, PhiSink&& phi_sink,
                 SigmaSink&& sigma_sink) {
    const u64 top = std::max(phi_hi, sigma_hi);
    if (top < 2) return;
    const std::size_t seg = std::max<std::size_t>(opt.segment, 64);
    const auto base = primes_up_to(isqrt(top));
    const std::size_t chunks = static_cast<std::size_t>((top - 1 + seg - 1) / seg);
    parallel_for_chunks(chunks, opt.threads, [&](std::size_t c) {
        thread_local SegmentValues values;
        thread_local SegmentScratch scratch;
        const u64 lo = 2 + static_cast<u64>(c) * seg;
        const u64 hi = std::min<u64>(top + 1, lo + seg);
        const bool want_phi = lo <= phi_hi;
        const bool want_sigma = lo <= sigma_hi;
        const Which which = want_phi && want_sigma ? Which::both : (want_phi ? Which::phi : Which::sigma);
        segment_map_into(lo, hi, which, base, values, scratch);
        if (want_phi) {
            const u64 end = std::min(hi, phi_hi + 1);
            for (u64 n = lo; n < end; ++n) {
                const u64 v = values.phi[n - lo];
                if (v >= vlo && v < vhi) phi_sink(v);
            }
        }
        if (want_sigma) {
            const u64 end = std::min(hi, sigma_hi + 1);
            for (u64 n = lo; n < end; ++n) {
                const u64 v = values.sigma[n - lo];
                if (v >= vlo && v < vhi) sigma_sink(v);
            }
        }
    });
}

inline void check_build_limit(u64 x, const char* what) {
    if (x == 0) throw DomainError(std::string(what) + ": x must be >= 1");
    if (x > kMaxInput / 16) throw ResourceError(std::string(what) + ": x too large for preimage scan");
}

}  // namespace detail

/// Builds both bitmaps in a single preimage pass. Concurrent workers set
/// bits with atomic OR, so the result equals the sequential one.
inline ValueBitmaps build_value_bitmaps(u64 x, const BuildOptions& opt = {}) {
    detail::check_build_limit(x, "build_value_bitmaps");
    require_memory(2 * (x / 8 + 8) + resolve_threads(opt.threads) * opt.segment * 28,
                   "value bitmaps (use streaming mode)");
    ValueBitmaps out{ValueBitmap(Fn::phi, x), ValueBitmap(Fn::sigma, x)};
    out.phi.set(1);
    out.sigma.set(1);
    const u64 phi_hi = phi_preimage_bound(x);
    if (resolve_threads(opt.threads) > 1) {
        detail::scan_values(
            phi_hi, x, 0, x + 1, opt, [&](u64 v) { out.phi.set_concurrent(v); },
            [&](u64 v) { out.sigma.set_concurrent(v); });
    } else {
        detail::scan_values(
            phi_hi, x, 0, x + 1, opt, [&](u64 v) { out.phi.set(v); }, [&](u64 v) { out.sigma.set(v); });
    }
    return out;
}

inline ValueBitmap build_value_bitmap(Fn f, u64 x, const BuildOptions& opt = {}) {
    detail::check_build_limit(x, "build_value_bitmap");
    require_memory(x / 8 + 8 + resolve_threads(opt.threads) * opt.segment * 20, "value bitmap");
    ValueBitmap bm(f, x);
    bm.set(1);
    const u64 phi_hi = f == Fn::phi ? phi_preimage_bound(x) : 0;
    const u64 sigma_hi = f == Fn::sigma ? x : 0;
    if (resolve_threads(opt.threads) > 1) {
        auto sink = [&](u64 v) { bm.set_concurrent(v); };
        detail::scan_values(phi_hi, sigma_hi, 0, x + 1, opt, sink, sink);
    } else {
        auto sink = [&](u64 v) { bm.set(v); };
        detail::scan_values(phi_hi, sigma_hi, 0, x + 1, opt, sink, sink);
    }
    return bm;
}

struct ValuesTableRow {
    u64 N = 0;
    u64 v_phi = 0;
    u64 v_sigma = 0;
    u64 v_common = 0;
    double ratio_phi = 0;
    double ratio_sigma = 0;
    friend bool operator==(const ValuesTableRow&, const ValuesTableRow&) = default;
};

struct TableOptions {
    BuildOptions build;
    bool streaming = false;
    /// value-window width in streaming mode (bits per bitmap)
    u64 streaming_window = u64{1} << 27;
};

namespace detail {

inline ValuesTableRow make_row(u64 N, u64 vp, u64 vs, u64 vc) {
    return {N, vp, vs, vc, vp ? static_cast<double>(vc) / vp : 0.0, vs ? static_cast<double>(vc) / vs : 0.0};
}

// Streaming: the value axis is cut into windows; per window the sigma pass
// writes a window bitmap and the phi pass intersects against it.
inline std::vector<ValuesTableRow> values_table_streaming(const std::vector<u64>& limits, const TableOptions& opt) {
    const u64 x = limits.back();
    const u64 width = std::max<u64>(64, opt.streaming_window / 64 * 64);
    require_memory(2 * (width / 8) + resolve_threads(opt.build.threads) * opt.build.segment * 28,
                   "streaming value windows");
    const u64 phi_hi = phi_preimage_bound(x);
    std::vector<u64> vp(limits.size()), vs(limits.size()), vc(limits.size());
    for (u64 wlo = 0; wlo <= x; wlo += width) {
        const u64 whi = std::min(x + 1, wlo + width);
        ValueBitmap sig(Fn::sigma, width - 1), ph(Fn::phi, width - 1);
        if (wlo == 0) {
            sig.set(1);
            ph.set(1);
        }
        const bool concurrent = resolve_threads(opt.build.threads) > 1;
        auto sigma_sink = [&](u64 v) { concurrent ? sig.set_concurrent(v - wlo) : sig.set(v - wlo); };
        auto phi_sink = [&](u64 v) { concurrent ? ph.set_concurrent(v - wlo) : ph.set(v - wlo); };
        auto none = [](u64) {};
        scan_values(0, std::min(x, whi), wlo, whi, opt.build, none, sigma_sink);
        scan_values(phi_hi, 0, wlo, whi, opt.build, phi_sink, none);
        for (std::size_t i = 0; i < limits.size(); ++i) {
            if (limits[i] < wlo) continue;
            const u64 upto = std::min(limits[i], whi - 1) - wlo;
            // masked_popcount counts from bit 0 here, which is a real value when wlo > 0
            vp[i] += masked_popcount(upto, ph);
            vs[i] += masked_popcount(upto, sig);
            vc[i] += masked_popcount(upto, ph, sig);
        }
    }
    std::vector<ValuesTableRow> rows;
    for (std::size_t i = 0; i < limits.size(); ++i) rows.push_back(make_row(limits[i], vp[i], vs[i], vc[i]));
    return rows;
}

}  // namespace detail

/// One row per limit; a single build at max(limits) serves every row.
inline std::vector<ValuesTableRow> values_table(const std::vector<u64>& limits, const TableOptions& opt = {}) {
    if (limits.empty()) return {};
    for (std::size_t i = 0; i < limits.size(); ++i) {
        if (limits[i] == 0) throw DomainError("values_table: limits must be >= 1");
        if (i && limits[i] <= limits[i - 1]) throw DomainError("values_table: limits must be ascending");
    }
    if (opt.streaming) return detail::values_table_streaming(limits, opt);
    const auto bms = build_value_bitmaps(limits.back(), opt.build);
    std::vector<ValuesTableRow> rows;
    for (const u64 N : limits)
        rows.push_back(detail::make_row(N, count_values(bms.phi, N), count_values(bms.sigma, N),
                                        intersect_count(bms.phi, bms.sigma, N)));
    return rows;
}

inline void write_values_csv(std::ostream& os, const std::vector<ValuesTableRow>& rows) {
    os << "N,V_phi,V_sigma,V_common,ratio_phi,ratio_sigma\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%" PRIu64 ",%" PRIu64 ",%" PRIu64 ",%" PRIu64 ",%.7f,%.7f\n", r.N, r.v_phi,
                      r.v_sigma, r.v_common, r.ratio_phi, r.ratio_sigma);
        os << buf;
    }
}

}  // namespace phisigma
