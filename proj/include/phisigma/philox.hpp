#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is a
// pure function of (counter, key), so a sample stream can be split across
// any number of workers without changing results.

#include <array>
#include <cstdint>

namespace phisigma {

class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

    static Key key_from_seed(std::uint64_t seed) {
        return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    }

    /// Two doubles in [0, 1) with 53 random bits each, drawn from the block
    /// at (stream, index, lane).
    static std::array<double, 2> uniform_pair(Key key, std::uint64_t index, std::uint32_t lane,
                                              std::uint32_t stream = 0) {
        const Counter out = block({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), lane,
                                   stream},
                                  key);
        return {to_unit(out[0], out[1]), to_unit(out[2], out[3])};
    }

    /// (0, 1]: safe for logarithms and fractional powers.
    static double open_low(double u) { return 1.0 - u; }

private:
    static double to_unit(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
        return static_cast<double>(bits) * 0x1.0p-53;
    }

    static constexpr std::uint32_t kMul0 = 0xD2511F53;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
};

}  // namespace phisigma
