#pragma once

#include <array>
#include <cstdint>

namespace apm {

/// Philox4x32-10 counter-based bijection (Salmon et al., SC'11).
///
/// Every output block is a pure function of (key, counter), so any draw can
/// be regenerated without replaying a stream.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    [[nodiscard]] static constexpr Counter apply(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeylA;
                key[1] += kWeylB;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

    [[nodiscard]] static constexpr Key key_from_seed(std::uint64_t seed) noexcept {
        return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    }

private:
    static constexpr std::uint32_t kMulA = 0xD2511F53u;
    static constexpr std::uint32_t kMulB = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    static constexpr std::uint32_t kWeylB = 0xBB67AE85u;
};

/// Two 64-bit words per Philox block.
struct Block128 {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
};

/// Random block addressed by (seed, stream id, block number, lane).
///
/// The stream id carries the asset index; lane separates auxiliary streams
/// (rejection attempts etc.) belonging to the same index.
[[nodiscard]] inline Block128 philox_block(std::uint64_t seed, std::uint32_t stream, std::uint64_t block,
                                           std::uint32_t lane) noexcept {
    const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                                     stream, lane};
    const auto out = Philox4x32::apply(ctr, Philox4x32::key_from_seed(seed));
    return {(static_cast<std::uint64_t>(out[1]) << 32) | out[0], (static_cast<std::uint64_t>(out[3]) << 32) | out[2]};
}

/// Uniform in [0, 1) with 53 random bits.
[[nodiscard]] constexpr double to_unit(std::uint64_t x) noexcept {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Uniform in (0, 1].
[[nodiscard]] constexpr double to_unit_open0(std::uint64_t x) noexcept {
    return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace apm
