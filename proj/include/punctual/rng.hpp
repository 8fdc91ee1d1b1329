#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace punctual {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Output is a pure function of (key, counter); no hidden state.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

/// Stream of uniforms/normals for one (seed, stream) pair. Streams with
/// different indices are independent; the sequence does not depend on which
/// thread draws it.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() {
        if (u_pos_ >= 2) refill_uniforms();
        return u_buf_[u_pos_++];
    }

    double normal() {
        if (n_pos_ >= 2) {
            // Box-Muller on a fresh block
            const double u1 = uniform();
            const double u2 = uniform();
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double th = 2.0 * std::numbers::pi * u2;
            n_buf_ = {r * std::cos(th), r * std::sin(th)};
            n_pos_ = 0;
        }
        return n_buf_[n_pos_++];
    }

    std::uint64_t blocks_used() const { return block_; }

private:
    void refill_uniforms() {
        const auto out = philox4x32(
            {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
             static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
            key_);
        ++block_;
        constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
        for (int i = 0; i < 2; ++i) {
            const std::uint64_t a = out[2 * i] >> 5;
            const std::uint64_t b = out[2 * i + 1] >> 6;
            const std::uint64_t k = (a << 26) | b;
            u_buf_[i] = (static_cast<double>(k) + 0.5) * kScale;
        }
        u_pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<double, 2> u_buf_{};
    int u_pos_ = 2;
    std::array<double, 2> n_buf_{};
    int n_pos_ = 2;
};

}  // namespace punctual
