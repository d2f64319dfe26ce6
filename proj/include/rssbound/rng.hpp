#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace rssbound {

// Philox4x32-10 counter-based generator. Every draw is a pure function of
// (seed, stream, counter), so independent streams can be handed to parallel
// jobs and replayed exactly regardless of thread count.
class Philox {
public:
    explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed),
               static_cast<std::uint32_t>(seed >> 32)},
          ctr_{0, 0,
               static_cast<std::uint32_t>(stream),
               static_cast<std::uint32_t>(stream >> 32)} {}

    std::uint32_t next_u32() noexcept {
        if (idx_ == 4) {
            block();
        }
        return out_[idx_++];
    }

    // Uniform on [0, 1).
    double uniform01() noexcept {
        return next_u32() * 0x1p-32;
    }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) noexcept {
        return lo + (hi - lo) * uniform01();
    }

    // Standard normal via Box-Muller; the second value of each pair is cached.
    double gaussian() noexcept {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = (next_u32() + 1.0) * 0x1p-32;  // (0, 1]
        const double u2 = next_u32() * 0x1p-32;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925287 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    double gaussian(double mean, double stddev) noexcept {
        return mean + stddev * gaussian();
    }

private:
    static void mulhilo(std::uint32_t a, std::uint32_t b,
                        std::uint32_t& hi, std::uint32_t& lo) noexcept {
        const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        hi = static_cast<std::uint32_t>(p >> 32);
        lo = static_cast<std::uint32_t>(p);
    }

    void block() noexcept {
        constexpr std::uint32_t kMul0 = 0xD2511F53u;
        constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
        constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
        constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

        std::array<std::uint32_t, 4> c = ctr_;
        std::uint32_t k0 = key_[0];
        std::uint32_t k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mulhilo(kMul0, c[0], hi0, lo0);
            mulhilo(kMul1, c[2], hi1, lo1);
            c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        out_ = c;
        idx_ = 0;
        if (++ctr_[0] == 0) {
            ++ctr_[1];
        }
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> out_{};
    int idx_ = 4;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace rssbound
