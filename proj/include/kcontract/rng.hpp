#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace kcontract {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3", SC 2011).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kW32A = 0x9E3779B9;
    constexpr std::uint32_t kW32B = 0xBB67AE85;
    constexpr std::uint32_t kM4x32A = 0xD2511F53;
    constexpr std::uint32_t kM4x32B = 0xCD9E8D57;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM4x32A) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM4x32B) * ctr[2];
        const auto lo0 = static_cast<std::uint32_t>(p0), hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1), hi1 = static_cast<std::uint32_t>(p1 >> 32);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW32A;
        key[1] += kW32B;
    }
    return ctr;
}

// A counter-based stream: key = seed, counter = (stream id, draw index). Two
// streams with the same (seed, id) produce the same sequence, no matter which
// thread owns them or in which order streams are created.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t id)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, id_(id) {}

    std::uint64_t next_u64() {
        if (have_ == 0) refill();
        --have_;
        return buf_[have_];
    }

    // Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        spare_ = rad * std::sin(2.0 * 3.14159265358979323846 * u2);
        has_spare_ = true;
        return rad * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double exponential() { return -std::log(uniform()); }

    // Marsaglia-Tsang; shape < 1 uses the U^{1/shape} boost.
    double gamma(double shape) {
        if (shape < 1.0) return gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    std::uint64_t id() const { return id_; }

private:
    void refill() {
        const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(index_),
                                               static_cast<std::uint32_t>(index_ >> 32),
                                               static_cast<std::uint32_t>(id_),
                                               static_cast<std::uint32_t>(id_ >> 32)};
        const auto out = philox4x32(ctr, key_);
        buf_[1] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
        buf_[0] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        have_ = 2;
        ++index_;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t id_;
    std::uint64_t index_ = 0;
    std::uint64_t buf_[2] = {0, 0};
    int have_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Derives an independent seed for a named sub-experiment, so that e.g. audit
// point 3 and audit point 4 never share streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    const auto out = philox4x32({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                                 static_cast<std::uint32_t>(b), 0x5EED5EEDu},
                                {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

}  // namespace kcontract
