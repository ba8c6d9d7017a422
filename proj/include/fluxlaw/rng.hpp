#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace fluxlaw {

/// Philox4x32-10 (Salmon et al., SC'11): a keyed bijection of a 128-bit
/// counter. Streams are addressed, not advanced, so draws for (seed, j, step)
/// never depend on how many other draws happened before.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
        std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
        ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
               std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

/// Two independent standard normals for the address (seed, a, b).
inline std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    auto r = philox4x32({std::uint32_t(a), std::uint32_t(a >> 32), std::uint32_t(b), std::uint32_t(b >> 32)},
                        {std::uint32_t(seed), std::uint32_t(seed >> 32)});
    std::uint64_t h0 = (std::uint64_t(r[0]) << 32) | r[1];
    std::uint64_t h1 = (std::uint64_t(r[2]) << 32) | r[3];
    double u1 = (double(h0 >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    double u2 = double(h1 >> 11) * 0x1.0p-53;          // [0, 1)
    double rad = std::sqrt(-2.0 * std::log(u1));
    double ang = 2.0 * 3.14159265358979323846 * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
}

inline double uniform01(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    auto r = philox4x32({std::uint32_t(a), std::uint32_t(a >> 32), std::uint32_t(b), std::uint32_t(b >> 32)},
                        {std::uint32_t(seed), std::uint32_t(seed >> 32)});
    std::uint64_t h = (std::uint64_t(r[0]) << 32) | r[1];
    return double(h >> 11) * 0x1.0p-53;
}

/// Sequential view of one counter stream, for Monte Carlo loops.
class CounterStream {
public:
    CounterStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}
    double uniform() { return uniform01(seed_, stream_, next_++); }
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        auto z = normal_pair(seed_, stream_, next_++);
        spare_ = z[1];
        have_spare_ = true;
        return z[0];
    }

private:
    std::uint64_t seed_, stream_, next_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace fluxlaw
