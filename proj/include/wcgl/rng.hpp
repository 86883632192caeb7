#pragma once
#include <cstdint>
#include <array>
#include <cmath>

// Counter-based RNG (Philox-4x32-10). Every random number in the toolkit is a
// pure function of (root seed, stream id, counter), so ensembles parallelize
// deterministically: results do not depend on worker count or scheduling.
//
// Stream id layout (64 bits):
//   bits 60..63  purpose tag (noise, shell sampler, meso, bootstrap, ...)
//   bits 24..59  task index (trajectory / path / resample id)
//   bits  0..23  sub-index (site or edge)
// The 64-bit counter advances along the stream (e.g. step*2+half for the
// integrator noise, or a plain draw counter for samplers).

namespace wcgl {

namespace detail {
inline void philox_round(std::array<std::uint32_t, 4>& ctr, std::array<std::uint32_t, 2>& key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += 0x9E3779B9u; // golden-ratio Weyl increments
    key[1] += 0xBB67AE85u;
}
} // namespace detail

// One 128-bit Philox-4x32-10 block.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) detail::philox_round(ctr, key);
    return ctr;
}

enum class StreamPurpose : std::uint64_t {
    noise = 0,      // integrator momentum rotations
    shell = 1,      // microcanonical rejection sampler
    meso = 2,       // meso SDE edge increments
    bootstrap = 3,  // resampling in analysis
    misc = 4,       // synthetic-data generators in tests/tools
};

inline std::uint64_t make_stream(StreamPurpose purpose, std::uint64_t task, std::uint64_t sub) {
    return (static_cast<std::uint64_t>(purpose) << 60) | ((task & 0xFFFFFFFFFull) << 24) |
           (sub & 0xFFFFFFull);
}

// Doubles in (0,1): cell midpoints (k+1/2)*2^-52, each exactly representable,
// so the range is [2^-53, 1-2^-53] and neither endpoint of (0,1) is reachable.
inline double u01(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t v = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(v >> 12) + 0.5) * 0x1.0p-52;
}

// Stateless draws addressed by (seed, stream, counter).
inline std::array<std::uint32_t, 4> philox_at(std::uint64_t seed, std::uint64_t stream,
                                              std::uint64_t counter) {
    return philox4x32({static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
                       static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)},
                      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
}

// Two independent standard normals via Box-Muller on one block.
inline std::array<double, 2> gaussian_pair_at(std::uint64_t seed, std::uint64_t stream,
                                              std::uint64_t counter) {
    const auto b = philox_at(seed, stream, counter);
    const double u1 = u01(b[0], b[1]), u2 = u01(b[2], b[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

// Standard normal via Box-Muller on one block (first variate of the pair).
inline double gaussian_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return gaussian_pair_at(seed, stream, counter)[0];
}

// Sequential view of one stream: a tiny generator for samplers and bootstrap
// loops where consumption count is data-dependent.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    double uniform() {
        const auto b = next_block();
        return u01(b[0], b[1]);
    }
    // Two independent standard normals from one block.
    std::array<double, 2> gaussian_pair() {
        const auto b = next_block();
        const double u1 = u01(b[0], b[1]), u2 = u01(b[2], b[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }
    double gaussian() { return gaussian_pair()[0]; }

    std::uint64_t consumed() const { return counter_; }

  private:
    std::array<std::uint32_t, 4> next_block() { return philox_at(seed_, stream_, counter_++); }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

} // namespace wcgl
