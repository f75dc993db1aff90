#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace sdi {

// Philox4x32-10 counter-based generator. Each (key, counter) pair maps to an
// independent 128-bit block, so draws indexed by (seed, path, step, coord)
// can be produced in any order, on any number of workers, with identical
// results.
namespace philox {

constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline std::array<uint32_t, 4> block(uint64_t key, std::array<uint32_t, 4> ctr) {
    uint32_t k0 = static_cast<uint32_t>(key);
    uint32_t k1 = static_cast<uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        const uint64_t p0 = static_cast<uint64_t>(kMul0) * ctr[0];
        const uint64_t p1 = static_cast<uint64_t>(kMul1) * ctr[2];
        const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
        const uint32_t lo0 = static_cast<uint32_t>(p0);
        const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
        const uint32_t lo1 = static_cast<uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return ctr;
}

// Substream tags keep unrelated uses of the same (seed, path) apart.
enum Stream : uint32_t {
    kIncrements = 0,
    kInitial = 1,
    kVertexPick = 2,
    kAnchors = 3,
    kDirections = 4,
};

inline std::array<uint32_t, 4> counter(uint64_t path, uint64_t step, uint32_t coord,
                                       uint32_t stream) {
    return {static_cast<uint32_t>(path), static_cast<uint32_t>(path >> 32),
            static_cast<uint32_t>(step),
            (stream << 24) | (coord & 0x00FFFFFFu)};
}

}  // namespace philox

inline uint64_t counter_u64(uint64_t seed, uint64_t path, uint64_t step, uint32_t coord,
                            uint32_t stream) {
    const auto w = philox::block(seed, philox::counter(path, step, coord, stream));
    return (static_cast<uint64_t>(w[0]) << 32) | w[1];
}

// Uniform in (0,1); never returns 0 or 1 exactly.
inline double counter_uniform(uint64_t seed, uint64_t path, uint64_t step, uint32_t coord,
                              uint32_t stream) {
    const auto w = philox::block(seed, philox::counter(path, step, coord, stream));
    return (static_cast<double>(w[0]) + 0.5) * 0x1p-32;
}

// One standard normal draw (Box-Muller on a single block).
inline double counter_normal(uint64_t seed, uint64_t path, uint64_t step, uint32_t coord,
                             uint32_t stream) {
    const auto w = philox::block(seed, philox::counter(path, step, coord, stream));
    const double u1 = (static_cast<double>(w[0]) + 0.5) * 0x1p-32;
    const double u2 = (static_cast<double>(w[1]) + 0.5) * 0x1p-32;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace sdi
