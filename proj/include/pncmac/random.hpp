#pragma once

#include <cstdint>
#include <random>

namespace pncmac {

using Rng = std::mt19937_64;

/// Independent sub-streams of one run. Changing how one model draws never
/// perturbs the others.
enum class Stream : std::uint64_t {
  kTraffic = 1,
  kPlacement = 2,
  kReception = 3,
  kBackoff = 4,
  kPhase = 5,
};

inline Rng make_stream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x9e3779b9u};
  return Rng(seq);
}

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace pncmac
