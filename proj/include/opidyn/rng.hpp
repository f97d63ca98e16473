#pragma once
#include <cstdint>
#include <cmath>
#include <random>

namespace opidyn {

// splitmix64 step; used only to derive engine seeds, never as the main stream.
inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based seed split: (master, stream) -> independent engine seed.
// Streams indexed per user within a run and per run within a Monte Carlo
// batch, so replicas stay independent no matter how work is scheduled.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b << 1);
}

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t master, std::uint64_t stream) {
  return Rng(derive_seed(master, stream));
}

// Samplers are hand-rolled on top of raw engine output so that a given seed
// produces the same draws on every platform (std::*_distribution is
// implementation-defined).

// uniform in [0,1), 53-bit resolution
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// unit-rate exponential
inline double exp_unit(Rng& rng) { return -std::log1p(-uniform01(rng)); }

// standard normal, Box-Muller cosine branch
inline double normal01(Rng& rng) {
  double u1 = 1.0 - uniform01(rng);  // (0,1]
  double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace opidyn
