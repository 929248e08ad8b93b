#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace bdris {

// 64-bit finalizer (splitmix64).  Used to derive well-separated engine seeds
// from structured keys so that every (seed, trial, purpose) tuple owns an
// independent, reproducible random stream.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Stream purposes.  The channel stream is keyed only by (seed, trial, block)
// so both architectures see identical channel realizations for a given trial;
// initializer streams are architecture-specific.
enum class StreamTag : std::uint64_t {
  channel = 1,
  bdris_init = 2,
  dris_init = 3,
  generic = 4,
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial,
                                 StreamTag tag, std::uint64_t block = 0) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ trial);
  h = mix64(h ^ static_cast<std::uint64_t>(tag));
  h = mix64(h ^ block);
  return h;
}

// A deterministic substream: engine seeded from the derived key, with the
// usual scalar draw helpers layered on top.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t trial, StreamTag tag,
               std::uint64_t block = 0)
      : engine_(derive_seed(seed, trial, tag, block)) {}

  explicit RandomStream(std::uint64_t raw_seed) : engine_(raw_seed) {}

  double uniform() { return uni_(engine_); }  // [0, 1)

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return gauss_(engine_); }  // N(0, 1)

  // CN(0, 1): unit total variance, split evenly between parts.
  std::complex<double> cnormal() {
    static constexpr double inv_sqrt2 = 0.7071067811865475244;
    const double re = normal();
    const double im = normal();
    return {re * inv_sqrt2, im * inv_sqrt2};
  }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uni_{0.0, 1.0};
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

}  // namespace bdris
