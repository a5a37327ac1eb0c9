#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tgrg {

// Mixes a stream index into a master seed (splitmix64 finalizer). Used to
// derive independent per-replication seeds that do not depend on scheduling.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Random source with a fixed draw-count contract: uniform() consumes exactly
// one engine step and normal() exactly two (Box-Muller without caching).
// Simulators rely on this to consume the same number of draws on every code
// path, so a restricted model (e.g. copy weight zero) replays the exact
// stream of its general counterpart.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1), 53-bit resolution, one engine step.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal, always two engine steps.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tgrg
