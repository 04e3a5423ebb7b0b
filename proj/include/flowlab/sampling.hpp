// Reproducible randomness and samples from the invariant measures the
// experiments use.
#pragma once

#include <cstdint>
#include <vector>

#include "flowlab/base_map.hpp"
#include "flowlab/suspension.hpp"

namespace flowlab {

/// Counter-based generator: draw k of a stream is splitmix64's finaliser
/// applied to key + (k + 1) * 0x9E3779B97F4A7C15. Streams are split by hashing
/// the parent key with the child index, so a sample's randomness depends only
/// on (seed, stream path, draw index), never on scheduling.
class CounterRng {
 public:
  static constexpr const char* kAlgorithm = "splitmix64-counter/v1";

  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x6A09E667F3BCC908ULL)) {}

  CounterRng split(std::uint64_t child) const {
    CounterRng r(0);
    r.key_ = mix(key_ ^ mix(child + 0xBB67AE8584CAA73BULL));
    return r;
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  /// Standard normal by Box-Muller (the standard library's distributions are
  /// not portable across implementations).
  double normal();
  std::uint64_t draws() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct BirkhoffOptions {
  std::size_t count = 10000;
  /// Iterates discarded at the start of every chain.
  std::size_t burn_in = 100;
  /// Number of independent chains; count is split evenly across them.
  std::size_t chains = 0;  // 0: one chain per sample
  /// Iterates between recorded samples within a chain.
  std::size_t stride = 1;
};

/// Samples from the base map's Lebesgue-invariant measure by iterating from
/// random seeds. Chain c draws its seed from rng.split(c).
std::vector<TorusPoint> birkhoff_samples(const BaseMap& map, const BirkhoffOptions& options, const CounterRng& rng,
                                         int workers = 1);

/// Points of Omega distributed as mu x Lebesgue on the fiber (the suspension
/// measure): base sample i is lifted to a uniform height drawn from rng.split(i).
std::vector<SuspensionPoint> suspension_samples(const SuspensionFlow& flow, const std::vector<TorusPoint>& base,
                                                const CounterRng& rng);

/// Uniform points of T^m; sample i uses rng.split(i).
std::vector<TorusPoint> uniform_torus_samples(int dim, std::size_t count, const CounterRng& rng);

}  // namespace flowlab
