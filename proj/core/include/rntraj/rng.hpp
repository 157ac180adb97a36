#pragma once

#include <cstdint>
#include <random>

namespace rntraj {

/// Seeded generator with a platform-independent stream.
///
/// The engine is std::mt19937_64 (fully specified by the standard). Uniform and
/// normal draws are derived here rather than through <random> distributions,
/// whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline Rng seeded_rng(std::uint64_t seed) { return Rng(seed); }

/// Mixes a master seed with a stream index (splitmix64 finalizer) so that
/// derived streams are decorrelated.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace rntraj
