#pragma once

#include <cstdint>
#include <random>

#include "zoss/common.hpp"

namespace zoss {

/// Deterministic seed mixing (splitmix64 step) for deriving per-cell seeds
/// in experiment fan-outs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seeded random stream: a mt19937_64 engine plus a Box-Muller normal
/// sampler. Substreams are addressed by (seed, stream); the engine is seeded
/// with the splitmix64 mix of the pair, so concurrent cells of an experiment
/// draw independently while staying reproducible regardless of scheduling.
/// The documented split rule is: stream index = replication (or cell) index.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : engine_(mix_seed(seed, stream)) {}

  /// Uniform double in the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi].
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal draw (Box-Muller, second value cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  void fill_normal(Vec& out) {
    for (double& v : out) v = normal();
  }

  Vec normal_vec(std::size_t d) {
    Vec v(d);
    fill_normal(v);
    return v;
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace zoss
