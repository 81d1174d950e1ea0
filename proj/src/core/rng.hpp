#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace d3fcnn {

/// Deterministic random source. All randomness in the library flows from one
/// root seed fanned out into named sub-streams, so changing how one component
/// consumes numbers never perturbs another.
///
/// The generator is std::mt19937_64 (sequence fixed by the standard); the
/// uniform mappings below are hand-rolled so results do not depend on
/// implementation-defined distribution internals.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Derive an independent sub-stream, e.g. stream("dropout"). Derivation
  /// depends only on this generator's seed, not on its current position.
  Rng stream(std::string_view name) const;

  /// Raw 64 bits.
  std::uint64_t bits() { return gen_(); }

  /// Uniform real in [0, 1).
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform real in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased uniform integer in [0, n); n must be positive.
  std::int64_t uniform_int(std::int64_t n);

  /// Fisher-Yates shuffle.
  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::int64_t i = std::int64_t(v.size()) - 1; i > 0; --i) {
      std::int64_t j = uniform_int(i + 1);
      std::swap(v[i], v[j]);
    }
  }

private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

} // namespace d3fcnn
