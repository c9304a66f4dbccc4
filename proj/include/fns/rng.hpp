#pragma once

#include <cstdint>

namespace fns {

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, index), so parallel sampling stays reproducible.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  std::uint64_t bits(std::uint64_t index) const;
  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t index) const;
  /// Standard normal via Box-Muller on the uniform pair (2 index, 2 index + 1).
  double normal(std::uint64_t index) const;

  CounterRng substream(std::uint64_t s) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Sequential convenience wrapper around CounterRng.
class SeqRng {
 public:
  explicit SeqRng(std::uint64_t seed, std::uint64_t stream = 0) : rng_(seed, stream) {}
  double uniform() { return rng_.uniform(next_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return rng_.normal(next_++); }
  std::uint64_t bits() { return rng_.bits(next_++); }

 private:
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

}  // namespace fns
