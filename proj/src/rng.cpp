#include "fns/rng.hpp"

#include <cmath>
#include <numbers>

namespace fns {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t CounterRng::bits(std::uint64_t index) const {
  return splitmix64(splitmix64(splitmix64(seed_) ^ stream_) + index);
}

double CounterRng::uniform(std::uint64_t index) const {
  // 53 random mantissa bits, shifted off zero
  return (static_cast<double>(bits(index) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t index) const {
  const double u1 = uniform(2 * index);
  const double u2 = uniform(2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

CounterRng CounterRng::substream(std::uint64_t s) const {
  return CounterRng(seed_, splitmix64(stream_ * 0x2545f4914f6cdd1dULL + s + 1));
}

}  // namespace fns
