#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace shq {

std::uint64_t splitmix64(std::uint64_t& state);

// Independent stream seed for a named consumer ("data", "init", "gumbel",
// ...) derived from one root seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view consumer);

// Thin wrapper over mt19937_64 whose derived draws are defined here rather
// than by the standard library's distributions, so streams are identical
// across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  bool bernoulli(double p) { return uniform01() < p; }
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(uniform01() * static_cast<double>(n));
  }
  // Standard Gumbel draw; U is clamped to [1e-10, 1 - 1e-10].
  double gumbel();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace shq
