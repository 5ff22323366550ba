#include "shq/search/rng.hpp"

#include <algorithm>
#include <cmath>

namespace shq {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view consumer) {
  // FNV-1a of the consumer name, folded into the root and mixed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : consumer) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t state = root ^ h;
  return splitmix64(state);
}

double Rng::gumbel() {
  const double u = std::clamp(uniform01(), 1e-10, 1.0 - 1e-10);
  return -std::log(-std::log(u));
}

}  // namespace shq
