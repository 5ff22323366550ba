#pragma once

#include <cmath>
#include <cstring>
#include <span>
#include <vector>

#include "shq/diff/tensor.hpp"
#include "shq/search/rng.hpp"

namespace shq::testing {

inline Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v));
}

inline Tensor random_spikes(Rng& rng, Shape shape, double p = 0.3) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.bernoulli(p) ? 1.0 : 0.0;
  return Tensor(std::move(shape), std::move(v));
}

inline bool bit_equal(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  return true;
}

}  // namespace shq::testing
