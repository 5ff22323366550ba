#pragma once

#include <functional>

#include "shq/diff/tape.hpp"

namespace shq {

// Builds a scalar on `tape` from the leaf `x`.
using ScalarFn = std::function<Var(Tape& tape, const Var& x)>;

// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
double grad_check(const ScalarFn& f, const Tensor& x, double eps = 1e-5);

}  // namespace shq
