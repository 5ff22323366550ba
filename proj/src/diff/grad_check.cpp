#include "shq/diff/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace shq {
namespace {

double evaluate(const ScalarFn& f, const Tensor& x) {
  Tape tape;
  return f(tape, tape.constant(x)).value().item();
}

}  // namespace

double grad_check(const ScalarFn& f, const Tensor& x, double eps) {
  Tape tape;
  const Var leaf = tape.parameter(x);
  const Var y = f(tape, leaf);
  const Tensor analytic = tape.backward(y).of(leaf);

  double worst = 0.0;
  std::vector<double> probe = x.to_vector();
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = evaluate(f, Tensor(x.shape(), probe));
    probe[i] = orig - eps;
    const double down = evaluate(f, Tensor(x.shape(), probe));
    probe[i] = orig;
    const double numeric = (up - down) / (2.0 * eps);
    const double err = std::fabs(analytic[i] - numeric) / std::max(1.0, std::fabs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace shq
