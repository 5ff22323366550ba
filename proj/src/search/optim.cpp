#include "shq/search/optim.hpp"

#include <cmath>
#include <numbers>

#include "shq/errors.hpp"

namespace shq {

Tensor Adam::step(const std::string& name, const Tensor& param, std::span<const double> grad, double lr,
                  double weight_decay) {
  if (grad.size() != param.numel()) {
    throw DimensionError("adam: gradient for " + name + " has " + std::to_string(grad.size()) +
                         " entries, parameter has " + std::to_string(param.numel()));
  }
  Slot& s = slots_[name];
  if (s.m.empty()) {
    s.m.assign(param.numel(), 0.0);
    s.v.assign(param.numel(), 0.0);
  }
  ++s.t;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(s.t));
  std::vector<double> p = param.to_vector();
  for (std::size_t i = 0; i < p.size(); ++i) {
    s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * grad[i];
    s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    const double mhat = s.m[i] / bc1;
    const double vhat = s.v[i] / bc2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + weight_decay * p[i]);
  }
  return Tensor(param.shape(), std::move(p));
}

double LrSchedule::at(std::size_t step) const {
  if (step < warmup) {
    return start + (peak - start) * static_cast<double>(step) / static_cast<double>(warmup);
  }
  const std::size_t span = total > warmup ? total - warmup : 1;
  const double progress = std::min(1.0, static_cast<double>(step - warmup) / static_cast<double>(span));
  return end + 0.5 * (peak - end) * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace shq
