#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "shq/diff/tensor.hpp"

namespace shq {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with optional decoupled weight decay (AdamW when decay > 0). State
// is keyed by parameter name.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Returns the updated tensor.
  Tensor step(const std::string& name, const Tensor& param, std::span<const double> grad, double lr,
              double weight_decay = 0.0);

 private:
  struct Slot {
    std::vector<double> m, v;
    std::size_t t = 0;
  };
  AdamConfig cfg_;
  std::map<std::string, Slot> slots_;
};

// Linear warmup from `start` to `peak` over `warmup` steps, then cosine
// decay to `end` at step `total`.
struct LrSchedule {
  double start = 1e-4;
  double peak = 1e-3;
  double end = 1e-5;
  std::size_t warmup = 0;
  std::size_t total = 1;

  double at(std::size_t step) const;
};

}  // namespace shq
