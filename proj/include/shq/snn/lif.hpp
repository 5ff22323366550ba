#pragma once

#include <utility>

#include "shq/diff/tape.hpp"

namespace shq::snn {

struct LifConfig {
  double threshold = 1.0;
  double decay = 0.5;  // multiplicative leak applied to the carried membrane
  double surrogate_width = 1.0;

  void validate() const;
};

// Rectangular surrogate derivative of the spike w.r.t. the membrane.
double surrogate_grad(double membrane, const LifConfig& cfg);

// heaviside(u - threshold) with the rectangular surrogate as its gradient.
Var spike_fn(const Var& membrane, const LifConfig& cfg);

struct LifStep {
  Var spikes;
  Var state;  // membrane after hard reset
};

// One step built from recorded primitives: u = decay * v + I, spike,
// v' = u * (1 - spike). Used as the reference for the fused op below.
LifStep lif_step(const Var& v, const Var& current, const LifConfig& cfg);

// Unrolled neuron over `steps` time steps. `current` is time-major: the first
// numel/steps entries are step 0, and so on. Membrane starts at zero.
// Returns spikes of the same shape, with hand-written BPTT backward.
Var lif(const Var& current, std::size_t steps, const LifConfig& cfg);

}  // namespace shq::snn
