#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "shq/data/dataset.hpp"
#include "shq/errors.hpp"
#include "shq/search/rng.hpp"

namespace shq::data {

void SyntheticSpec::validate() const {
  if (classes < 2) throw ValidationError("synthetic data needs at least 2 classes");
  if (per_class == 0) throw ValidationError("synthetic data needs at least one sample per class");
  if (steps == 0) throw ValidationError("synthetic data needs at least one time step");
  if (height < 16 || width < 16) throw ValidationError("synthetic frames must be at least 16x16");
  if (!(noise >= 0.0 && noise <= 1.0)) throw ValidationError("noise rate must lie in [0, 1]");
}

std::vector<Event> synthetic_events(const SyntheticSpec& spec, std::uint32_t label, std::size_t index) {
  Rng rng(derive_seed(spec.seed, "sample:" + std::to_string(label) + ":" + std::to_string(index)));
  const double size = static_cast<double>(std::min(spec.height, spec.width));
  const double steps = static_cast<double>(spec.steps);
  const double direction = rng.bernoulli(0.5) ? 1.0 : -1.0;
  const double speed_lo = std::max(1.5, 0.25 * size / steps);
  const double speed_hi = std::max(speed_lo, 0.5 * size / steps);
  const double speed = rng.uniform(speed_lo, speed_hi);
  const double width = rng.uniform(1.5, 3.0);
  const double offset = rng.uniform(-size / 8.0, size / 8.0);

  const double angle = std::numbers::pi * static_cast<double>(label) / static_cast<double>(spec.classes);
  const double nx = -std::sin(angle), ny = std::cos(angle);
  // Leading edge position along the motion direction at continuous time tau.
  auto leading = [&](double tau) { return offset + speed * (tau - 0.5 * steps) + 0.5 * width; };

  std::vector<Event> events;
  for (std::size_t t = 0; t < spec.steps; ++t) {
    const double tau = static_cast<double>(t) + 0.5;
    const double lead0 = leading(static_cast<double>(t)), lead1 = leading(static_cast<double>(t + 1));
    for (std::size_t y = 0; y < spec.height; ++y) {
      for (std::size_t x = 0; x < spec.width; ++x) {
        const double px = static_cast<double>(x) + 0.5 - 0.5 * static_cast<double>(spec.width);
        const double py = static_cast<double>(y) + 0.5 - 0.5 * static_cast<double>(spec.height);
        const double s = direction * (px * nx + py * ny);
        const auto xi = static_cast<std::uint32_t>(x), yi = static_cast<std::uint32_t>(y);
        if (s > lead0 && s <= lead1) events.push_back({tau, xi, yi, 1});
        if (s > lead0 - width && s <= lead1 - width) events.push_back({tau, xi, yi, 0});
      }
    }
  }
  if (spec.noise > 0.0) {
    for (std::size_t t = 0; t < spec.steps; ++t)
      for (std::uint8_t p = 0; p < 2; ++p)
        for (std::size_t y = 0; y < spec.height; ++y)
          for (std::size_t x = 0; x < spec.width; ++x)
            if (rng.bernoulli(spec.noise)) {
              events.push_back({static_cast<double>(t) + 0.5, static_cast<std::uint32_t>(x),
                                static_cast<std::uint32_t>(y), p});
            }
  }
  return events;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.spec = spec;
  std::vector<std::uint32_t> labels;
  for (std::uint32_t k = 0; k < spec.classes; ++k) {
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      const auto events = synthetic_events(spec, k, i);
      ds.samples.push_back({bin_events(events, spec.steps, spec.height, spec.width,
                                       static_cast<double>(spec.steps)),
                            k});
      labels.push_back(k);
    }
  }
  ds.splits = stratified_split(labels, spec.classes, derive_seed(spec.seed, "split"));
  return ds;
}

}  // namespace shq::data
