#include "shq/snn/lif.hpp"

#include <cmath>
#include <string>

#include "shq/diff/ops.hpp"
#include "shq/errors.hpp"
#include "shq/kernels/kernels.hpp"

namespace shq::snn {

void LifConfig::validate() const {
  if (!(threshold > 0.0)) throw ValidationError("lif: threshold must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw ValidationError("lif: decay must lie in (0, 1]");
  if (!(surrogate_width > 0.0)) throw ValidationError("lif: surrogate width must be positive");
}

double surrogate_grad(double membrane, const LifConfig& cfg) {
  return std::fabs(membrane - cfg.threshold) <= 0.5 * cfg.surrogate_width ? 1.0 / cfg.surrogate_width
                                                                           : 0.0;
}

Var spike_fn(const Var& membrane, const LifConfig& cfg) {
  const auto forward = [cfg](const Tensor& u) {
    std::vector<double> s(u.numel());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = u[i] >= cfg.threshold ? 1.0 : 0.0;
    return Tensor(u.shape(), std::move(s));
  };
  const auto mask = [cfg](const Tensor& u) {
    std::vector<double> m(u.numel());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = surrogate_grad(u[i], cfg);
    return Tensor(u.shape(), std::move(m));
  };
  return custom_grad(membrane, forward, mask);
}

LifStep lif_step(const Var& v, const Var& current, const LifConfig& cfg) {
  if (v.shape() != current.shape()) {
    throw DimensionError("lif_step: state " + shape_string(v.shape()) + " vs current " +
                         shape_string(current.shape()));
  }
  const Var u = add(scale(v, cfg.decay), current);
  const Var s = spike_fn(u, cfg);
  const Var state = sub(u, mul(u, s));
  return LifStep{s, state};
}

Var lif(const Var& current, std::size_t steps, const LifConfig& cfg) {
  const std::size_t total = current.numel();
  if (steps == 0 || total % steps != 0) {
    throw DimensionError("lif: " + std::to_string(total) + " elements do not split into " +
                         std::to_string(steps) + " steps");
  }
  const std::size_t slab = total / steps;
  const auto x = current.value().data();
  std::vector<double> membrane(total), spikes(total), v(slab, 0.0);
  const auto& kt = kernels::active();
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t off = t * slab;
    kt.lif_step(v, x.subspan(off, slab), cfg.decay, cfg.threshold,
                std::span<double>(membrane).subspan(off, slab),
                std::span<double>(spikes).subspan(off, slab));
  }
  Tensor out(current.shape(), spikes);
  return current.tape().record(
      std::move(out), {current},
      [membrane = std::move(membrane), spikes, steps, slab, cfg](GradSink& g) {
        if (!g.wants(0)) return;
        const auto gs = g.output_grad();
        auto gx = g.input_grad(0);
        // gv holds dL/dv_t (post-reset state) flowing back from step t+1.
        std::vector<double> gv(slab, 0.0);
        for (std::size_t t = steps; t-- > 0;) {
          const std::size_t off = t * slab;
          for (std::size_t i = 0; i < slab; ++i) {
            const double u = membrane[off + i];
            const double s = spikes[off + i];
            const double g_spike = gs[off + i] - gv[i] * u;
            const double g_u = gv[i] * (1.0 - s) + g_spike * surrogate_grad(u, cfg);
            gx[off + i] += g_u;
            gv[i] = cfg.decay * g_u;
          }
        }
      });
}

}  // namespace shq::snn
