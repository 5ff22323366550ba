#include "shq/snn/layers.hpp"

#include <string>
#include <vector>

#include "shq/errors.hpp"

namespace shq::snn {

Var maxpool2x2(const Var& x) {
  const Shape& s = x.shape();
  if (s.size() != 4 || s[2] % 2 != 0 || s[3] % 2 != 0) {
    throw DimensionError("maxpool2x2: expected [B,C,H,W] with even H and W, got " + shape_string(s));
  }
  const std::size_t planes = s[0] * s[1], h = s[2], w = s[3], oh = h / 2, ow = w / 2;
  const auto in = x.value().data();
  std::vector<double> out(planes * oh * ow);
  std::vector<std::size_t> src(out.size());
  for (std::size_t p = 0; p < planes; ++p) {
    const std::size_t base = p * h * w;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t best = base + 2 * i * w + 2 * j;
        const std::size_t cand[3] = {best + 1, best + w, best + w + 1};
        for (std::size_t c : cand)
          if (in[c] > in[best]) best = c;
        const std::size_t o = (p * oh + i) * ow + j;
        out[o] = in[best];
        src[o] = best;
      }
    }
  }
  return x.tape().record(Tensor({s[0], s[1], oh, ow}, std::move(out)), {x},
                         [src = std::move(src)](GradSink& g) {
                           if (!g.wants(0)) return;
                           const auto dy = g.output_grad();
                           auto dx = g.input_grad(0);
                           for (std::size_t o = 0; o < src.size(); ++o) dx[src[o]] += dy[o];
                         });
}

Var channels_to_tokens(const Var& x) {
  const Shape& s = x.shape();
  if (s.size() != 4) throw DimensionError("channels_to_tokens: expected rank 4, got " + shape_string(s));
  const std::size_t groups = s[0], d = s[1], n = s[2] * s[3];
  const auto in = x.value().data();
  std::vector<double> out(in.size());
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t c = 0; c < d; ++c)
      for (std::size_t p = 0; p < n; ++p) out[(g * n + p) * d + c] = in[(g * d + c) * n + p];
  return x.tape().record(Tensor({groups * n, d}, std::move(out)), {x}, [=](GradSink& g) {
    if (!g.wants(0)) return;
    const auto dy = g.output_grad();
    auto dx = g.input_grad(0);
    for (std::size_t gi = 0; gi < groups; ++gi)
      for (std::size_t c = 0; c < d; ++c)
        for (std::size_t p = 0; p < n; ++p) dx[(gi * d + c) * n + p] += dy[(gi * n + p) * d + c];
  });
}

Var add_tiled(const Var& x, const Var& p) {
  const Shape& xs = x.shape();
  const Shape& ps = p.shape();
  if (xs.size() != 2 || ps.size() != 2 || xs[1] != ps[1] || xs[0] % ps[0] != 0) {
    throw DimensionError("add_tiled: cannot tile " + shape_string(ps) + " over " + shape_string(xs));
  }
  const std::size_t block = p.numel();
  const auto xv = x.value().data();
  const auto pv = p.value().data();
  std::vector<double> out(xv.begin(), xv.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += pv[i % block];
  return x.tape().record(Tensor(xs, std::move(out)), {x, p}, [block](GradSink& g) {
    const auto dy = g.output_grad();
    if (g.wants(0)) {
      auto dx = g.input_grad(0);
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
    }
    if (g.wants(1)) {
      auto dp = g.input_grad(1);
      for (std::size_t i = 0; i < dy.size(); ++i) dp[i % block] += dy[i];
    }
  });
}

Var spike_attention(const Var& q, const Var& k, const Var& v, std::size_t groups, std::size_t heads,
                    double scale) {
  const Shape& s = q.shape();
  if (s.size() != 2 || k.shape() != s || v.shape() != s) {
    throw DimensionError("spike_attention: q " + shape_string(s) + ", k " + shape_string(k.shape()) +
                         ", v " + shape_string(v.shape()));
  }
  if (groups == 0 || s[0] % groups != 0 || heads == 0 || s[1] % heads != 0) {
    throw DimensionError("spike_attention: " + shape_string(s) + " does not split into " +
                         std::to_string(groups) + " groups and " + std::to_string(heads) + " heads");
  }
  const std::size_t n = s[0] / groups, dim = s[1], dh = dim / heads;
  const Tensor qv = q.value(), kv = k.value(), vv = v.value();

  // Y = scale * Q (K^T V), evaluated per (group, head) block. With binary
  // operands every partial sum is an integer, so the association order does
  // not change the result.
  auto kt_v = [n, dim, dh](std::size_t g, std::size_t h, const Tensor& a, const Tensor& b) {
    std::vector<double> m(dh * dh, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t row = (g * n + r) * dim + h * dh;
      for (std::size_t i = 0; i < dh; ++i) {
        const double ai = a[row + i];
        if (ai == 0.0) continue;
        for (std::size_t j = 0; j < dh; ++j) m[i * dh + j] += ai * b[row + j];
      }
    }
    return m;
  };

  std::vector<double> out(q.numel(), 0.0);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t h = 0; h < heads; ++h) {
      const auto m = kt_v(g, h, kv, vv);
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t row = (g * n + r) * dim + h * dh;
        for (std::size_t i = 0; i < dh; ++i) {
          const double qi = qv[row + i];
          if (qi == 0.0) continue;
          for (std::size_t j = 0; j < dh; ++j) out[row + j] += qi * m[i * dh + j];
        }
        for (std::size_t j = 0; j < dh; ++j) out[row + j] *= scale;
      }
    }
  }

  return q.tape().record(
      Tensor(s, std::move(out)), {q, k, v}, [=](GradSink& sink) {
        const auto dy = sink.output_grad();
        for (std::size_t g = 0; g < groups; ++g) {
          for (std::size_t h = 0; h < heads; ++h) {
            if (sink.wants(0)) {
              // dQ = scale * dY M^T
              const auto m = kt_v(g, h, kv, vv);
              auto dq = sink.input_grad(0);
              for (std::size_t r = 0; r < n; ++r) {
                const std::size_t row = (g * n + r) * dim + h * dh;
                for (std::size_t i = 0; i < dh; ++i) {
                  double acc = 0.0;
                  for (std::size_t j = 0; j < dh; ++j) acc += dy[row + j] * m[i * dh + j];
                  dq[row + i] += scale * acc;
                }
              }
            }
            if (!sink.wants(1) && !sink.wants(2)) continue;
            // dM = scale * Q^T dY
            std::vector<double> dm(dh * dh, 0.0);
            for (std::size_t r = 0; r < n; ++r) {
              const std::size_t row = (g * n + r) * dim + h * dh;
              for (std::size_t i = 0; i < dh; ++i) {
                const double qi = qv[row + i];
                if (qi == 0.0) continue;
                for (std::size_t j = 0; j < dh; ++j) dm[i * dh + j] += qi * dy[row + j];
              }
            }
            for (double& e : dm) e *= scale;
            for (std::size_t r = 0; r < n; ++r) {
              const std::size_t row = (g * n + r) * dim + h * dh;
              if (sink.wants(1)) {
                // dK = V dM^T
                auto dk = sink.input_grad(1);
                for (std::size_t i = 0; i < dh; ++i) {
                  double acc = 0.0;
                  for (std::size_t j = 0; j < dh; ++j) acc += vv[row + j] * dm[i * dh + j];
                  dk[row + i] += acc;
                }
              }
              if (sink.wants(2)) {
                // dV = K dM
                auto dv = sink.input_grad(2);
                for (std::size_t i = 0; i < dh; ++i) {
                  const double ki = kv[row + i];
                  if (ki == 0.0) continue;
                  for (std::size_t j = 0; j < dh; ++j) dv[row + j] += ki * dm[i * dh + j];
                }
              }
            }
          }
        }
      });
}

Var token_mean_pool(const Var& x, std::size_t steps, std::size_t batch) {
  const Shape& s = x.shape();
  if (s.size() != 2 || steps == 0 || batch == 0 || s[0] % (steps * batch) != 0) {
    throw DimensionError("token_mean_pool: " + shape_string(s) + " does not split into " +
                         std::to_string(steps) + " steps x " + std::to_string(batch) + " samples");
  }
  const std::size_t tokens = s[0] / (steps * batch), d = s[1];
  const double inv = 1.0 / static_cast<double>(steps * tokens);
  const auto in = x.value().data();
  std::vector<double> out(batch * d, 0.0);
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t n = 0; n < tokens; ++n) {
        const std::size_t row = ((t * batch + b) * tokens + n) * d;
        for (std::size_t c = 0; c < d; ++c) out[b * d + c] += in[row + c];
      }
  for (double& e : out) e *= inv;
  return x.tape().record(Tensor({batch, d}, std::move(out)), {x}, [=](GradSink& g) {
    if (!g.wants(0)) return;
    const auto dy = g.output_grad();
    auto dx = g.input_grad(0);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t n = 0; n < tokens; ++n) {
          const std::size_t row = ((t * batch + b) * tokens + n) * d;
          for (std::size_t c = 0; c < d; ++c) dx[row + c] += dy[b * d + c] * inv;
        }
  });
}

}  // namespace shq::snn
