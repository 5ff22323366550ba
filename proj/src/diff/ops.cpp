#include "shq/diff/ops.hpp"

#include <algorithm>
#include <cmath>

#include "shq/diff/linalg.hpp"
#include "shq/errors.hpp"
#include "shq/kernels/kernels.hpp"

namespace shq {
namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

namespace detail {

std::vector<double> transpose(std::span<const double> a, std::size_t rows, std::size_t cols) {
  std::vector<double> t(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = a[i * cols + j];
  return t;
}

void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                     std::span<double> c) {
  std::vector<double> tmp(m * n);
  const auto& kt = kernels::active();
  kt.gemm(m, n, k, a, b, tmp.data());
  kt.add(c, tmp, c);
}

}  // namespace detail

Var matmul(const Var& a, const Var& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0]) {
    throw DimensionError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(m * n);
  kernels::active().gemm(m, n, k, a.value().data().data(), b.value().data().data(), out.data());
  Tensor av = a.value(), bv = b.value();
  return a.tape().record(Tensor({m, n}, std::move(out)), {a, b}, [=](GradSink& g) {
    const auto dc = g.output_grad();
    if (g.wants(0)) {
      // dA = dC . B^T
      const auto bt = detail::transpose(bv.data(), k, n);
      detail::gemm_accumulate(m, k, n, dc.data(), bt.data(), g.input_grad(0));
    }
    if (g.wants(1)) {
      // dB = A^T . dC
      const auto at = detail::transpose(av.data(), m, k);
      detail::gemm_accumulate(k, n, m, at.data(), dc.data(), g.input_grad(1));
    }
  });
}

Var linear(const Var& x, const Var& w) {
  if (x.shape().size() != 2 || w.shape().size() != 2 || x.shape()[1] != w.shape()[1]) {
    throw DimensionError("linear: incompatible shapes " + shape_string(x.shape()) + " and " +
                         shape_string(w.shape()));
  }
  const std::size_t n = x.shape()[0], in = x.shape()[1], out_f = w.shape()[0];
  const auto wt = detail::transpose(w.value().data(), out_f, in);
  std::vector<double> out(n * out_f);
  kernels::active().gemm(n, out_f, in, x.value().data().data(), wt.data(), out.data());
  Tensor xv = x.value(), wv = w.value();
  return x.tape().record(Tensor({n, out_f}, std::move(out)), {x, w}, [=](GradSink& g) {
    const auto dy = g.output_grad();
    if (g.wants(0)) {
      // dX = dY . W
      detail::gemm_accumulate(n, in, out_f, dy.data(), wv.data().data(), g.input_grad(0));
    }
    if (g.wants(1)) {
      // dW^T = X^T . dY keeps the (often binary) activations on the sparse side.
      const auto xt = detail::transpose(xv.data(), n, in);
      std::vector<double> dwt(in * out_f);
      kernels::active().gemm(in, out_f, n, xt.data(), dy.data(), dwt.data());
      const auto dw = detail::transpose(dwt, in, out_f);
      auto acc = g.input_grad(1);
      kernels::active().add(acc, dw, acc);
    }
  });
}

Var elementwise(Elementwise op, const Var& a, const Var& b) {
  const bool broadcast = b.numel() == 1 && a.numel() != 1;
  if (!broadcast && a.shape() != b.shape()) {
    // A one-element tensor of any rank matches a scalar operand.
    if (!(a.numel() == 1 && b.numel() == 1)) require_same_shape(a, b, "elementwise");
  }
  const std::size_t n = a.numel();
  const auto& kt = kernels::active();
  std::vector<double> out(n);
  std::vector<double> bfull;
  std::span<const double> bv = b.value().data();
  if (broadcast) {
    bfull.assign(n, b.value()[0]);
    bv = bfull;
  }
  switch (op) {
    case Elementwise::Add: kt.add(a.value().data(), bv, out); break;
    case Elementwise::Sub: kt.sub(a.value().data(), bv, out); break;
    case Elementwise::Mul: kt.mul(a.value().data(), bv, out); break;
  }
  Tensor av = a.value(), bt = b.value();
  return a.tape().record(Tensor(a.shape(), std::move(out)), {a, b}, [=](GradSink& g) {
    const auto dy = g.output_grad();
    if (g.wants(0)) {
      auto da = g.input_grad(0);
      for (std::size_t i = 0; i < n; ++i) {
        da[i] += op == Elementwise::Mul ? dy[i] * (broadcast ? bt[0] : bt[i]) : dy[i];
      }
    }
    if (g.wants(1)) {
      auto db = g.input_grad(1);
      for (std::size_t i = 0; i < n; ++i) {
        double v = dy[i];
        if (op == Elementwise::Sub) v = -v;
        if (op == Elementwise::Mul) v *= av[i];
        db[broadcast ? 0 : i] += v;
      }
    }
  });
}

Var add(const Var& a, const Var& b) { return elementwise(Elementwise::Add, a, b); }
Var sub(const Var& a, const Var& b) { return elementwise(Elementwise::Sub, a, b); }
Var mul(const Var& a, const Var& b) { return elementwise(Elementwise::Mul, a, b); }

Var scale(const Var& a, double factor) {
  std::vector<double> out(a.numel());
  kernels::active().scale(a.value().data(), factor, out);
  return a.tape().record(Tensor(a.shape(), std::move(out)), {a}, [factor](GradSink& g) {
    auto da = g.input_grad(0);
    kernels::active().axpy(factor, g.output_grad(), da);
  });
}

Var add_scalar(const Var& a, double offset) {
  std::vector<double> out(a.value().data().begin(), a.value().data().end());
  for (double& v : out) v += offset;
  return a.tape().record(Tensor(a.shape(), std::move(out)), {a}, [](GradSink& g) {
    auto da = g.input_grad(0);
    kernels::active().add(da, g.output_grad(), da);
  });
}

Var pow_scalar(const Var& a, double exponent) {
  const auto av = a.value().data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (!(av[i] > 0.0)) throw ValidationError("pow_scalar: base must be positive");
    out[i] = std::pow(av[i], exponent);
  }
  Tensor in = a.value();
  return a.tape().record(Tensor(a.shape(), std::move(out)), {a}, [in, exponent](GradSink& g) {
    auto da = g.input_grad(0);
    const auto dy = g.output_grad();
    for (std::size_t i = 0; i < da.size(); ++i) {
      da[i] += dy[i] * exponent * std::pow(in[i], exponent - 1.0);
    }
  });
}

Var pass_through(const Var& a) {
  return a.tape().record(a.value().with_requires_grad(false), {a}, [](GradSink& g) {
    auto da = g.input_grad(0);
    kernels::active().add(da, g.output_grad(), da);
  });
}

Var custom_grad(const Var& x, const TensorMap& forward, const TensorMap& backward_mask) {
  Tensor out = forward(x.value());
  if (out.shape() != x.shape()) {
    throw DimensionError("custom_grad: forward changed shape " + shape_string(x.shape()) + " -> " +
                         shape_string(out.shape()));
  }
  Tensor mask = backward_mask(x.value());
  if (mask.shape() != x.shape()) {
    throw DimensionError("custom_grad: mask shape " + shape_string(mask.shape()) +
                         " does not match input " + shape_string(x.shape()));
  }
  return x.tape().record(out.with_requires_grad(false), {x}, [mask](GradSink& g) {
    auto dx = g.input_grad(0);
    const auto dy = g.output_grad();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * mask[i];
  });
}

Var masked_pass_through(const Var& x, Tensor output, std::vector<std::uint8_t> mask) {
  if (output.shape() != x.shape() || mask.size() != x.numel()) {
    throw DimensionError("masked_pass_through: shape mismatch for " + shape_string(x.shape()));
  }
  return x.tape().record(output.with_requires_grad(false), {x},
                         [mask = std::move(mask)](GradSink& g) {
                           auto dx = g.input_grad(0);
                           const auto dy = g.output_grad();
                           for (std::size_t i = 0; i < dx.size(); ++i) {
                             if (mask[i]) dx[i] += dy[i];
                           }
                         });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape().record(Tensor::scalar(s), {a}, [](GradSink& g) {
    const double dy = g.output_grad()[0];
    for (double& d : g.input_grad(0)) d += dy;
  });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshape(std::move(shape)).with_requires_grad(false);
  return a.tape().record(std::move(out), {a}, [](GradSink& g) {
    auto da = g.input_grad(0);
    kernels::active().add(da, g.output_grad(), da);
  });
}

Var dot_constant(const Var& a, std::span<const double> c) {
  if (c.size() != a.numel()) {
    throw DimensionError("dot_constant: " + std::to_string(c.size()) + " coefficients for " +
                         shape_string(a.shape()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += a.value()[i] * c[i];
  std::vector<double> coeffs(c.begin(), c.end());
  return a.tape().record(Tensor::scalar(s), {a}, [coeffs = std::move(coeffs)](GradSink& g) {
    const double dy = g.output_grad()[0];
    auto da = g.input_grad(0);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy * coeffs[i];
  });
}

Var weighted_sum(std::span<const Var> terms, const Var& weights) {
  if (terms.empty() || weights.numel() != terms.size()) {
    throw DimensionError("weighted_sum: " + std::to_string(terms.size()) + " terms vs weights " +
                         shape_string(weights.shape()));
  }
  const Shape& shape = terms[0].shape();
  for (const Var& t : terms) require_same_shape(terms[0], t, "weighted_sum");
  const std::size_t n = terms[0].numel();
  const auto& kt = kernels::active();
  std::vector<double> out(n, 0.0);
  const auto w = weights.value().data();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (w[i] == 0.0) continue;
    kt.axpy(w[i], terms[i].value().data(), out);
  }
  std::vector<Var> inputs(terms.begin(), terms.end());
  inputs.push_back(weights);
  std::vector<Tensor> values;
  for (const Var& t : terms) values.push_back(t.value());
  Tensor wv = weights.value();
  const std::size_t count = terms.size();
  return weights.tape().record(Tensor(shape, std::move(out)), std::move(inputs),
                               [values = std::move(values), wv, count, n](GradSink& g) {
                                 const auto dy = g.output_grad();
                                 for (std::size_t i = 0; i < count; ++i) {
                                   if (g.wants(i)) kernels::active().axpy(wv[i], dy, g.input_grad(i));
                                 }
                                 if (g.wants(count)) {
                                   auto dw = g.input_grad(count);
                                   for (std::size_t i = 0; i < count; ++i) {
                                     double s = 0.0;
                                     const auto ti = values[i].data();
                                     for (std::size_t j = 0; j < n; ++j) s += dy[j] * ti[j];
                                     dw[i] += s;
                                   }
                                 }
                               });
}

Var channel_affine(const Var& x, const Var& gamma, const Var& beta, std::size_t channels,
                   std::size_t inner) {
  if (gamma.numel() != channels || beta.numel() != channels || channels * inner == 0 ||
      x.numel() % (channels * inner) != 0) {
    throw DimensionError("channel_affine: " + shape_string(x.shape()) + " with " +
                         std::to_string(channels) + " channels x " + std::to_string(inner));
  }
  const std::size_t outer = x.numel() / (channels * inner);
  const auto xv = x.value().data();
  const auto gv = gamma.value().data();
  const auto bv = beta.value().data();
  std::vector<double> out(x.numel());
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t base = (o * channels + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) out[base + i] = xv[base + i] * gv[c] + bv[c];
    }
  Tensor xt = x.value(), gt = gamma.value();
  return x.tape().record(
      Tensor(x.shape(), std::move(out)), {x, gamma, beta},
      [xt, gt, outer, channels, inner](GradSink& g) {
        const auto dy = g.output_grad();
        const bool want_x = g.wants(0), want_g = g.wants(1), want_b = g.wants(2);
        auto dx = g.input_grad(0);
        auto dg = g.input_grad(1);
        auto db = g.input_grad(2);
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t base = (o * channels + c) * inner;
            double sg = 0.0, sb = 0.0;
            for (std::size_t i = 0; i < inner; ++i) {
              const double d = dy[base + i];
              if (want_x) dx[base + i] += d * gt[c];
              sg += d * xt[base + i];
              sb += d;
            }
            if (want_g) dg[c] += sg;
            if (want_b) db[c] += sb;
          }
      });
}

Var add_row(const Var& x, const Var& row) {
  if (x.shape().size() != 2 || row.numel() != x.shape()[1]) {
    throw DimensionError("add_row: " + shape_string(x.shape()) + " + " + shape_string(row.shape()));
  }
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  const auto xv = x.value().data();
  const auto rv = row.value().data();
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = xv[r * cols + c] + rv[c];
  return x.tape().record(Tensor(x.shape(), std::move(out)), {x, row},
                         [rows, cols](GradSink& g) {
                           const auto dy = g.output_grad();
                           if (g.wants(0)) {
                             auto dx = g.input_grad(0);
                             kernels::active().add(dx, dy, dx);
                           }
                           if (g.wants(1)) {
                             auto dr = g.input_grad(1);
                             for (std::size_t r = 0; r < rows; ++r)
                               for (std::size_t c = 0; c < cols; ++c) dr[c] += dy[r * cols + c];
                           }
                         });
}

Var softmax(const Var& logits) {
  if (logits.shape().size() != 1) {
    throw DimensionError("softmax expects a rank-1 tensor, got " + shape_string(logits.shape()));
  }
  const auto lv = logits.value().data();
  const double mx = *std::max_element(lv.begin(), lv.end());
  std::vector<double> p(lv.size());
  double z = 0.0;
  for (std::size_t i = 0; i < lv.size(); ++i) z += (p[i] = std::exp(lv[i] - mx));
  for (double& v : p) v /= z;
  Tensor out(logits.shape(), p);
  return logits.tape().record(out, {logits}, [p](GradSink& g) {
    const auto dy = g.output_grad();
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += dy[i] * p[i];
    auto dl = g.input_grad(0);
    for (std::size_t i = 0; i < p.size(); ++i) dl[i] += p[i] * (dy[i] - dot);
  });
}

Var straight_through_onehot(const Var& soft) {
  std::vector<double> onehot(soft.numel(), 0.0);
  onehot[argmax(soft.value().data())] = 1.0;
  return soft.tape().record(Tensor(soft.shape(), std::move(onehot)), {soft}, [](GradSink& g) {
    auto ds = g.input_grad(0);
    kernels::active().add(ds, g.output_grad(), ds);
  });
}

Var softmax_cross_entropy(const Var& logits, std::span<const std::uint32_t> labels) {
  if (logits.shape().size() != 2 || logits.shape()[0] != labels.size()) {
    throw DimensionError("softmax_cross_entropy: logits " + shape_string(logits.shape()) + " vs " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t batch = logits.shape()[0], classes = logits.shape()[1];
  for (std::uint32_t l : labels) {
    if (l >= classes) {
      throw ValidationError("label " + std::to_string(l) + " out of range [0," +
                            std::to_string(classes) + ")");
    }
  }
  const auto lv = logits.value().data();
  std::vector<double> probs(lv.size());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = lv.data() + b * classes;
    const double mx = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t k = 0; k < classes; ++k) z += std::exp(row[k] - mx);
    const double log_z = std::log(z) + mx;
    loss += log_z - row[labels[b]];
    for (std::size_t k = 0; k < classes; ++k) probs[b * classes + k] = std::exp(row[k] - log_z);
  }
  loss /= static_cast<double>(batch);
  std::vector<std::uint32_t> lab(labels.begin(), labels.end());
  return logits.tape().record(
      Tensor::scalar(loss), {logits},
      [probs = std::move(probs), lab = std::move(lab), batch, classes](GradSink& g) {
        const double dy = g.output_grad()[0] / static_cast<double>(batch);
        auto dl = g.input_grad(0);
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t k = 0; k < classes; ++k) {
            const double onehot = k == lab[b] ? 1.0 : 0.0;
            dl[b * classes + k] += dy * (probs[b * classes + k] - onehot);
          }
      });
}

}  // namespace shq
