#include <algorithm>

#include "shq/diff/linalg.hpp"
#include "shq/diff/ops.hpp"
#include "shq/errors.hpp"
#include "shq/kernels/kernels.hpp"

namespace shq {
namespace {

struct ConvGeometry {
  std::size_t batch, c_in, height, width;
  std::size_t c_out, kernel, stride, padding;
  std::size_t out_h, out_w;

  std::size_t patch() const { return c_in * kernel * kernel; }
  std::size_t positions() const { return out_h * out_w; }
};

// Row p of the result holds the receptive field of output position p.
void im2row(const ConvGeometry& g, const double* image, std::vector<double>& rows) {
  rows.assign(g.positions() * g.patch(), 0.0);
  for (std::size_t oy = 0; oy < g.out_h; ++oy)
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      double* row = rows.data() + (oy * g.out_w + ox) * g.patch();
      for (std::size_t c = 0; c < g.c_in; ++c)
        for (std::size_t ky = 0; ky < g.kernel; ++ky) {
          const long y = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
          if (y < 0 || y >= static_cast<long>(g.height)) continue;
          for (std::size_t kx = 0; kx < g.kernel; ++kx) {
            const long x = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
            if (x < 0 || x >= static_cast<long>(g.width)) continue;
            row[(c * g.kernel + ky) * g.kernel + kx] =
                image[(c * g.height + static_cast<std::size_t>(y)) * g.width +
                      static_cast<std::size_t>(x)];
          }
        }
    }
}

void row2im_add(const ConvGeometry& g, const std::vector<double>& rows, std::span<double> image) {
  for (std::size_t oy = 0; oy < g.out_h; ++oy)
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      const double* row = rows.data() + (oy * g.out_w + ox) * g.patch();
      for (std::size_t c = 0; c < g.c_in; ++c)
        for (std::size_t ky = 0; ky < g.kernel; ++ky) {
          const long y = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
          if (y < 0 || y >= static_cast<long>(g.height)) continue;
          for (std::size_t kx = 0; kx < g.kernel; ++kx) {
            const long x = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
            if (x < 0 || x >= static_cast<long>(g.width)) continue;
            image[(c * g.height + static_cast<std::size_t>(y)) * g.width +
                  static_cast<std::size_t>(x)] += row[(c * g.kernel + ky) * g.kernel + kx];
          }
        }
    }
}

}  // namespace

Var conv2d(const Var& input, const Var& kernel, std::size_t stride, std::size_t padding) {
  const Shape& is = input.shape();
  const Shape& ks = kernel.shape();
  if (is.size() != 4 || ks.size() != 4 || ks[1] != is[1] || ks[2] != ks[3]) {
    throw DimensionError("conv2d: input " + shape_string(is) + " incompatible with kernel " +
                         shape_string(ks));
  }
  if (stride == 0) throw DimensionError("conv2d: stride must be >= 1");
  if (ks[2] > is[2] + 2 * padding || ks[3] > is[3] + 2 * padding) {
    throw DimensionError("conv2d: kernel " + shape_string(ks) + " larger than padded input " +
                         shape_string(is));
  }
  ConvGeometry g{is[0], is[1], is[2], is[3], ks[0], ks[2], stride, padding, 0, 0};
  g.out_h = (g.height + 2 * padding - g.kernel) / stride + 1;
  g.out_w = (g.width + 2 * padding - g.kernel) / stride + 1;

  const auto& kt = kernels::active();
  const auto kmat_t = detail::transpose(kernel.value().data(), g.c_out, g.patch());
  std::vector<double> out(g.batch * g.c_out * g.positions());
  std::vector<double> rows, out_t(g.positions() * g.c_out);
  const double* in = input.value().data().data();
  for (std::size_t b = 0; b < g.batch; ++b) {
    im2row(g, in + b * g.c_in * g.height * g.width, rows);
    // out^T[positions, c_out] = rows[positions, patch] . K^T[patch, c_out]
    kt.gemm(g.positions(), g.c_out, g.patch(), rows.data(), kmat_t.data(), out_t.data());
    double* dst = out.data() + b * g.c_out * g.positions();
    for (std::size_t p = 0; p < g.positions(); ++p)
      for (std::size_t c = 0; c < g.c_out; ++c) dst[c * g.positions() + p] = out_t[p * g.c_out + c];
  }

  Tensor iv = input.value(), kv = kernel.value();
  return input.tape().record(
      Tensor({g.batch, g.c_out, g.out_h, g.out_w}, std::move(out)), {input, kernel},
      [g, iv, kv](GradSink& sink) {
        const auto dy = sink.output_grad();
        const bool want_in = sink.wants(0), want_k = sink.wants(1);
        const auto& kt = kernels::active();
        std::vector<double> rows, cols, dk_t(g.patch() * g.c_out, 0.0), tmp(g.patch() * g.c_out);
        std::vector<double> drows;
        const double* in = iv.data().data();
        const std::size_t image = g.c_in * g.height * g.width;
        auto din = sink.input_grad(0);
        for (std::size_t b = 0; b < g.batch; ++b) {
          const double* dyb = dy.data() + b * g.c_out * g.positions();
          const auto dy_t = detail::transpose({dyb, g.c_out * g.positions()}, g.c_out, g.positions());
          if (want_k) {
            im2row(g, in + b * image, rows);
            cols = detail::transpose(rows, g.positions(), g.patch());
            // dK^T[patch, c_out] += cols[patch, positions] . dY^T[positions, c_out]
            kt.gemm(g.patch(), g.c_out, g.positions(), cols.data(), dy_t.data(), tmp.data());
            kt.add(dk_t, tmp, dk_t);
          }
          if (want_in) {
            drows.resize(g.positions() * g.patch());
            kt.gemm(g.positions(), g.patch(), g.c_out, dy_t.data(), kv.data().data(), drows.data());
            row2im_add(g, drows, din.subspan(b * image, image));
          }
        }
        if (want_k) {
          const auto dk = detail::transpose(dk_t, g.patch(), g.c_out);
          auto acc = sink.input_grad(1);
          kt.add(acc, dk, acc);
        }
      });
}

}  // namespace shq
