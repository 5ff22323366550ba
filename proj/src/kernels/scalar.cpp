#include <cmath>
#include <cstring>

#include "kernels_internal.hpp"

namespace shq::kernels {
namespace {

void axpy_scalar(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double prod = alpha * x[i];
    y[i] = y[i] + prod;
  }
}

void gemm_scalar(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                 double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = c + i * n;
    std::memset(row, 0, n * sizeof(double));
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double alpha = arow[p];
      if (alpha == 0.0) continue;
      axpy_scalar(alpha, {b + p * n, n}, {row, n});
    }
  }
}

void add_scalar(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
}

void sub_scalar(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
}

void mul_scalar(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
}

void scale_scalar(std::span<const double> a, double s, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * s;
}

void uniform_quantize_scalar(std::span<const double> x, double s, double z, double qmax,
                             std::span<double> out, std::span<std::uint8_t> pass) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    // nearbyint honours the default round-to-nearest-even mode.
    const double q = std::nearbyint(x[i] / s) + z;
    pass[i] = (q >= 0.0 && q <= qmax) ? 1 : 0;
    const double clamped = q < 0.0 ? 0.0 : (q > qmax ? qmax : q);
    out[i] = s * (clamped - z);
  }
}

void pot_quantize_scalar(std::span<const double> x, double s, double dead_zone,
                         std::span<double> out, std::span<std::uint8_t> pass) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double scaled = x[i] / s;
    const double mag = std::fabs(scaled);
    pass[i] = mag <= 1.0 ? 1 : 0;
    double q;
    if (mag < dead_zone) {
      q = 0.0;
    } else if (mag >= 1.0) {
      q = 1.0;
    } else {
      q = std::ldexp(1.0, std::ilogb(mag));
    }
    out[i] = (std::signbit(scaled) ? -q : q) * s;
  }
}

void lif_step_scalar(std::span<double> v, std::span<const double> current, double decay,
                     double threshold, std::span<double> membrane, std::span<double> spikes) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double leak = decay * v[i];
    const double u = leak + current[i];
    const bool fire = u >= threshold;
    membrane[i] = u;
    spikes[i] = fire ? 1.0 : 0.0;
    v[i] = fire ? 0.0 : u;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      Isa::Scalar,      gemm_scalar,         add_scalar,          sub_scalar,
      mul_scalar,       scale_scalar,        axpy_scalar,         uniform_quantize_scalar,
      pot_quantize_scalar, lif_step_scalar,
  };
  return table;
}

}  // namespace shq::kernels
