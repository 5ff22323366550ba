#include <arm_neon.h>

#include <cmath>
#include <cstring>

#include "kernels_internal.hpp"

namespace shq::kernels {
namespace {

constexpr std::size_t kLanes = 2;

void axpy_neon(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = y.size();
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const float64x2_t p = vmulq_f64(va, vld1q_f64(x.data() + i));
    vst1q_f64(y.data() + i, vaddq_f64(vld1q_f64(y.data() + i), p));
  }
  for (; i < n; ++i) {
    const double prod = alpha * x[i];
    y[i] = y[i] + prod;
  }
}

void gemm_neon(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
               double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = c + i * n;
    std::memset(row, 0, n * sizeof(double));
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double alpha = arow[p];
      if (alpha == 0.0) continue;
      axpy_neon(alpha, {b + p * n, n}, {row, n});
    }
  }
}

void add_neon(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  std::size_t i = 0;
  for (; i + kLanes <= out.size(); i += kLanes)
    vst1q_f64(out.data() + i, vaddq_f64(vld1q_f64(a.data() + i), vld1q_f64(b.data() + i)));
  for (; i < out.size(); ++i) out[i] = a[i] + b[i];
}

void sub_neon(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  std::size_t i = 0;
  for (; i + kLanes <= out.size(); i += kLanes)
    vst1q_f64(out.data() + i, vsubq_f64(vld1q_f64(a.data() + i), vld1q_f64(b.data() + i)));
  for (; i < out.size(); ++i) out[i] = a[i] - b[i];
}

void mul_neon(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  std::size_t i = 0;
  for (; i + kLanes <= out.size(); i += kLanes)
    vst1q_f64(out.data() + i, vmulq_f64(vld1q_f64(a.data() + i), vld1q_f64(b.data() + i)));
  for (; i < out.size(); ++i) out[i] = a[i] * b[i];
}

void scale_neon(std::span<const double> a, double s, std::span<double> out) {
  const float64x2_t vs = vdupq_n_f64(s);
  std::size_t i = 0;
  for (; i + kLanes <= out.size(); i += kLanes)
    vst1q_f64(out.data() + i, vmulq_f64(vld1q_f64(a.data() + i), vs));
  for (; i < out.size(); ++i) out[i] = a[i] * s;
}

void uniform_quantize_neon(std::span<const double> x, double s, double z, double qmax,
                           std::span<double> out, std::span<std::uint8_t> pass) {
  const float64x2_t vs = vdupq_n_f64(s);
  const float64x2_t vz = vdupq_n_f64(z);
  const float64x2_t vmax = vdupq_n_f64(qmax);
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kLanes <= x.size(); i += kLanes) {
    const float64x2_t q = vaddq_f64(vrndnq_f64(vdivq_f64(vld1q_f64(x.data() + i), vs)), vz);
    const uint64x2_t below = vcltq_f64(q, zero);
    const uint64x2_t above = vcgtq_f64(q, vmax);
    float64x2_t clamped = vbslq_f64(above, vmax, q);
    clamped = vbslq_f64(below, zero, clamped);
    vst1q_f64(out.data() + i, vmulq_f64(vs, vsubq_f64(clamped, vz)));
    const uint64x2_t outside = vorrq_u64(below, above);
    pass[i] = vgetq_lane_u64(outside, 0) ? 0 : 1;
    pass[i + 1] = vgetq_lane_u64(outside, 1) ? 0 : 1;
  }
  for (; i < x.size(); ++i) {
    const double q = std::nearbyint(x[i] / s) + z;
    pass[i] = (q >= 0.0 && q <= qmax) ? 1 : 0;
    const double clamped = q < 0.0 ? 0.0 : (q > qmax ? qmax : q);
    out[i] = s * (clamped - z);
  }
}

void pot_quantize_neon(std::span<const double> x, double s, double dead_zone,
                       std::span<double> out, std::span<std::uint8_t> pass) {
  const float64x2_t vs = vdupq_n_f64(s);
  const float64x2_t vdead = vdupq_n_f64(dead_zone);
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t zero = vdupq_n_f64(0.0);
  const uint64x2_t sign_bit = vdupq_n_u64(0x8000000000000000ULL);
  const uint64x2_t exponent_bits = vdupq_n_u64(0x7FF0000000000000ULL);
  std::size_t i = 0;
  for (; i + kLanes <= x.size(); i += kLanes) {
    const float64x2_t scaled = vdivq_f64(vld1q_f64(x.data() + i), vs);
    const float64x2_t mag = vabsq_f64(scaled);
    float64x2_t q = vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(mag), exponent_bits));
    q = vbslq_f64(vcgeq_f64(mag, one), one, q);
    q = vbslq_f64(vcltq_f64(mag, vdead), zero, q);
    q = vreinterpretq_f64_u64(
        vorrq_u64(vreinterpretq_u64_f64(q), vandq_u64(vreinterpretq_u64_f64(scaled), sign_bit)));
    vst1q_f64(out.data() + i, vmulq_f64(q, vs));
    const uint64x2_t inside = vcleq_f64(mag, one);
    pass[i] = vgetq_lane_u64(inside, 0) ? 1 : 0;
    pass[i + 1] = vgetq_lane_u64(inside, 1) ? 1 : 0;
  }
  for (; i < x.size(); ++i) {
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

void lif_step_neon(std::span<double> v, std::span<const double> current, double decay,
                   double threshold, std::span<double> membrane, std::span<double> spikes) {
  const float64x2_t vdecay = vdupq_n_f64(decay);
  const float64x2_t vth = vdupq_n_f64(threshold);
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kLanes <= v.size(); i += kLanes) {
    const float64x2_t leak = vmulq_f64(vdecay, vld1q_f64(v.data() + i));
    const float64x2_t u = vaddq_f64(leak, vld1q_f64(current.data() + i));
    const uint64x2_t fire = vcgeq_f64(u, vth);
    vst1q_f64(membrane.data() + i, u);
    vst1q_f64(spikes.data() + i, vbslq_f64(fire, one, zero));
    vst1q_f64(v.data() + i, vbslq_f64(fire, zero, u));
  }
  for (; i < v.size(); ++i) {
    const double leak = decay * v[i];
    const double u = leak + current[i];
    const bool fire = u >= threshold;
    membrane[i] = u;
    spikes[i] = fire ? 1.0 : 0.0;
    v[i] = fire ? 0.0 : u;
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{
      Isa::Neon,      gemm_neon,          add_neon,          sub_neon,
      mul_neon,       scale_neon,         axpy_neon,         uniform_quantize_neon,
      pot_quantize_neon, lif_step_neon,
  };
  return table;
}

}  // namespace shq::kernels
