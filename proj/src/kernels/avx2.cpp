#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "kernels_internal.hpp"

namespace shq::kernels {
namespace {

constexpr std::size_t kLanes = 4;

void axpy_avx2(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = y.size();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
    __m256d y0 = _mm256_loadu_pd(y.data() + i);
    __m256d y1 = _mm256_loadu_pd(y.data() + i + kLanes);
    const __m256d p0 = _mm256_mul_pd(va, _mm256_loadu_pd(x.data() + i));
    const __m256d p1 = _mm256_mul_pd(va, _mm256_loadu_pd(x.data() + i + kLanes));
    _mm256_storeu_pd(y.data() + i, _mm256_add_pd(y0, p0));
    _mm256_storeu_pd(y.data() + i + kLanes, _mm256_add_pd(y1, p1));
  }
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d p = _mm256_mul_pd(va, _mm256_loadu_pd(x.data() + i));
    _mm256_storeu_pd(y.data() + i, _mm256_add_pd(_mm256_loadu_pd(y.data() + i), p));
  }
  for (; i < n; ++i) {
    const double prod = alpha * x[i];
    y[i] = y[i] + prod;
  }
}

void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
               double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = c + i * n;
    std::memset(row, 0, n * sizeof(double));
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double alpha = arow[p];
      if (alpha == 0.0) continue;
      axpy_avx2(alpha, {b + p * n, n}, {row, n});
    }
  }
}

template <class Op, class Tail>
void binary_avx2(std::span<const double> a, std::span<const double> b, std::span<double> out,
                 Op op, Tail tail) {
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(out.data() + i, op(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i)));
  }
  for (; i < n; ++i) out[i] = tail(a[i], b[i]);
}

void add_avx2(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  binary_avx2(a, b, out, [](__m256d x, __m256d y) { return _mm256_add_pd(x, y); },
              [](double x, double y) { return x + y; });
}

void sub_avx2(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  binary_avx2(a, b, out, [](__m256d x, __m256d y) { return _mm256_sub_pd(x, y); },
              [](double x, double y) { return x - y; });
}

void mul_avx2(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  binary_avx2(a, b, out, [](__m256d x, __m256d y) { return _mm256_mul_pd(x, y); },
              [](double x, double y) { return x * y; });
}

void scale_avx2(std::span<const double> a, double s, std::span<double> out) {
  const __m256d vs = _mm256_set1_pd(s);
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(_mm256_loadu_pd(a.data() + i), vs));
  }
  for (; i < n; ++i) out[i] = a[i] * s;
}

inline void store_mask(int bits, std::uint8_t* dst) {
  for (std::size_t lane = 0; lane < kLanes; ++lane) dst[lane] = (bits >> lane) & 1;
}

void uniform_quantize_avx2(std::span<const double> x, double s, double z, double qmax,
                           std::span<double> out, std::span<std::uint8_t> pass) {
  const __m256d vs = _mm256_set1_pd(s);
  const __m256d vz = _mm256_set1_pd(z);
  const __m256d vmax = _mm256_set1_pd(qmax);
  const __m256d zero = _mm256_setzero_pd();
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d ratio = _mm256_div_pd(_mm256_loadu_pd(x.data() + i), vs);
    const __m256d rounded = _mm256_round_pd(ratio, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    const __m256d q = _mm256_add_pd(rounded, vz);
    const __m256d below = _mm256_cmp_pd(q, zero, _CMP_LT_OQ);
    const __m256d above = _mm256_cmp_pd(q, vmax, _CMP_GT_OQ);
    __m256d clamped = _mm256_blendv_pd(q, vmax, above);
    clamped = _mm256_blendv_pd(clamped, zero, below);
    _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(vs, _mm256_sub_pd(clamped, vz)));
    store_mask(~_mm256_movemask_pd(_mm256_or_pd(below, above)) & 0xF, pass.data() + i);
  }
  for (; i < n; ++i) {
    const double q = std::nearbyint(x[i] / s) + z;
    pass[i] = (q >= 0.0 && q <= qmax) ? 1 : 0;
    const double clamped = q < 0.0 ? 0.0 : (q > qmax ? qmax : q);
    out[i] = s * (clamped - z);
  }
}

void pot_quantize_avx2(std::span<const double> x, double s, double dead_zone,
                       std::span<double> out, std::span<std::uint8_t> pass) {
  const __m256d vs = _mm256_set1_pd(s);
  const __m256d vdead = _mm256_set1_pd(dead_zone);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d sign_bit = _mm256_set1_pd(-0.0);
  // Keeping only sign and exponent of a normal double yields 2^floor(log2|x|).
  const __m256d exponent_bits = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FF0000000000000LL));
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d scaled = _mm256_div_pd(_mm256_loadu_pd(x.data() + i), vs);
    const __m256d mag = _mm256_andnot_pd(sign_bit, scaled);
    const __m256d in_dead = _mm256_cmp_pd(mag, vdead, _CMP_LT_OQ);
    const __m256d saturated = _mm256_cmp_pd(mag, one, _CMP_GE_OQ);
    __m256d q = _mm256_and_pd(mag, exponent_bits);
    q = _mm256_blendv_pd(q, one, saturated);
    q = _mm256_blendv_pd(q, zero, in_dead);
    q = _mm256_or_pd(q, _mm256_and_pd(scaled, sign_bit));
    _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(q, vs));
    store_mask(_mm256_movemask_pd(_mm256_cmp_pd(mag, one, _CMP_LE_OQ)), pass.data() + i);
  }
  for (; i < n; ++i) {
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

void lif_step_avx2(std::span<double> v, std::span<const double> current, double decay,
                   double threshold, std::span<double> membrane, std::span<double> spikes) {
  const __m256d vdecay = _mm256_set1_pd(decay);
  const __m256d vth = _mm256_set1_pd(threshold);
  const __m256d one = _mm256_set1_pd(1.0);
  const std::size_t n = v.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d leak = _mm256_mul_pd(vdecay, _mm256_loadu_pd(v.data() + i));
    const __m256d u = _mm256_add_pd(leak, _mm256_loadu_pd(current.data() + i));
    const __m256d fire = _mm256_cmp_pd(u, vth, _CMP_GE_OQ);
    _mm256_storeu_pd(membrane.data() + i, u);
    _mm256_storeu_pd(spikes.data() + i, _mm256_and_pd(fire, one));
    _mm256_storeu_pd(v.data() + i, _mm256_andnot_pd(fire, u));
  }
  for (; i < n; ++i) {
    const double leak = decay * v[i];
    const double u = leak + current[i];
    const bool fire = u >= threshold;
    membrane[i] = u;
    spikes[i] = fire ? 1.0 : 0.0;
    v[i] = fire ? 0.0 : u;
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      Isa::Avx2,      gemm_avx2,          add_avx2,          sub_avx2,
      mul_avx2,       scale_avx2,         axpy_avx2,         uniform_quantize_avx2,
      pot_quantize_avx2, lif_step_avx2,
  };
  return table;
}

}  // namespace shq::kernels
