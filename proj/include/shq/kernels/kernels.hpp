#pragma once

// Data-parallel inner loops used by the differentiable substrate, the
// quantizers and the LIF neurons. Every kernel exists as a portable scalar
// reference and, where the build and CPU allow it, as a SIMD variant. The
// active table is chosen once at runtime.
//
// All variants are written so that each output element sees the same
// sequence of IEEE-754 operations (no FMA, no reassociation), which makes
// them bit-identical to the scalar reference rather than merely close.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace shq::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;

  // c[m,n] = a[m,k] * b[k,n], row-major. Computed row by row as a sequence
  // of axpy updates; zero entries of `a` are skipped, which is what makes
  // spike-valued operands cheap.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
               double* c);

  void (*add)(std::span<const double> a, std::span<const double> b, std::span<double> out);
  void (*sub)(std::span<const double> a, std::span<const double> b, std::span<double> out);
  void (*mul)(std::span<const double> a, std::span<const double> b, std::span<double> out);
  void (*scale)(std::span<const double> a, double s, std::span<double> out);
  // y += alpha * x
  void (*axpy)(double alpha, std::span<const double> x, std::span<double> y);

  // theta_int = clamp(round_half_even(x / s) + z, 0, qmax); out = s * (theta_int - z).
  // pass[i] = 1 where the pre-clamp integer lies inside [0, qmax].
  void (*uniform_quantize)(std::span<const double> x, double s, double z, double qmax,
                           std::span<double> out, std::span<std::uint8_t> pass);

  // Signed power-of-two rounding of x / s with a dead zone and saturation at
  // magnitude 1; out = q * s. pass[i] = 1 where |x / s| <= 1.
  void (*pot_quantize)(std::span<const double> x, double s, double dead_zone,
                       std::span<double> out, std::span<std::uint8_t> pass);

  // One leaky integrate-and-fire step over a flat slab of neurons:
  // u = decay * v + current; spike = u >= threshold; v = spike ? 0 : u.
  void (*lif_step)(std::span<double> v, std::span<const double> current, double decay,
                   double threshold, std::span<double> membrane, std::span<double> spikes);
};

// Table selected for this process. SHQ_FORCE_SCALAR=1 in the environment
// pins the scalar reference.
const KernelTable& active();

// Specific variant, or nullptr when it is not compiled in or the CPU lacks it.
const KernelTable* table_for(Isa isa);

// Every variant usable on this machine, scalar first.
std::vector<Isa> available();

}  // namespace shq::kernels
