#include <gtest/gtest.h>

#include <algorithm>

#include "shq/kernels/kernels.hpp"
#include "support.hpp"

using namespace shq;
using shq::kernels::Isa;
using shq::kernels::KernelTable;
using shq::testing::bit_equal;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double zero_rate = 0.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.bernoulli(zero_rate) ? 0.0 : rng.uniform(-3.0, 3.0);
  return v;
}

// Every non-scalar table compiled in and supported here.
std::vector<const KernelTable*> simd_tables() {
  std::vector<const KernelTable*> out;
  for (Isa isa : kernels::available())
    if (isa != Isa::Scalar) out.push_back(kernels::table_for(isa));
  return out;
}

const std::size_t kLengths[] = {0, 1, 3, 4, 5, 7, 8, 15, 16, 17, 63, 130};

}  // namespace

TEST(Kernels, ScalarIsAlwaysAvailableAndFirst) {
  const auto isas = kernels::available();
  ASSERT_FALSE(isas.empty());
  EXPECT_EQ(isas.front(), Isa::Scalar);
  ASSERT_NE(kernels::table_for(Isa::Scalar), nullptr);
  const Isa active = kernels::active().isa;
  EXPECT_NE(std::find(isas.begin(), isas.end(), active), isas.end());
}

TEST(Kernels, ElementwiseMatchesScalarBitForBit) {
  const KernelTable& ref = *kernels::table_for(Isa::Scalar);
  Rng rng(11);
  for (const KernelTable* t : simd_tables()) {
    for (std::size_t n : kLengths) {
      const auto a = random_vec(rng, n), b = random_vec(rng, n);
      std::vector<double> r(n), s(n);
      ref.add(a, b, r);
      t->add(a, b, s);
      EXPECT_TRUE(bit_equal(r, s)) << "add n=" << n;
      ref.sub(a, b, r);
      t->sub(a, b, s);
      EXPECT_TRUE(bit_equal(r, s)) << "sub n=" << n;
      ref.mul(a, b, r);
      t->mul(a, b, s);
      EXPECT_TRUE(bit_equal(r, s)) << "mul n=" << n;
      ref.scale(a, 0.37, r);
      t->scale(a, 0.37, s);
      EXPECT_TRUE(bit_equal(r, s)) << "scale n=" << n;
      std::vector<double> y1 = b, y2 = b;
      ref.axpy(-1.3, a, y1);
      t->axpy(-1.3, a, y2);
      EXPECT_TRUE(bit_equal(y1, y2)) << "axpy n=" << n;
    }
  }
}

TEST(Kernels, GemmMatchesScalarBitForBit) {
  const KernelTable& ref = *kernels::table_for(Isa::Scalar);
  Rng rng(12);
  for (const KernelTable* t : simd_tables()) {
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t m = 1 + rng.below(9), n = 1 + rng.below(37), k = 1 + rng.below(21);
      const auto a = random_vec(rng, m * k, 0.5), b = random_vec(rng, k * n);
      std::vector<double> c1(m * n, 0.0), c2(m * n, 0.0);
      ref.gemm(m, n, k, a.data(), b.data(), c1.data());
      t->gemm(m, n, k, a.data(), b.data(), c2.data());
      EXPECT_TRUE(bit_equal(c1, c2)) << m << "x" << k << "x" << n;
    }
  }
}

TEST(Kernels, GemmScalarMatchesNaiveProduct) {
  const KernelTable& ref = *kernels::table_for(Isa::Scalar);
  const double a[] = {1, 2, 0, 3, 4, 5};  // 2x3
  const double b[] = {1, 0, 2, 1, 0, 3};  // 3x2
  double c[4] = {0, 0, 0, 0};
  ref.gemm(2, 2, 3, a, b, c);
  EXPECT_EQ(c[0], 1 * 1 + 2 * 2 + 0 * 0);
  EXPECT_EQ(c[1], 1 * 0 + 2 * 1 + 0 * 3);
  EXPECT_EQ(c[2], 3 * 1 + 4 * 2 + 5 * 0);
  EXPECT_EQ(c[3], 3 * 0 + 4 * 1 + 5 * 3);
}

TEST(Kernels, QuantizersMatchScalarBitForBit) {
  const KernelTable& ref = *kernels::table_for(Isa::Scalar);
  Rng rng(13);
  for (const KernelTable* t : simd_tables()) {
    for (std::size_t n : kLengths) {
      auto x = random_vec(rng, n);
      // Exact half-way points exercise round-half-even.
      for (std::size_t i = 0; i < n; i += 3) x[i] = 0.25 * static_cast<double>(static_cast<int>(i) - 5);
      std::vector<double> r(n), s(n);
      std::vector<std::uint8_t> pr(n), ps(n);
      ref.uniform_quantize(x, 0.5, 3.0, 15.0, r, pr);
      t->uniform_quantize(x, 0.5, 3.0, 15.0, s, ps);
      EXPECT_TRUE(bit_equal(r, s)) << "uniform n=" << n;
      EXPECT_EQ(pr, ps);
      ref.pot_quantize(x, 2.0, 0.125, r, pr);
      t->pot_quantize(x, 2.0, 0.125, s, ps);
      EXPECT_TRUE(bit_equal(r, s)) << "pot n=" << n;
      EXPECT_EQ(pr, ps);
    }
  }
}

TEST(Kernels, LifStepMatchesScalarBitForBit) {
  const KernelTable& ref = *kernels::table_for(Isa::Scalar);
  Rng rng(14);
  for (const KernelTable* t : simd_tables()) {
    for (std::size_t n : kLengths) {
      auto v = random_vec(rng, n);
      const auto cur = random_vec(rng, n);
      if (n > 0) v[0] = 2.0 * (1.0 - cur[0]);  // near threshold after the leak
      std::vector<double> v1 = v, v2 = v, m1(n), m2(n), s1(n), s2(n);
      ref.lif_step(v1, cur, 0.5, 1.0, m1, s1);
      t->lif_step(v2, cur, 0.5, 1.0, m2, s2);
      EXPECT_TRUE(bit_equal(v1, v2));
      EXPECT_TRUE(bit_equal(m1, m2));
      EXPECT_TRUE(bit_equal(s1, s2));
    }
  }
}

TEST(Kernels, LifStepScalarSemantics) {
  const KernelTable& ref = *kernels::table_for(Isa::Scalar);
  std::vector<double> v{0.0, 0.0, 0.8, 1.0};
  const std::vector<double> cur{0.0, 1.2, 0.0, 0.5};
  std::vector<double> mem(4), spk(4);
  ref.lif_step(v, cur, 0.5, 1.0, mem, spk);
  EXPECT_EQ(spk, (std::vector<double>{0, 1, 0, 1}));
  EXPECT_EQ(mem, (std::vector<double>{0.0, 1.2, 0.4, 1.0}));
  EXPECT_EQ(v, (std::vector<double>{0.0, 0.0, 0.4, 0.0}));
}
