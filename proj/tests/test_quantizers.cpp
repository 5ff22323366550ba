#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "shq/diff/ops.hpp"
#include "shq/errors.hpp"
#include "shq/quant/quantizers.hpp"
#include "support.hpp"

using namespace shq;
using namespace shq::quant;

namespace {

Tensor vec(std::vector<double> v) { return Tensor::vector(std::move(v)); }

// Reference grid index for the uniform quantizer, before clamping.
double uniform_index(double theta, const UniformParams& p) { return std::nearbyint(theta / p.scale) + p.zero_point; }

bool is_signed_power_of_two(double v) {
  if (v == 0.0) return false;
  int e = 0;
  return std::fabs(std::frexp(v, &e)) == 0.5;
}

Tensor random_weights(Rng& rng) {
  const std::size_t n = 1 + rng.below(48);
  const double spread = std::ldexp(1.0, static_cast<int>(rng.below(12)) - 8);
  const double center = rng.bernoulli(0.3) ? rng.uniform(-spread, spread) : 0.0;
  std::vector<double> v(n);
  for (double& x : v) x = center + rng.uniform(-spread, spread);
  if (rng.bernoulli(0.05)) std::fill(v.begin(), v.end(), center);
  return Tensor({n}, std::move(v));
}

}  // namespace

// ---- vocabulary ---------------------------------------------------------------

TEST(QuantChoice, FiveChoicesWithFigureNames) {
  ASSERT_EQ(kAllChoices.size(), 5u);
  const char* names[] = {"fp32", "2u", "4u", "2l", "4l"};
  const int widths[] = {32, 2, 4, 2, 4};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(choice_name(kAllChoices[i]), names[i]);
    EXPECT_EQ(bits(kAllChoices[i]), widths[i]);
    EXPECT_EQ(parse_choice(names[i]), kAllChoices[i]);
    EXPECT_EQ(index_of(kAllChoices[i]), i);
  }
  EXPECT_FALSE(parse_choice("8u").has_value());
}

// ---- worked examples ----------------------------------------------------------

TEST(CalibrateUniform, Examples) {
  const UniformParams a = calibrate_uniform(vec({-1.0, 0.2, 1.0}), 2);
  EXPECT_EQ(a.scale, 2.0 / 3.0);
  EXPECT_EQ(a.zero_point, 2.0);  // round(1.5) to even
  const UniformParams c = calibrate_uniform(vec({0.7, 0.7, 0.7}), 2);
  EXPECT_EQ(c.scale, 1.0);
  EXPECT_EQ(c.zero_point, 0.0);
  const UniformParams d = calibrate_uniform(vec({0.0, 3.0, 15.0}), 4);
  EXPECT_EQ(d.scale, 1.0);
  EXPECT_EQ(d.zero_point, 0.0);
  EXPECT_THROW(calibrate_uniform(std::span<const double>{}, 2), ValidationError);
}

TEST(UniformQuantize, Examples) {
  const UniformParams p{0.1, 8.0, 4};
  EXPECT_EQ(uniform_index(0.23, p), 10.0);
  EXPECT_EQ(uniform_quantize(vec({0.23}), p).values[0], 0.1 * (10.0 - 8.0));
  EXPECT_EQ(uniform_quantize(vec({0.23}), p).values[0], 0.2);
  EXPECT_EQ(uniform_quantize(vec({0.5}), UniformParams{0.1, 0.0, 4}).values[0], 0.5);
  const Quantized clamped = uniform_quantize(vec({-10.0}), p);
  EXPECT_EQ(clamped.values[0], 0.1 * (0.0 - 8.0));
  EXPECT_EQ(clamped.pass[0], 0);
}

TEST(CalibratePot, Examples) {
  EXPECT_EQ(calibrate_pot(vec({1.0, -0.5}), 2).params.scale, 1.0);
  EXPECT_EQ(calibrate_pot(vec({-1.5, 0.2}), 2).params.scale, 1.0);
  EXPECT_EQ(calibrate_pot(vec({0.1, -0.3}), 2).params.scale, 0.25);
  const PotCalibration zero = calibrate_pot(vec({0.0, 0.0}), 2);
  EXPECT_EQ(zero.params.scale, 1.0);
  EXPECT_TRUE(zero.degenerate);
  EXPECT_FALSE(calibrate_pot(vec({0.3}), 2).degenerate);
}

TEST(PotQuantize, Examples) {
  const PowerOfTwoParams p{1.0, 3};
  EXPECT_EQ(pot_dead_zone(3), 0.125);
  EXPECT_EQ(pot_quantize(vec({0.3}), p).values[0], 0.25);
  EXPECT_EQ(pot_quantize(vec({0.06}), p).values[0], 0.0);
  EXPECT_EQ(pot_quantize(vec({1.5}), p).values[0], 1.0);
  EXPECT_EQ(pot_quantize(vec({-0.3}), p).values[0], -0.25);
}

TEST(ApplyQuant, Examples) {
  const Tensor theta = vec({1.0, 0.6, 0.4, -0.7});
  EXPECT_TRUE(apply_quant(theta, QuantChoice::FP32).identical(theta));
  const Tensor p2 = apply_quant(theta, QuantChoice::P2);
  EXPECT_EQ(pot_dead_zone(2), 0.5);
  EXPECT_EQ(p2[0], 1.0);
  EXPECT_EQ(p2[1], 0.5);
  EXPECT_EQ(p2[2], 0.0);
  EXPECT_EQ(p2[3], -0.5);
}

TEST(ApplyQuant, FP32VarIsTheSameNode) {
  Tape tape;
  const Var theta = tape.parameter(vec({0.1, 0.2}));
  EXPECT_EQ(apply_quant(theta, QuantChoice::FP32).id(), theta.id());
}

// ---- property suite over random tensors -------------------------------------------

TEST(QuantizerProperties, TenThousandRandomTensors) {
  Rng rng(20240601);
  std::size_t checked = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Tensor theta = random_weights(rng);
    const QuantChoice c = kAllChoices[1 + rng.below(4)];
    const int b = bits(c);
    const Calibration cal = calibrate(theta, c);
    const Quantized q = quantize_with(theta, cal);
    ASSERT_EQ(q.values.numel(), theta.numel());

    if (is_uniform(c)) {
      const UniformParams& p = cal.uniform;
      const double qmax = std::ldexp(1.0, b) - 1.0;
      ASSERT_GT(p.scale, 0.0);
      ASSERT_GE(p.zero_point, 0.0);
      ASSERT_LE(p.zero_point, qmax);
      std::set<double> distinct;
      for (std::size_t i = 0; i < theta.numel(); ++i) {
        const double idx = uniform_index(theta[i], p);
        const double clamped = std::clamp(idx, 0.0, qmax);
        // Grid membership: the value is exactly s * (i - z) for an integer i in range.
        ASSERT_EQ(q.values[i], p.scale * (clamped - p.zero_point)) << "trial " << trial;
        ASSERT_EQ(clamped, std::nearbyint(clamped));
        if (idx >= 0.0 && idx <= qmax) {
          // Error bound, with an ulp-level allowance for the division.
          ASSERT_LE(std::fabs(theta[i] - q.values[i]), p.scale / 2 * (1 + 1e-12)) << "trial " << trial;
        }
        distinct.insert(q.values[i]);
      }
      ASSERT_LE(distinct.size(), static_cast<std::size_t>(1) << b);
    } else {
      const PowerOfTwoParams& p = cal.pot;
      int e = 0;
      ASSERT_EQ(std::frexp(p.scale, &e), 0.5) << "scale must be 2^k";
      std::set<double> magnitudes;
      for (std::size_t i = 0; i < theta.numel(); ++i) {
        const double r = q.values[i] / p.scale;
        ASSERT_LE(std::fabs(r), 1.0);
        if (r != 0.0) {
          ASSERT_TRUE(is_signed_power_of_two(r)) << r;
          ASSERT_GE(std::fabs(r), pot_dead_zone(b));
        }
        magnitudes.insert(std::fabs(r));
      }
      ASSERT_LE(magnitudes.size(), (static_cast<std::size_t>(1) << (b - 1)) + 1);
    }

    // Idempotence with calibration held fixed.
    const Quantized twice = quantize_with(q.values, cal);
    ASSERT_TRUE(twice.values.identical(q.values)) << "trial " << trial;

    // Monotonicity on the sorted input.
    std::vector<double> sorted = theta.to_vector();
    std::sort(sorted.begin(), sorted.end());
    const Quantized qs = quantize_with(Tensor({sorted.size()}, sorted), cal);
    for (std::size_t i = 1; i < sorted.size(); ++i) ASSERT_LE(qs.values[i - 1], qs.values[i]);
    ++checked;
  }
  EXPECT_EQ(checked, 10000u);
}

// ---- straight-through estimator ---------------------------------------------------

TEST(QuantizerSte, GradientIsPassMaskExactly) {
  Rng rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const Tensor theta = random_weights(rng);
    const QuantChoice c = kAllChoices[1 + rng.below(4)];
    Tape tape;
    const Var x = tape.parameter(theta);
    const Tensor g = tape.backward(sum(apply_quant(x, c))).of(x);
    const Calibration cal = calibrate(theta, c);
    for (std::size_t i = 0; i < theta.numel(); ++i) {
      bool pass;
      if (is_uniform(c)) {
        const double idx = uniform_index(theta[i], cal.uniform);
        pass = idx >= 0.0 && idx <= std::ldexp(1.0, bits(c)) - 1.0;
      } else {
        pass = std::fabs(theta[i] / cal.pot.scale) <= 1.0;
      }
      ASSERT_EQ(g[i], pass ? 1.0 : 0.0) << "trial " << trial << " index " << i;
    }
  }
}

TEST(QuantizerSte, ClampedAndSaturatedRegionsAreZero) {
  Tape tape;
  // Fixed grids: uniform s=0.1, z=8, b=4 and POT s=1, b=2.
  const Var x = tape.parameter(vec({-10.0, 0.23, 0.8, 2.0}));
  const Quantized u = uniform_quantize(x.value(), UniformParams{0.1, 8.0, 4});
  const Var yu = masked_pass_through(x, u.values, u.pass);
  EXPECT_EQ(tape.backward(sum(yu)).of(x).to_vector(), (std::vector<double>{0, 1, 0, 0}));
  const Quantized p = pot_quantize(x.value(), PowerOfTwoParams{1.0, 2});
  const Var yp = masked_pass_through(x, p.values, p.pass);
  EXPECT_EQ(tape.backward(sum(yp)).of(x).to_vector(), (std::vector<double>{0, 1, 1, 0}));
}

TEST(QuantizerSte, DeadZonePassesGradient) {
  Tape tape;
  const Var x = tape.parameter(vec({1.0, 0.1}));
  const Var y = apply_quant(x, QuantChoice::P2);
  EXPECT_EQ(y.value()[1], 0.0);
  EXPECT_EQ(tape.backward(sum(y)).of(x)[1], 1.0);
}
