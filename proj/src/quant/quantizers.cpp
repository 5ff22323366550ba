#include "shq/quant/quantizers.hpp"

#include <algorithm>
#include <cmath>

#include "shq/diff/ops.hpp"
#include "shq/errors.hpp"
#include "shq/kernels/kernels.hpp"

namespace shq::quant {

int bits(QuantChoice c) {
  switch (c) {
    case QuantChoice::FP32: return 32;
    case QuantChoice::U2:
    case QuantChoice::P2: return 2;
    case QuantChoice::U4:
    case QuantChoice::P4: return 4;
  }
  return 32;
}

bool is_uniform(QuantChoice c) { return c == QuantChoice::U2 || c == QuantChoice::U4; }
bool is_power_of_two(QuantChoice c) { return c == QuantChoice::P2 || c == QuantChoice::P4; }

std::string_view choice_name(QuantChoice c) {
  switch (c) {
    case QuantChoice::FP32: return "fp32";
    case QuantChoice::U2: return "2u";
    case QuantChoice::U4: return "4u";
    case QuantChoice::P2: return "2l";
    case QuantChoice::P4: return "4l";
  }
  return "?";
}

std::optional<QuantChoice> parse_choice(std::string_view name) {
  for (QuantChoice c : kAllChoices) {
    if (choice_name(c) == name) return c;
  }
  return std::nullopt;
}

UniformParams calibrate_uniform(std::span<const double> weights, int b) {
  if (weights.empty()) throw ValidationError("calibrate_uniform: empty weight tensor");
  if (b < 2) throw ValidationError("calibrate_uniform: bit width must be >= 2");
  const auto [lo, hi] = std::minmax_element(weights.begin(), weights.end());
  const double qmax = std::ldexp(1.0, b) - 1.0;
  if (*hi == *lo) return UniformParams{1.0, 0.0, b};
  const double s = (*hi - *lo) / qmax;
  const double z = std::clamp(std::nearbyint(-*lo / s), 0.0, qmax);
  return UniformParams{s, z, b};
}

UniformParams calibrate_uniform(const Tensor& weights, int b) {
  return calibrate_uniform(weights.data(), b);
}

PotCalibration calibrate_pot(std::span<const double> weights, int b) {
  if (weights.empty()) throw ValidationError("calibrate_pot: empty weight tensor");
  double m = 0.0;
  for (double w : weights) m = std::max(m, std::fabs(w));
  if (m == 0.0) return PotCalibration{PowerOfTwoParams{1.0, b}, true};
  return PotCalibration{PowerOfTwoParams{std::ldexp(1.0, std::ilogb(m)), b}, false};
}

PotCalibration calibrate_pot(const Tensor& weights, int b) { return calibrate_pot(weights.data(), b); }

double pot_dead_zone(int b) { return std::ldexp(1.0, -(1 << (b - 1)) + 1); }

Quantized uniform_quantize(const Tensor& theta, const UniformParams& p) {
  std::vector<double> out(theta.numel());
  std::vector<std::uint8_t> pass(theta.numel());
  kernels::active().uniform_quantize(theta.data(), p.scale, p.zero_point,
                                     std::ldexp(1.0, p.bits) - 1.0, out, pass);
  return Quantized{Tensor(theta.shape(), std::move(out)), std::move(pass)};
}

Quantized pot_quantize(const Tensor& theta, const PowerOfTwoParams& p) {
  std::vector<double> out(theta.numel());
  std::vector<std::uint8_t> pass(theta.numel());
  kernels::active().pot_quantize(theta.data(), p.scale, pot_dead_zone(p.bits), out, pass);
  return Quantized{Tensor(theta.shape(), std::move(out)), std::move(pass)};
}

Calibration calibrate(const Tensor& theta, QuantChoice choice) {
  Calibration cal;
  cal.choice = choice;
  if (is_uniform(choice)) cal.uniform = calibrate_uniform(theta, bits(choice));
  if (is_power_of_two(choice)) cal.pot = calibrate_pot(theta, bits(choice)).params;
  return cal;
}

Quantized quantize_with(const Tensor& theta, const Calibration& cal) {
  if (is_uniform(cal.choice)) return uniform_quantize(theta, cal.uniform);
  if (is_power_of_two(cal.choice)) return pot_quantize(theta, cal.pot);
  return Quantized{theta, std::vector<std::uint8_t>(theta.numel(), 1)};
}

Tensor apply_quant(const Tensor& theta, QuantChoice choice) {
  if (choice == QuantChoice::FP32) return theta;
  return quantize_with(theta, calibrate(theta, choice)).values;
}

Var apply_quant(const Var& theta, QuantChoice choice) {
  if (choice == QuantChoice::FP32) return theta;
  Quantized q = quantize_with(theta.value(), calibrate(theta.value(), choice));
  return masked_pass_through(theta, std::move(q.values), std::move(q.pass));
}

}  // namespace shq::quant
