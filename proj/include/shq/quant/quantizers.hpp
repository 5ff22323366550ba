#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "shq/diff/tape.hpp"

namespace shq::quant {

// Per-layer quantization configuration. Order is significant: it is the
// index order of selection logits and of every per-choice array.
enum class QuantChoice : std::uint8_t { FP32 = 0, U2 = 1, U4 = 2, P2 = 3, P4 = 4 };

inline constexpr std::size_t kChoiceCount = 5;
inline constexpr std::array<QuantChoice, kChoiceCount> kAllChoices{
    QuantChoice::FP32, QuantChoice::U2, QuantChoice::U4, QuantChoice::P2, QuantChoice::P4};

int bits(QuantChoice c);
bool is_uniform(QuantChoice c);
bool is_power_of_two(QuantChoice c);
// "fp32", "2u", "4u", "2l", "4l"
std::string_view choice_name(QuantChoice c);
std::optional<QuantChoice> parse_choice(std::string_view name);
inline std::size_t index_of(QuantChoice c) { return static_cast<std::size_t>(c); }

struct UniformParams {
  double scale = 1.0;
  double zero_point = 0.0;
  int bits = 2;
};

struct PowerOfTwoParams {
  double scale = 1.0;  // exactly 2^k
  int bits = 2;
};

struct PotCalibration {
  PowerOfTwoParams params;
  bool degenerate = false;  // all-zero input; scale fell back to 1
};

// Min-max asymmetric calibration.
UniformParams calibrate_uniform(std::span<const double> weights, int bits);
UniformParams calibrate_uniform(const Tensor& weights, int bits);

// s = 2^floor(log2(max|w|)).
PotCalibration calibrate_pot(std::span<const double> weights, int bits);
PotCalibration calibrate_pot(const Tensor& weights, int bits);

// Magnitudes of theta/s below this are flushed to zero.
double pot_dead_zone(int bits);

// Forward values plus the straight-through pass mask.
struct Quantized {
  Tensor values;
  std::vector<std::uint8_t> pass;
};

Quantized uniform_quantize(const Tensor& theta, const UniformParams& p);
Quantized pot_quantize(const Tensor& theta, const PowerOfTwoParams& p);

// Calibration chosen for one layer under one choice; lets a caller hold
// the grid fixed across several applications.
struct Calibration {
  QuantChoice choice = QuantChoice::FP32;
  UniformParams uniform;
  PowerOfTwoParams pot;
};

Calibration calibrate(const Tensor& theta, QuantChoice choice);
Quantized quantize_with(const Tensor& theta, const Calibration& cal);

// Calibrate from theta itself, then quantize. FP32 returns theta unchanged.
Tensor apply_quant(const Tensor& theta, QuantChoice choice);

// Differentiable form: straight-through gradient inside the pass region,
// zero where the quantizer clamps or saturates. FP32 returns `theta` itself.
Var apply_quant(const Var& theta, QuantChoice choice);

}  // namespace shq::quant
