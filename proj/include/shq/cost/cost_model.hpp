#pragma once

// Analytic per-layer hardware model: multiplications (or shifts) plus
// additions per weight use, and DRAM traffic proportional to stored weight
// bits. Energies are in picojoules.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "shq/quant/quantizers.hpp"

namespace shq::cost {

struct EnergyRow {
  double mult;
  double add;
  double shift;
  double dram;
};

// 45nm per-operation energies; the FP32 row prices unquantized layers and
// the INT8 row prices every 2/4-bit choice.
struct EnergyTable {
  EnergyRow fp32{3.7, 1.1, 0.13, 650.0};
  EnergyRow int8{0.2, 0.03, 0.024, 163.0};
};

struct LinearDims {
  std::uint64_t f_in;
  std::uint64_t f_out;
  std::uint64_t d;  // rows the layer is applied to per inference
};

struct ConvDims {
  std::uint64_t k;
  std::uint64_t c_in;
  std::uint64_t c_out;
  std::uint64_t s_img;  // input positions H*W
};

struct LayerSpec {
  std::variant<LinearDims, ConvDims> dims;

  static LayerSpec linear(std::uint64_t f_in, std::uint64_t f_out, std::uint64_t d);
  static LayerSpec conv(std::uint64_t k, std::uint64_t c_in, std::uint64_t c_out,
                        std::uint64_t s_img);

  bool is_linear() const { return std::holds_alternative<LinearDims>(dims); }
  std::uint64_t parameters() const;
};

struct LayerCost {
  std::uint64_t ops = 0;
  std::uint64_t bits = 0;
  double energy_pj = 0.0;
  std::uint64_t storage_bits = 0;
};

std::uint64_t count_ops(const LayerSpec& spec);
std::uint64_t count_bits(const LayerSpec& spec, int bits);
LayerCost layer_cost(const LayerSpec& spec, quant::QuantChoice choice, const EnergyTable& table);

// Cost of every choice for one layer, indexed by quant::index_of.
using ChoiceCosts = std::array<double, quant::kChoiceCount>;
ChoiceCosts choice_costs(const LayerSpec& spec, const EnergyTable& table);

// sum over layers and choices of weight * cost. Each layer's weights must
// sum to 1 within 1e-6.
double expected_supernet_cost(std::span<const std::vector<double>> costs,
                              std::span<const std::vector<double>> weights);

// Fig.-4-style grouping. Attention layers carry their projection role so
// reports can split query/key/value/output.
enum class Component { Tokenizer, AttentionQuery, AttentionKey, AttentionValue, AttentionOutput, Mlp, Head };

enum class ComponentGroup { Tokenizer, Attention, Mlp, Head };

inline constexpr std::array<ComponentGroup, 4> kAllGroups{
    ComponentGroup::Tokenizer, ComponentGroup::Attention, ComponentGroup::Mlp, ComponentGroup::Head};

ComponentGroup group_of(Component c);
std::string component_name(Component c);
std::string group_name(ComponentGroup g);

struct CostedLayer {
  std::string name;
  Component component;
  LayerSpec spec;
};

struct Share {
  double energy_pj = 0.0;
  std::uint64_t storage_bits = 0;
  std::uint64_t parameters = 0;
};

struct ModelSummary {
  double storage_mb = 0.0;  // 2^20-byte megabytes
  double avg_bits = 0.0;
  double energy_pj = 0.0;
  double energy_mj = 0.0;
  std::uint64_t storage_bits = 0;
  std::uint64_t parameters = 0;
  std::array<Share, 4> groups{};  // indexed like kAllGroups
  std::array<Share, 4> attention{};  // query, key, value, output
  std::vector<LayerCost> layers;
};

ModelSummary model_summary(std::span<const CostedLayer> layers,
                           std::span<const quant::QuantChoice> choices, const EnergyTable& table);

}  // namespace shq::cost
