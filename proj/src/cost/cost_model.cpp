#include "shq/cost/cost_model.hpp"

#include <cmath>

#include "shq/errors.hpp"

namespace shq::cost {

using quant::QuantChoice;

LayerSpec LayerSpec::linear(std::uint64_t f_in, std::uint64_t f_out, std::uint64_t d) {
  if (f_in == 0 || f_out == 0 || d == 0) throw ValidationError("linear layer dimensions must be positive");
  return LayerSpec{LinearDims{f_in, f_out, d}};
}

LayerSpec LayerSpec::conv(std::uint64_t k, std::uint64_t c_in, std::uint64_t c_out,
                          std::uint64_t s_img) {
  if (k == 0 || c_in == 0 || c_out == 0 || s_img == 0) {
    throw ValidationError("conv layer dimensions must be positive");
  }
  return LayerSpec{ConvDims{k, c_in, c_out, s_img}};
}

std::uint64_t LayerSpec::parameters() const {
  if (const auto* l = std::get_if<LinearDims>(&dims)) return l->f_in * l->f_out;
  const auto& c = std::get<ConvDims>(dims);
  return c.k * c.k * c.c_in * c.c_out;
}

std::uint64_t count_ops(const LayerSpec& spec) {
  if (const auto* l = std::get_if<LinearDims>(&spec.dims)) return l->f_in * l->f_out * l->d;
  const auto& c = std::get<ConvDims>(spec.dims);
  return c.k * c.k * c.c_in * c.c_out * c.s_img;
}

std::uint64_t count_bits(const LayerSpec& spec, int bits) {
  return spec.parameters() * static_cast<std::uint64_t>(bits);
}

LayerCost layer_cost(const LayerSpec& spec, QuantChoice choice, const EnergyTable& table) {
  LayerCost cost;
  cost.ops = count_ops(spec);
  cost.bits = count_bits(spec, quant::bits(choice));
  cost.storage_bits = cost.bits;
  const EnergyRow& row = choice == QuantChoice::FP32 ? table.fp32 : table.int8;
  const double per_op = quant::is_power_of_two(choice) ? row.shift + row.add : row.mult + row.add;
  cost.energy_pj = static_cast<double>(cost.ops) * per_op + static_cast<double>(cost.bits) * row.dram;
  return cost;
}

ChoiceCosts choice_costs(const LayerSpec& spec, const EnergyTable& table) {
  ChoiceCosts out{};
  for (QuantChoice c : quant::kAllChoices) out[quant::index_of(c)] = layer_cost(spec, c, table).energy_pj;
  return out;
}

double expected_supernet_cost(std::span<const std::vector<double>> costs,
                              std::span<const std::vector<double>> weights) {
  if (costs.size() != weights.size()) {
    throw ValidationError("expected_supernet_cost: " + std::to_string(costs.size()) +
                          " cost rows vs " + std::to_string(weights.size()) + " weight rows");
  }
  double total = 0.0;
  for (std::size_t l = 0; l < costs.size(); ++l) {
    if (costs[l].size() != weights[l].size()) {
      throw ValidationError("expected_supernet_cost: layer " + std::to_string(l) +
                            " has mismatched choice counts");
    }
    double wsum = 0.0;
    for (double w : weights[l]) wsum += w;
    if (std::fabs(wsum - 1.0) > 1e-6) {
      throw ValidationError("expected_supernet_cost: selection weights of layer " +
                            std::to_string(l) + " sum to " + std::to_string(wsum));
    }
    double layer = 0.0;
    for (std::size_t i = 0; i < costs[l].size(); ++i) layer += weights[l][i] * costs[l][i];
    total += layer;
  }
  return total;
}

ComponentGroup group_of(Component c) {
  switch (c) {
    case Component::Tokenizer: return ComponentGroup::Tokenizer;
    case Component::Mlp: return ComponentGroup::Mlp;
    case Component::Head: return ComponentGroup::Head;
    default: return ComponentGroup::Attention;
  }
}

std::string component_name(Component c) {
  switch (c) {
    case Component::Tokenizer: return "tokenizer";
    case Component::AttentionQuery: return "attention.query";
    case Component::AttentionKey: return "attention.key";
    case Component::AttentionValue: return "attention.value";
    case Component::AttentionOutput: return "attention.output";
    case Component::Mlp: return "mlp";
    case Component::Head: return "head";
  }
  return "?";
}

std::string group_name(ComponentGroup g) {
  switch (g) {
    case ComponentGroup::Tokenizer: return "tokenizer";
    case ComponentGroup::Attention: return "attention";
    case ComponentGroup::Mlp: return "mlp";
    case ComponentGroup::Head: return "head";
  }
  return "?";
}

ModelSummary model_summary(std::span<const CostedLayer> layers, std::span<const QuantChoice> choices,
                           const EnergyTable& table) {
  if (layers.size() != choices.size()) {
    throw ValidationError("model_summary: " + std::to_string(layers.size()) + " layers but " +
                          std::to_string(choices.size()) + " choices");
  }
  ModelSummary s;
  std::uint64_t weighted_bits = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerCost c = layer_cost(layers[i].spec, choices[i], table);
    const std::uint64_t params = layers[i].spec.parameters();
    s.energy_pj += c.energy_pj;
    s.storage_bits += c.storage_bits;
    s.parameters += params;
    weighted_bits += params * static_cast<std::uint64_t>(quant::bits(choices[i]));
    auto add_share = [&](Share& sh) {
      sh.energy_pj += c.energy_pj;
      sh.storage_bits += c.storage_bits;
      sh.parameters += params;
    };
    add_share(s.groups[static_cast<std::size_t>(group_of(layers[i].component))]);
    switch (layers[i].component) {
      case Component::AttentionQuery: add_share(s.attention[0]); break;
      case Component::AttentionKey: add_share(s.attention[1]); break;
      case Component::AttentionValue: add_share(s.attention[2]); break;
      case Component::AttentionOutput: add_share(s.attention[3]); break;
      default: break;
    }
    s.layers.push_back(c);
  }
  s.storage_mb = static_cast<double>(s.storage_bits) / 8.0 / 1048576.0;
  s.avg_bits = s.parameters ? static_cast<double>(weighted_bits) / static_cast<double>(s.parameters) : 0.0;
  s.energy_mj = s.energy_pj / 1e9;
  return s;
}

}  // namespace shq::cost
