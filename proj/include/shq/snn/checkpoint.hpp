#pragma once

#include <string>
#include <utility>
#include <vector>

#include "shq/quant/quantizers.hpp"
#include "shq/snn/model.hpp"

namespace shq::snn {

// key=value view of the model and neuron settings ("model.dim", ...).
std::vector<std::pair<std::string, std::string>> model_entries(const ModelConfig& cfg,
                                                               const LifConfig& lif);
// Applies one entry. Returns false for keys outside model.*; throws
// ConfigError for a malformed value.
bool set_model_entry(ModelConfig& cfg, LifConfig& lif, const std::string& key,
                     const std::string& value);

struct Checkpoint {
  Model model;
  std::vector<quant::QuantChoice> choices;  // parallel to model.layers
};

// Binary container: "SHQC", u16 version, the model entries as text, then
// per layer its name, choice and float32 weights with a shape prefix, then
// the auxiliary tensors in the same encoding.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace shq::snn
