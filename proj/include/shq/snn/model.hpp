#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "shq/cost/cost_model.hpp"
#include "shq/diff/tape.hpp"
#include "shq/snn/lif.hpp"

namespace shq::snn {

struct ModelConfig {
  std::size_t steps = 4;  // T
  std::size_t blocks = 2;
  std::size_t dim = 64;  // D
  std::size_t heads = 4;
  std::size_t mlp_ratio = 4;
  // Input channels followed by the output channels of the four tokenizer
  // convolutions; the last entry must equal `dim`.
  std::vector<std::size_t> channels{2, 8, 16, 32, 64};
  // 1-based tokenizer stages followed by a 2x2 max pool.
  std::vector<std::size_t> pool_after{1, 2};
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t classes = 4;
  double attention_scale = 0.125;

  // Throws ConfigError on inconsistent dimensions.
  void validate() const;
  std::size_t token_height() const;
  std::size_t token_width() const;
  std::size_t tokens() const { return token_height() * token_width(); }

  bool operator==(const ModelConfig&) const = default;
};

inline constexpr std::size_t kTokenizerStages = 4;

// One quantizable layer. `block` is 0 for the tokenizer, 1..N for
// transformer blocks and N+1 for the head.
struct LayerHandle {
  std::string name;
  cost::Component component;
  cost::LayerSpec spec;
  Shape weight_shape;
  std::size_t fan_in;
  std::size_t block;
};

// Tokenizer convs, then per block query/key/value/output/fc1/fc2, then the
// head. Linear layers carry d = steps * tokens; the head sees one pooled row.
std::vector<LayerHandle> enumerate_layers(const ModelConfig& cfg);

std::vector<cost::CostedLayer> costed_layers(std::span<const LayerHandle> handles);

struct Model {
  ModelConfig config;
  LifConfig lif;
  std::vector<LayerHandle> layers;
  std::vector<Tensor> weights;        // parallel to `layers`
  std::map<std::string, Tensor> aux;  // affine gamma/beta, position embedding, head bias

  // Fan-in uniform weights in +-sqrt(1/fan_in); affine identity; zero
  // position embedding and head bias.
  static Model init(const ModelConfig& cfg, const LifConfig& lif, std::uint64_t seed);

  std::size_t weight_parameters() const;
  std::size_t aux_parameters() const;
};

// Values the forward pass reads. Callers decide what each weight is: a
// plain parameter, a quantized view, or a mixture of realizations.
struct Bindings {
  std::vector<Var> weights;
  std::map<std::string, Var> aux;
};

Bindings bind(Tape& tape, const Model& model, bool weights_trainable, bool aux_trainable);
std::map<std::string, Var> bind_aux(Tape& tape, const Model& model, bool trainable);

// Forward context. When `calibrate` is set, each affine stage first sets
// its gamma/beta in that model from the statistics of the incoming batch
// (unit variance, zero mean per channel) and then applies them.
struct Forward {
  const ModelConfig& config;
  const LifConfig& lif;
  const Bindings& bindings;
  std::size_t batch;
  Model* calibrate = nullptr;
};

// frames [steps*batch, C, H, W] -> spike tokens [steps*batch*tokens, D].
Var tokenizer_forward(const Forward& f, const Var& frames);
// Both blocks map [steps*batch*tokens, D] to the same shape, residual included.
// `block` is 1-based.
Var ssa_forward(const Forward& f, const Var& x, std::size_t block);
Var mlp_forward(const Forward& f, const Var& x, std::size_t block);
// Full network; logits [batch, classes].
Var model_forward(const Forward& f, const Var& frames);

// Data-dependent affine initialisation from one batch, stage by stage.
void calibrate_affines(Model& model, const Tensor& frames, std::size_t batch);

// Samples [steps, C, H, W] -> [steps*batch, C, H, W], time-major.
Tensor stack_frames(std::span<const Tensor> samples);

}  // namespace shq::snn
