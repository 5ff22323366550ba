#include "shq/snn/model.hpp"

#include <cmath>

#include "shq/diff/ops.hpp"
#include "shq/errors.hpp"
#include "shq/search/rng.hpp"
#include "shq/snn/layers.hpp"

namespace shq::snn {

using cost::Component;
using cost::LayerSpec;

namespace {

bool pools_after(const ModelConfig& cfg, std::size_t stage) {
  for (std::size_t s : cfg.pool_after)
    if (s == stage) return true;
  return false;
}

std::string block_prefix(std::size_t block) { return "block" + std::to_string(block); }

}  // namespace

void ModelConfig::validate() const {
  if (steps == 0) throw ConfigError("model.steps must be positive");
  if (blocks == 0) throw ConfigError("model.blocks must be positive");
  if (dim == 0 || heads == 0) throw ConfigError("model.dim and model.heads must be positive");
  if (dim % heads != 0) {
    throw ConfigError("model.dim (" + std::to_string(dim) + ") is not divisible by model.heads (" +
                      std::to_string(heads) + ")");
  }
  if (mlp_ratio == 0) throw ConfigError("model.mlp_ratio must be positive");
  if (channels.size() != kTokenizerStages + 1) {
    throw ConfigError("model.channels must list " + std::to_string(kTokenizerStages + 1) +
                      " entries (input plus four convolutions)");
  }
  for (std::size_t c : channels)
    if (c == 0) throw ConfigError("model.channels entries must be positive");
  if (channels.back() != dim) throw ConfigError("last model.channels entry must equal model.dim");
  for (std::size_t s : pool_after)
    if (s < 1 || s > kTokenizerStages) throw ConfigError("model.pool_after entries must lie in 1..4");
  if (height == 0 || width == 0) throw ConfigError("model.height and model.width must be positive");
  const std::size_t factor = std::size_t{1} << pool_after.size();
  if (height % factor != 0 || width % factor != 0) {
    throw ConfigError("input " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not divisible by the downsample factor " + std::to_string(factor));
  }
  if (classes < 2) throw ConfigError("model.classes must be at least 2");
}

std::size_t ModelConfig::token_height() const { return height >> pool_after.size(); }
std::size_t ModelConfig::token_width() const { return width >> pool_after.size(); }

std::vector<LayerHandle> enumerate_layers(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<LayerHandle> out;
  std::size_t h = cfg.height, w = cfg.width;
  for (std::size_t s = 1; s <= kTokenizerStages; ++s) {
    const std::size_t ci = cfg.channels[s - 1], co = cfg.channels[s];
    out.push_back({"tokenizer.conv" + std::to_string(s), Component::Tokenizer,
                   LayerSpec::conv(3, ci, co, h * w), Shape{co, ci, 3, 3}, ci * 9, 0});
    if (pools_after(cfg, s)) {
      h /= 2;
      w /= 2;
    }
  }
  const std::size_t d = cfg.steps * cfg.tokens(), dim = cfg.dim, hidden = cfg.mlp_ratio * cfg.dim;
  for (std::size_t b = 1; b <= cfg.blocks; ++b) {
    const std::string p = block_prefix(b);
    const std::pair<const char*, Component> attn[] = {{"query", Component::AttentionQuery},
                                                      {"key", Component::AttentionKey},
                                                      {"value", Component::AttentionValue},
                                                      {"output", Component::AttentionOutput}};
    for (const auto& [role, comp] : attn) {
      out.push_back({p + ".attention." + role, comp, LayerSpec::linear(dim, dim, d), Shape{dim, dim},
                     dim, b});
    }
    out.push_back({p + ".mlp.fc1", Component::Mlp, LayerSpec::linear(dim, hidden, d),
                   Shape{hidden, dim}, dim, b});
    out.push_back({p + ".mlp.fc2", Component::Mlp, LayerSpec::linear(hidden, dim, d),
                   Shape{dim, hidden}, hidden, b});
  }
  out.push_back({"head.fc", Component::Head, LayerSpec::linear(dim, cfg.classes, 1),
                 Shape{cfg.classes, dim}, dim, cfg.blocks + 1});
  return out;
}

std::vector<cost::CostedLayer> costed_layers(std::span<const LayerHandle> handles) {
  std::vector<cost::CostedLayer> out;
  out.reserve(handles.size());
  for (const auto& h : handles) out.push_back({h.name, h.component, h.spec});
  return out;
}

Model Model::init(const ModelConfig& cfg, const LifConfig& lif, std::uint64_t seed) {
  lif.validate();
  Model m;
  m.config = cfg;
  m.lif = lif;
  m.layers = enumerate_layers(cfg);
  Rng rng(seed);
  for (const auto& h : m.layers) {
    const double r = std::sqrt(1.0 / static_cast<double>(h.fan_in));
    std::vector<double> w(shape_numel(h.weight_shape));
    for (double& v : w) v = static_cast<float>(rng.uniform(-r, r));
    m.weights.emplace_back(h.weight_shape, std::move(w));
    if (h.component != Component::Head) {
      const std::size_t c = h.weight_shape[0];
      m.aux[h.name + ".gamma"] = Tensor::full({c}, 1.0);
      m.aux[h.name + ".beta"] = Tensor::zeros({c});
    }
  }
  m.aux["tokenizer.pos"] = Tensor::zeros({cfg.tokens(), cfg.dim});
  m.aux["head.bias"] = Tensor::zeros({cfg.classes});
  return m;
}

std::size_t Model::weight_parameters() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.numel();
  return n;
}

std::size_t Model::aux_parameters() const {
  std::size_t n = 0;
  for (const auto& [_, t] : aux) n += t.numel();
  return n;
}

std::map<std::string, Var> bind_aux(Tape& tape, const Model& model, bool trainable) {
  std::map<std::string, Var> out;
  for (const auto& [name, t] : model.aux) out.emplace(name, tape.input(t.with_requires_grad(trainable)));
  return out;
}

Bindings bind(Tape& tape, const Model& model, bool weights_trainable, bool aux_trainable) {
  Bindings b;
  for (const auto& w : model.weights) b.weights.push_back(tape.input(w.with_requires_grad(weights_trainable)));
  b.aux = bind_aux(tape, model, aux_trainable);
  return b;
}

namespace {

// Positions in enumerate_layers order.
std::size_t block_layer(std::size_t block, std::size_t role) {
  return kTokenizerStages + 6 * (block - 1) + role;
}

const Var& weight(const Forward& f, std::size_t index) {
  if (index >= f.bindings.weights.size()) {
    throw ValidationError("no weight bound for layer " + std::to_string(index));
  }
  return f.bindings.weights[index];
}

const Var& aux(const Forward& f, const std::string& name) {
  auto it = f.bindings.aux.find(name);
  if (it == f.bindings.aux.end()) throw ValidationError("no parameter bound for " + name);
  return it->second;
}

Var affine(const Forward& f, const std::string& layer, const Var& x, std::size_t channels,
           std::size_t inner) {
  if (f.calibrate != nullptr) {
    const auto v = x.value().data();
    const std::size_t outer = v.size() / (channels * inner);
    std::vector<double> mean(channels, 0.0), var(channels, 0.0);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < inner; ++i) mean[c] += v[(o * channels + c) * inner + i];
    const double count = static_cast<double>(outer * inner);
    for (double& m : mean) m /= count;
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < inner; ++i) {
          const double e = v[(o * channels + c) * inner + i] - mean[c];
          var[c] += e * e;
        }
    std::vector<double> gamma(channels), beta(channels);
    for (std::size_t c = 0; c < channels; ++c) {
      double sd = std::sqrt(var[c] / count);
      if (!(sd > 1e-6)) sd = 1.0;
      gamma[c] = static_cast<float>(1.0 / sd);
      beta[c] = static_cast<float>(-mean[c] / sd);
    }
    Tensor g({channels}, std::move(gamma)), b({channels}, std::move(beta));
    f.calibrate->aux[layer + ".gamma"] = g;
    f.calibrate->aux[layer + ".beta"] = b;
    Tape& tape = x.tape();
    return channel_affine(x, tape.constant(g), tape.constant(b), channels, inner);
  }
  return channel_affine(x, aux(f, layer + ".gamma"), aux(f, layer + ".beta"), channels, inner);
}

// linear -> affine -> LIF over rows [steps*batch*tokens, in].
Var dense_stage(const Forward& f, std::size_t index, const std::string& layer, const Var& x) {
  const Var y = linear(x, weight(f, index));
  const std::size_t out = y.shape()[1];
  return lif(affine(f, layer, y, out, 1), f.config.steps, f.lif);
}

}  // namespace

Var tokenizer_forward(const Forward& f, const Var& frames) {
  const ModelConfig& cfg = f.config;
  const Shape& s = frames.shape();
  if (s.size() != 4 || s[0] != cfg.steps * f.batch || s[1] != cfg.channels[0] || s[2] != cfg.height ||
      s[3] != cfg.width) {
    throw DimensionError("tokenizer: frames " + shape_string(s) + " do not match the model input [" +
                         std::to_string(cfg.steps * f.batch) + "," + std::to_string(cfg.channels[0]) +
                         "," + std::to_string(cfg.height) + "," + std::to_string(cfg.width) + "]");
  }
  Var x = frames;
  for (std::size_t stage = 1; stage <= kTokenizerStages; ++stage) {
    const std::string name = "tokenizer.conv" + std::to_string(stage);
    const Var y = conv2d(x, weight(f, stage - 1), 1, 1);
    const std::size_t co = y.shape()[1], inner = y.shape()[2] * y.shape()[3];
    x = lif(affine(f, name, y, co, inner), cfg.steps, f.lif);
    if (pools_after(cfg, stage)) x = maxpool2x2(x);
  }
  const Var tokens = channels_to_tokens(x);
  return lif(add_tiled(tokens, aux(f, "tokenizer.pos")), cfg.steps, f.lif);
}

Var ssa_forward(const Forward& f, const Var& x, std::size_t block) {
  const std::string p = block_prefix(block) + ".attention.";
  const Var q = dense_stage(f, block_layer(block, 0), p + "query", x);
  const Var k = dense_stage(f, block_layer(block, 1), p + "key", x);
  const Var v = dense_stage(f, block_layer(block, 2), p + "value", x);
  const Var attn = spike_attention(q, k, v, f.config.steps * f.batch, f.config.heads,
                                   f.config.attention_scale);
  return add(x, dense_stage(f, block_layer(block, 3), p + "output", attn));
}

Var mlp_forward(const Forward& f, const Var& x, std::size_t block) {
  const std::string p = block_prefix(block) + ".mlp.";
  const Var hidden = dense_stage(f, block_layer(block, 4), p + "fc1", x);
  return add(x, dense_stage(f, block_layer(block, 5), p + "fc2", hidden));
}

Var model_forward(const Forward& f, const Var& frames) {
  Var x = tokenizer_forward(f, frames);
  for (std::size_t b = 1; b <= f.config.blocks; ++b) {
    x = ssa_forward(f, x, b);
    x = mlp_forward(f, x, b);
  }
  const Var pooled = token_mean_pool(x, f.config.steps, f.batch);
  return add_row(linear(pooled, weight(f, block_layer(f.config.blocks + 1, 0))), aux(f, "head.bias"));
}

void calibrate_affines(Model& model, const Tensor& frames, std::size_t batch) {
  Tape tape;
  const Bindings b = bind(tape, model, false, false);
  Forward f{model.config, model.lif, b, batch, &model};
  model_forward(f, tape.constant(frames));
}

Tensor stack_frames(std::span<const Tensor> samples) {
  if (samples.empty()) throw ValidationError("stack_frames: empty batch");
  const Shape& s = samples[0].shape();
  if (s.size() != 4) throw DimensionError("stack_frames: expected [T,C,H,W], got " + shape_string(s));
  const std::size_t steps = s[0], frame = s[1] * s[2] * s[3], batch = samples.size();
  std::vector<double> out(steps * batch * frame);
  for (std::size_t b = 0; b < batch; ++b) {
    if (samples[b].shape() != s) {
      throw DimensionError("stack_frames: sample " + std::to_string(b) + " has shape " +
                           shape_string(samples[b].shape()) + ", expected " + shape_string(s));
    }
    const auto d = samples[b].data();
    for (std::size_t t = 0; t < steps; ++t)
      std::copy(d.begin() + t * frame, d.begin() + (t + 1) * frame, out.begin() + (t * batch + b) * frame);
  }
  return Tensor({steps * batch, s[1], s[2], s[3]}, std::move(out));
}

}  // namespace shq::snn
