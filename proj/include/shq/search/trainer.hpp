#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "shq/data/dataset.hpp"
#include "shq/quant/quantizers.hpp"
#include "shq/search/optim.hpp"
#include "shq/snn/model.hpp"

namespace shq {

struct Batch {
  Tensor frames;  // [steps*size, C, H, W]
  std::vector<std::uint32_t> labels;
  std::size_t size = 0;
};

Batch make_batch(const data::Dataset& ds, std::span<const std::size_t> indices);

// Consecutive batches of `batch_size` over `order`; the last may be short.
std::vector<std::vector<std::size_t>> partition(std::span<const std::size_t> order, std::size_t batch_size);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  std::size_t warmup_epochs = 1;
  double lr_start = 1e-4;
  double lr_peak = 1e-3;
  double lr_end = 1e-5;
  double weight_decay = 0.01;
  std::uint64_t seed = 1;
};

struct EpochStats {
  std::size_t epoch;
  double loss;
  double accuracy;
};

// Fixed-architecture quantization-aware training. `latent` holds the
// full-precision weights; every forward quantizes them with calibration
// recomputed from the current values.
std::vector<EpochStats> train_fixed(snn::Model& latent, std::span<const quant::QuantChoice> choices,
                                    const data::Dataset& ds, const TrainConfig& cfg);

// Quantizes each layer once with frozen calibration and rounds all
// parameters to float32, matching what a checkpoint stores.
snn::Model freeze(const snn::Model& latent, std::span<const quant::QuantChoice> choices);

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
  std::size_t n_samples = 0;
};

// Inference with the model's weights used as stored.
EvalResult evaluate(const snn::Model& model, const data::Dataset& ds, std::span<const std::size_t> indices,
                    std::size_t batch_size);

// Forward + cross-entropy on one batch with already-bound weights.
Var batch_loss(const snn::Model& model, const snn::Bindings& b, const Batch& batch, Var* logits_out = nullptr);

}  // namespace shq
