#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shq/cost/cost_model.hpp"
#include "shq/data/dataset.hpp"
#include "shq/search/optim.hpp"
#include "shq/search/rng.hpp"
#include "shq/search/trainer.hpp"
#include "shq/snn/model.hpp"

namespace shq {

using Probabilities = std::array<double, quant::kChoiceCount>;

struct SearchConfig {
  double beta = 1.0;
  double lambda0 = 5.0;
  double lambda_min = 0.1;
  double lambda_decay = 0.95;  // per epoch
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  std::size_t warmup_epochs = 1;
  double lr_start = 1e-4;
  double lr_peak = 1e-3;
  double lr_end = 1e-5;
  double logit_lr = 1e-2;
  double weight_decay = 0.01;
  bool per_candidate_weights = false;
  std::size_t finetune_epochs = 0;

  void validate() const;  // ConfigError
  double lambda_at(std::size_t epoch) const;
  bool operator==(const SearchConfig&) const = default;
};

enum class Phase { UpdateWeights, UpdateLogits };

// softmax((logits + noise) / lambda). Empty noise means zeros.
std::vector<double> gumbel_softmax(std::span<const double> logits, double lambda,
                                   std::span<const double> noise = {});
Var gumbel_softmax(const Var& logits, double lambda, std::span<const double> noise = {});

// Soft sample for UpdateWeights; straight-through one-hot of its argmax
// for UpdateLogits.
Var g_select(const Var& logits, double lambda, Phase phase, std::span<const double> noise = {});

// sum_i g[i] * apply_quant(theta, choice_i) per realization; the mixed weight
// feeds a single linear/conv, which equals mixing the layer outputs.
Var composite_weight(std::span<const Var> theta, const Var& g);

// Literal per-realization form over a linear layer:
// sum_i g[i] * linear(x, apply_quant(theta_i, choice_i)).
Var composite_linear(const Var& x, std::span<const Var> theta, const Var& g);

// L_acc * (L_hw / normalizer)^beta.
double total_loss(double l_acc, double l_hw, double beta, double normalizer);
Var total_loss(const Var& l_acc, const Var& l_hw, double beta, double normalizer);

struct TraceRecord {
  std::size_t epoch;
  std::string block;
  std::string layer;
  Probabilities probabilities;
  double lambda;
  double l_acc;
  double l_hw;
  double l_total;
};

struct StepStats {
  double l_acc = 0.0;
  double l_hw = 0.0;
  double l_total = 0.0;
};

class Supernet {
 public:
  Supernet(snn::Model base, const SearchConfig& cfg, const cost::EnergyTable& table = {});

  const snn::Model& base() const noexcept { return base_; }
  snn::Model& base() noexcept { return base_; }
  std::size_t layer_count() const noexcept { return logits_.size(); }

  // One tensor per layer when weights are shared, else one per choice.
  std::vector<Tensor>& theta(std::size_t layer) { return theta_[layer]; }
  const Tensor& logits(std::size_t layer) const { return logits_[layer]; }
  void set_logits(std::size_t layer, Tensor t) { logits_[layer] = std::move(t); }
  const cost::ChoiceCosts& costs(std::size_t layer) const { return costs_[layer]; }
  double normalizer() const noexcept { return normalizer_; }
  const cost::EnergyTable& table() const noexcept { return table_; }
  Probabilities probabilities(std::size_t layer) const;

  // Step 1 on `logits_batch` (one-hot phase, logits only), then Step 2 on
  // `weights_batch` (soft phase, weights and affine parameters only).
  StepStats search_step(const Batch& weights_batch, const Batch& logits_batch, double lambda,
                        double weight_lr, Rng& gumbel);

  // Argmax of the logits per layer, ties to the cheapest choice.
  std::vector<quant::QuantChoice> argmax_choices() const;

  // Full-precision weights for the given choices (the shared tensor, or the
  // chosen candidate's copy).
  snn::Model latent_model(std::span<const quant::QuantChoice> choices) const;

 private:
  const Tensor& theta_for(std::size_t layer, std::size_t choice) const;

  snn::Model base_;
  SearchConfig cfg_;
  cost::EnergyTable table_;
  std::vector<std::vector<Tensor>> theta_;
  std::vector<Tensor> logits_;
  std::vector<cost::ChoiceCosts> costs_;
  double normalizer_ = 0.0;
  Adam weight_opt_;
  Adam logit_opt_;
};

struct SearchResult {
  std::vector<TraceRecord> trace;
  std::vector<quant::QuantChoice> choices;
  snn::Model latent;  // full-precision weights of the chosen candidates
  snn::Model model;   // frozen, float32-valued
  cost::ModelSummary summary;
  double expected_one_hot_pj = 0.0;
  std::vector<EpochStats> finetune;
};

// Calibrates the affine stages, runs `epochs` of alternating updates, then
// extracts, optionally fine-tunes, and freezes. Throws DivergenceError on a
// non-finite loss.
SearchResult run_search(const snn::Model& init, const data::Dataset& ds, const SearchConfig& cfg,
                        std::uint64_t seed, const cost::EnergyTable& table = {});

// Extraction without fine-tuning.
SearchResult extract_architecture(const Supernet& net);

}  // namespace shq
