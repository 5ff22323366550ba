#include "shq/search/supernet.hpp"

#include <algorithm>
#include <cmath>

#include "shq/diff/ops.hpp"
#include "shq/errors.hpp"

namespace shq {

using quant::kAllChoices;
using quant::kChoiceCount;
using quant::QuantChoice;

void SearchConfig::validate() const {
  if (!(beta >= 0.0)) throw ConfigError("search.beta must be >= 0");
  if (!(lambda_min > 0.0) || !(lambda0 >= lambda_min)) {
    throw ConfigError("search.lambda0 >= search.lambda_min > 0 is required");
  }
  if (!(lambda_decay > 0.0 && lambda_decay <= 1.0)) throw ConfigError("search.lambda_decay must lie in (0, 1]");
  if (batch_size == 0) throw ConfigError("search.batch_size must be positive");
  if (!(lr_start >= 0.0 && lr_peak >= 0.0 && lr_end >= 0.0 && logit_lr >= 0.0)) {
    throw ConfigError("learning rates must be non-negative");
  }
  if (!(weight_decay >= 0.0)) throw ConfigError("search.weight_decay must be >= 0");
}

double SearchConfig::lambda_at(std::size_t epoch) const {
  return std::max(lambda_min, lambda0 * std::pow(lambda_decay, static_cast<double>(epoch)));
}

std::vector<double> gumbel_softmax(std::span<const double> logits, double lambda, std::span<const double> noise) {
  if (!(lambda > 0.0)) throw ValidationError("gumbel_softmax: temperature must be positive");
  if (!noise.empty() && noise.size() != logits.size()) throw DimensionError("gumbel_softmax: noise length mismatch");
  std::vector<double> z(logits.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (logits[i] + (noise.empty() ? 0.0 : noise[i])) / lambda;
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) total += (v = std::exp(v - m));
  for (double& v : z) v /= total;
  return z;
}

Var gumbel_softmax(const Var& logits, double lambda, std::span<const double> noise) {
  if (!(lambda > 0.0)) throw ValidationError("gumbel_softmax: temperature must be positive");
  Var z = logits;
  if (!noise.empty()) {
    if (noise.size() != logits.numel()) throw DimensionError("gumbel_softmax: noise length mismatch");
    z = add(z, logits.tape().constant(Tensor(logits.shape(), {noise.begin(), noise.end()})));
  }
  return softmax(scale(z, 1.0 / lambda));
}

Var g_select(const Var& logits, double lambda, Phase phase, std::span<const double> noise) {
  const Var soft = gumbel_softmax(logits, lambda, noise);
  return phase == Phase::UpdateWeights ? soft : straight_through_onehot(soft);
}

Var composite_weight(std::span<const Var> theta, const Var& g) {
  if (theta.size() != 1 && theta.size() != kChoiceCount) {
    throw DimensionError("composite: expected 1 shared or 5 per-choice weight tensors");
  }
  std::vector<Var> realizations;
  for (std::size_t i = 0; i < kChoiceCount; ++i) {
    realizations.push_back(quant::apply_quant(theta[theta.size() == 1 ? 0 : i], kAllChoices[i]));
  }
  return weighted_sum(realizations, g);
}

Var composite_linear(const Var& x, std::span<const Var> theta, const Var& g) {
  if (theta.size() != 1 && theta.size() != kChoiceCount) {
    throw DimensionError("composite: expected 1 shared or 5 per-choice weight tensors");
  }
  std::vector<Var> outputs;
  for (std::size_t i = 0; i < kChoiceCount; ++i) {
    outputs.push_back(linear(x, quant::apply_quant(theta[theta.size() == 1 ? 0 : i], kAllChoices[i])));
  }
  return weighted_sum(outputs, g);
}

double total_loss(double l_acc, double l_hw, double beta, double normalizer) {
  if (!(l_acc > 0.0) || !(l_hw > 0.0) || !(normalizer > 0.0)) {
    throw ValidationError("total_loss: L_acc, L_hw and the normalizer must be positive");
  }
  return l_acc * std::pow(l_hw / normalizer, beta);
}

Var total_loss(const Var& l_acc, const Var& l_hw, double beta, double normalizer) {
  if (!(l_acc.value().item() > 0.0) || !(l_hw.value().item() > 0.0) || !(normalizer > 0.0)) {
    throw ValidationError("total_loss: L_acc, L_hw and the normalizer must be positive");
  }
  return mul(l_acc, pow_scalar(scale(l_hw, 1.0 / normalizer), beta));
}

Supernet::Supernet(snn::Model base, const SearchConfig& cfg, const cost::EnergyTable& table)
    : base_(std::move(base)), cfg_(cfg), table_(table) {
  cfg_.validate();
  for (std::size_t l = 0; l < base_.layers.size(); ++l) {
    theta_.emplace_back(cfg_.per_candidate_weights ? kChoiceCount : 1, base_.weights[l]);
    logits_.push_back(Tensor::zeros({kChoiceCount}));
    costs_.push_back(cost::choice_costs(base_.layers[l].spec, table_));
    normalizer_ += costs_.back()[quant::index_of(QuantChoice::FP32)];
  }
}

Probabilities Supernet::probabilities(std::size_t layer) const {
  const auto p = gumbel_softmax(logits_[layer].data(), 1.0);
  Probabilities out{};
  std::copy(p.begin(), p.end(), out.begin());
  return out;
}

const Tensor& Supernet::theta_for(std::size_t layer, std::size_t choice) const {
  return theta_[layer].size() == 1 ? theta_[layer][0] : theta_[layer][choice];
}

StepStats Supernet::search_step(const Batch& weights_batch, const Batch& logits_batch, double lambda,
                                double weight_lr, Rng& gumbel) {
  const std::size_t n_layers = layer_count();
  auto draw = [&] {
    std::vector<double> g(kChoiceCount);
    for (double& v : g) v = gumbel.gumbel();
    return g;
  };
  StepStats stats;

  // Step 1: one-hot realization per layer, update the selection logits.
  {
    Tape tape;
    snn::Bindings b;
    b.aux = snn::bind_aux(tape, base_, false);
    std::vector<Var> logit_vars, selects;
    for (std::size_t l = 0; l < n_layers; ++l) {
      logit_vars.push_back(tape.parameter(logits_[l]));
      selects.push_back(g_select(logit_vars.back(), lambda, Phase::UpdateLogits, draw()));
      std::vector<Var> theta;
      for (const Tensor& t : theta_[l]) theta.push_back(tape.constant(t));
      b.weights.push_back(composite_weight(theta, selects.back()));
    }
    const Var l_acc = batch_loss(base_, b, logits_batch);
    Var l_hw = dot_constant(selects[0], costs_[0]);
    for (std::size_t l = 1; l < n_layers; ++l) l_hw = add(l_hw, dot_constant(selects[l], costs_[l]));
    // Same expression as total_loss(); a batch fitted perfectly can give
    // L_acc == 0, which must not abort the search.
    const Var l_total = mul(l_acc, pow_scalar(scale(l_hw, 1.0 / normalizer_), cfg_.beta));
    stats = {l_acc.value().item(), l_hw.value().item(), l_total.value().item()};
    if (!std::isfinite(stats.l_total)) throw DivergenceError("search loss is not finite", -1);
    // Descend log L_total: same minimizers, but the step no longer scales with
    // (L_hw/N)^beta, which swings by orders of magnitude between one-hot samples.
    if (stats.l_total > 0.0) {
      const Gradients g = tape.backward(scale(l_total, 1.0 / stats.l_total));
      for (std::size_t l = 0; l < n_layers; ++l) {
        logits_[l] = logit_opt_.step(base_.layers[l].name, logits_[l], g.of(logit_vars[l]).data(), cfg_.logit_lr);
      }
    }
  }

  // Step 2: soft mixture of all realizations, update weights.
  {
    Tape tape;
    snn::Bindings b;
    b.aux = snn::bind_aux(tape, base_, true);
    std::vector<std::vector<Var>> theta(n_layers);
    double l_hw = 0.0;
    for (std::size_t l = 0; l < n_layers; ++l) {
      const auto noise = draw();
      const auto soft = gumbel_softmax(logits_[l].data(), lambda, noise);
      for (std::size_t i = 0; i < kChoiceCount; ++i) l_hw += soft[i] * costs_[l][i];
      for (const Tensor& t : theta_[l]) theta[l].push_back(tape.parameter(t));
      b.weights.push_back(composite_weight(theta[l], tape.constant(Tensor::vector(soft))));
    }
    const Var l_acc = batch_loss(base_, b, weights_batch);
    const Var l_total = scale(l_acc, std::pow(l_hw / normalizer_, cfg_.beta));
    if (!std::isfinite(l_total.value().item())) throw DivergenceError("search loss is not finite", -1);
    const Gradients g = tape.backward(l_total);
    for (std::size_t l = 0; l < n_layers; ++l) {
      for (std::size_t c = 0; c < theta_[l].size(); ++c) {
        const std::string name = base_.layers[l].name + "#" + std::to_string(c);
        theta_[l][c] = weight_opt_.step(name, theta_[l][c], g.of(theta[l][c]).data(), weight_lr, cfg_.weight_decay);
      }
    }
    for (auto& [name, t] : base_.aux) t = weight_opt_.step(name, t, g.of(b.aux.at(name)).data(), weight_lr);
  }
  return stats;
}

std::vector<QuantChoice> Supernet::argmax_choices() const {
  std::vector<QuantChoice> out;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const auto v = logits_[l].data();
    std::size_t best = 0;
    for (std::size_t i = 1; i < kChoiceCount; ++i) {
      if (v[i] > v[best] || (v[i] == v[best] && costs_[l][i] < costs_[l][best])) best = i;
    }
    out.push_back(kAllChoices[best]);
  }
  return out;
}

snn::Model Supernet::latent_model(std::span<const QuantChoice> choices) const {
  snn::Model m = base_;
  for (std::size_t l = 0; l < layer_count(); ++l) m.weights[l] = theta_for(l, quant::index_of(choices[l]));
  return m;
}

SearchResult extract_architecture(const Supernet& net) {
  SearchResult r;
  r.choices = net.argmax_choices();
  r.latent = net.latent_model(r.choices);
  r.model = freeze(r.latent, r.choices);
  const auto layers = snn::costed_layers(r.model.layers);
  r.summary = cost::model_summary(layers, r.choices, net.table());
  std::vector<std::vector<double>> costs, onehot;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    costs.emplace_back(net.costs(l).begin(), net.costs(l).end());
    onehot.emplace_back(kChoiceCount, 0.0);
    onehot.back()[quant::index_of(r.choices[l])] = 1.0;
  }
  r.expected_one_hot_pj = cost::expected_supernet_cost(costs, onehot);
  return r;
}

namespace {

std::string block_label(const snn::LayerHandle& h, std::size_t blocks) {
  if (h.block == 0) return "tokenizer";
  if (h.block == blocks + 1) return "head";
  return "block" + std::to_string(h.block);
}

}  // namespace

SearchResult run_search(const snn::Model& init, const data::Dataset& ds, const SearchConfig& cfg,
                        std::uint64_t seed, const cost::EnergyTable& table) {
  cfg.validate();
  if (ds.splits.train.empty() || ds.splits.search.empty()) {
    throw ValidationError("search needs non-empty train and search splits");
  }
  snn::Model base = init;
  {
    const std::size_t n = std::min<std::size_t>(ds.splits.train.size(), 4 * cfg.batch_size);
    const Batch calib = make_batch(ds, std::span(ds.splits.train).first(n));
    snn::calibrate_affines(base, calib.frames, calib.size);
  }
  Supernet net(std::move(base), cfg, table);
  Rng shuffle(derive_seed(seed, "shuffle"));
  Rng gumbel(derive_seed(seed, "gumbel"));

  const std::size_t per_epoch = (ds.splits.train.size() + cfg.batch_size - 1) / cfg.batch_size;
  const LrSchedule lr{cfg.lr_start, cfg.lr_peak, cfg.lr_end, cfg.warmup_epochs * per_epoch,
                      std::max<std::size_t>(1, cfg.epochs * per_epoch)};
  std::vector<std::size_t> search_order = ds.splits.search;
  shuffle.shuffle(search_order);
  std::size_t search_cursor = 0;
  auto next_search_batch = [&] {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
      if (search_cursor == search_order.size()) {
        shuffle.shuffle(search_order);
        search_cursor = 0;
      }
      idx.push_back(search_order[search_cursor++]);
    }
    return make_batch(ds, idx);
  };

  std::vector<TraceRecord> trace;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lambda = cfg.lambda_at(epoch);
    std::vector<Probabilities> start;
    for (std::size_t l = 0; l < net.layer_count(); ++l) start.push_back(net.probabilities(l));
    std::vector<std::size_t> order = ds.splits.train;
    shuffle.shuffle(order);
    StepStats mean;
    std::size_t steps = 0;
    for (const auto& idx : partition(order, cfg.batch_size)) {
      const Batch wb = make_batch(ds, idx);
      const Batch ab = next_search_batch();
      StepStats s;
      try {
        s = net.search_step(wb, ab, lambda, lr.at(step++), gumbel);
      } catch (const DivergenceError& e) {
        throw DivergenceError("search loss is not finite", static_cast<int>(epoch));
      }
      mean.l_acc += s.l_acc;
      mean.l_hw += s.l_hw;
      mean.l_total += s.l_total;
      ++steps;
    }
    const double inv = 1.0 / static_cast<double>(steps);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      const auto& h = net.base().layers[l];
      trace.push_back({epoch, block_label(h, net.base().config.blocks), h.name, start[l], lambda,
                       mean.l_acc * inv, mean.l_hw * inv, mean.l_total * inv});
    }
  }

  SearchResult r = extract_architecture(net);
  r.trace = std::move(trace);
  if (cfg.finetune_epochs > 0) {
    TrainConfig tc{cfg.finetune_epochs, cfg.batch_size, 0, cfg.lr_peak, cfg.lr_peak, cfg.lr_end,
                   cfg.weight_decay, derive_seed(seed, "finetune")};
    r.finetune = train_fixed(r.latent, r.choices, ds, tc);
    r.model = freeze(r.latent, r.choices);
  }
  return r;
}

}  // namespace shq
