#include "shq/search/trainer.hpp"

#include <cmath>

#include "shq/diff/ops.hpp"
#include "shq/errors.hpp"
#include "shq/search/rng.hpp"

namespace shq {

using quant::QuantChoice;

Batch make_batch(const data::Dataset& ds, std::span<const std::size_t> indices) {
  std::vector<Tensor> frames;
  Batch b;
  for (std::size_t i : indices) {
    frames.push_back(ds.samples.at(i).frames);
    b.labels.push_back(ds.samples[i].label);
  }
  b.frames = snn::stack_frames(frames);
  b.size = indices.size();
  return b;
}

std::vector<std::vector<std::size_t>> partition(std::span<const std::size_t> order, std::size_t batch_size) {
  if (batch_size == 0) throw ValidationError("batch size must be positive");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    out.emplace_back(order.begin() + i, order.begin() + end);
  }
  return out;
}

Var batch_loss(const snn::Model& model, const snn::Bindings& b, const Batch& batch, Var* logits_out) {
  Tape& tape = b.weights.front().tape();
  snn::Forward f{model.config, model.lif, b, batch.size};
  const Var logits = snn::model_forward(f, tape.constant(batch.frames));
  if (logits_out != nullptr) *logits_out = logits;
  return softmax_cross_entropy(logits, batch.labels);
}

namespace {

std::size_t correct(const Tensor& logits, std::span<const std::uint32_t> labels) {
  const std::size_t k = logits.dim(1);
  std::size_t hits = 0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (logits[b * k + j] > logits[b * k + best]) best = j;
    if (best == labels[b]) ++hits;
  }
  return hits;
}

}  // namespace

std::vector<EpochStats> train_fixed(snn::Model& latent, std::span<const QuantChoice> choices,
                                    const data::Dataset& ds, const TrainConfig& cfg) {
  if (choices.size() != latent.layers.size()) {
    throw ValidationError("train: " + std::to_string(choices.size()) + " choices for " +
                          std::to_string(latent.layers.size()) + " layers");
  }
  std::vector<EpochStats> history;
  if (cfg.epochs == 0) return history;
  Rng rng(derive_seed(cfg.seed, "shuffle"));
  Adam adam;
  const std::size_t per_epoch = (ds.splits.train.size() + cfg.batch_size - 1) / cfg.batch_size;
  LrSchedule lr{cfg.lr_start, cfg.lr_peak, cfg.lr_end, cfg.warmup_epochs * per_epoch, cfg.epochs * per_epoch};
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order = ds.splits.train;
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t hits = 0, seen = 0;
    for (const auto& idx : partition(order, cfg.batch_size)) {
      const Batch batch = make_batch(ds, idx);
      Tape tape;
      snn::Bindings b;
      std::vector<Var> theta;
      for (std::size_t l = 0; l < latent.layers.size(); ++l) {
        theta.push_back(tape.parameter(latent.weights[l]));
        b.weights.push_back(quant::apply_quant(theta.back(), choices[l]));
      }
      b.aux = snn::bind_aux(tape, latent, true);
      Var logits;
      const Var loss = batch_loss(latent, b, batch, &logits);
      const double value = loss.value().item();
      if (!std::isfinite(value)) throw DivergenceError("training loss is not finite", static_cast<int>(epoch));
      const Gradients g = tape.backward(loss);
      const double rate = lr.at(step++);
      for (std::size_t l = 0; l < latent.layers.size(); ++l) {
        latent.weights[l] = adam.step(latent.layers[l].name, latent.weights[l], g.of(theta[l]).data(), rate,
                                      cfg.weight_decay);
      }
      for (auto& [name, t] : latent.aux) t = adam.step(name, t, g.of(b.aux.at(name)).data(), rate);
      loss_sum += value * static_cast<double>(batch.size);
      hits += correct(logits.value(), batch.labels);
      seen += batch.size;
    }
    history.push_back({epoch, loss_sum / static_cast<double>(seen),
                       static_cast<double>(hits) / static_cast<double>(seen)});
  }
  return history;
}

snn::Model freeze(const snn::Model& latent, std::span<const QuantChoice> choices) {
  if (choices.size() != latent.layers.size()) throw ValidationError("freeze: choice count mismatch");
  auto to_float = [](const Tensor& t) {
    std::vector<double> v = t.to_vector();
    for (double& e : v) e = static_cast<float>(e);
    return Tensor(t.shape(), std::move(v));
  };
  snn::Model m = latent;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    m.weights[l] = to_float(quant::apply_quant(latent.weights[l], choices[l]));
  }
  for (auto& [_, t] : m.aux) t = to_float(t);
  return m;
}

EvalResult evaluate(const snn::Model& model, const data::Dataset& ds, std::span<const std::size_t> indices,
                    std::size_t batch_size) {
  EvalResult r;
  double loss_sum = 0.0;
  std::size_t hits = 0;
  for (const auto& idx : partition(indices, batch_size)) {
    const Batch batch = make_batch(ds, idx);
    Tape tape;
    const snn::Bindings b = snn::bind(tape, model, false, false);
    Var logits;
    const Var loss = batch_loss(model, b, batch, &logits);
    loss_sum += loss.value().item() * static_cast<double>(batch.size);
    hits += correct(logits.value(), batch.labels);
    r.n_samples += batch.size;
  }
  if (r.n_samples > 0) {
    r.accuracy = static_cast<double>(hits) / static_cast<double>(r.n_samples);
    r.loss = loss_sum / static_cast<double>(r.n_samples);
  }
  return r;
}

}  // namespace shq
