#include "shq/diff/tape.hpp"

#include "shq/errors.hpp"

namespace shq {

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

bool GradSink::wants(std::size_t input) const { return tape_.requires_grad(inputs_[input]); }

std::span<double> GradSink::input_grad(std::size_t input) {
  const std::size_t id = inputs_[input];
  if (!tape_.requires_grad(id)) return {};
  auto& g = grads_[id];
  if (g.empty()) g.assign(tape_.value(id).numel(), 0.0);
  return g;
}

Var Tape::input(Tensor value) {
  const bool rg = value.requires_grad();
  nodes_.push_back(Node{std::move(value), rg});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  bool rg = false;
  std::vector<std::size_t> ids;
  ids.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (&v.tape() != this) throw std::logic_error("operand recorded on a different tape");
    rg = rg || v.requires_grad();
    ids.push_back(v.id());
  }
  nodes_.push_back(Node{std::move(value), rg});
  const std::size_t out = nodes_.size() - 1;
  entries_.push_back(Entry{std::move(ids), out, rg ? std::move(backward) : BackwardFn{}});
  return Var(this, out);
}

Gradients Tape::backward(const Var& root) {
  if (root.numel() != 1) {
    throw DimensionError("backward root must be a scalar, got " + shape_string(root.shape()));
  }
  Gradients result;
  result.grads_.resize(nodes_.size());
  result.shapes_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) result.shapes_[i] = nodes_[i].value.shape();
  if (!root.requires_grad()) return result;

  result.grads_[root.id()].assign(1, 1.0);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    ++result.visited_;
    const auto& g = result.grads_[it->output];
    if (g.empty() || !it->backward) continue;
    GradSink sink(*this, it->inputs, g, result.grads_);
    it->backward(sink);
  }
  return result;
}

bool Gradients::has(const Var& v) const {
  return v.id() < grads_.size() && !grads_[v.id()].empty();
}

Tensor Gradients::of(const Var& v) const {
  if (v.id() >= grads_.size()) throw std::out_of_range("variable not part of this backward pass");
  if (grads_[v.id()].empty()) return Tensor::zeros(shapes_[v.id()]);
  return Tensor(shapes_[v.id()], grads_[v.id()]);
}

std::span<const double> Gradients::raw(const Var& v) const { return grads_.at(v.id()); }

}  // namespace shq
