#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "shq/diff/tensor.hpp"

namespace shq {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid as long as the
// tape that produced it.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t numel() const { return value().numel(); }
  bool requires_grad() const;
  std::size_t id() const noexcept { return id_; }
  Tape& tape() const noexcept { return *tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// View handed to a backward closure: the gradient flowing into the recorded
// output and lazily zero-initialised accumulators for each input. Closures
// must add into input_grad(), never assign, so fan-out sums correctly.
class GradSink {
 public:
  std::span<const double> output_grad() const noexcept { return output_; }
  bool wants(std::size_t input) const;
  std::span<double> input_grad(std::size_t input);

 private:
  friend class Tape;
  GradSink(Tape& tape, std::span<const std::size_t> inputs, std::span<const double> output,
           std::vector<std::vector<double>>& grads)
      : tape_(tape), inputs_(inputs), output_(output), grads_(grads) {}

  Tape& tape_;
  std::span<const std::size_t> inputs_;
  std::span<const double> output_;
  std::vector<std::vector<double>>& grads_;
};

using BackwardFn = std::function<void(GradSink&)>;

// Result of one backward pass.
class Gradients {
 public:
  bool has(const Var& v) const;
  // Gradient w.r.t. `v`; zeros when nothing flowed into it.
  Tensor of(const Var& v) const;
  std::span<const double> raw(const Var& v) const;
  std::size_t visited_entries() const noexcept { return visited_; }

 private:
  friend class Tape;
  std::vector<std::vector<double>> grads_;
  std::vector<Shape> shapes_;
  std::size_t visited_ = 0;
};

// Ordered record of primitive applications (the computation record).
// Backward replays it in reverse, visiting every entry once. Not
// thread-safe; one tape per worker.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf value; differentiable iff value.requires_grad().
  Var input(Tensor value);
  Var constant(Tensor value) { return input(value.with_requires_grad(false)); }
  Var parameter(Tensor value) { return input(value.with_requires_grad(true)); }

  // Register the result of a primitive. `backward` may be empty when no
  // input requires a gradient.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  Gradients backward(const Var& root);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t entry_count() const noexcept { return entries_.size(); }

 private:
  struct Node {
    Tensor value;
    bool requires_grad;
  };
  struct Entry {
    std::vector<std::size_t> inputs;
    std::size_t output;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
  std::vector<Entry> entries_;
};

}  // namespace shq
