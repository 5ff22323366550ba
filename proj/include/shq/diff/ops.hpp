#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "shq/diff/tape.hpp"

namespace shq {

// ---- linear algebra -------------------------------------------------------

// [m,k] x [k,n] -> [m,n]
Var matmul(const Var& a, const Var& b);

// x[n,in] . w[out,in]^T -> [n,out]; the layout used by every linear layer.
Var linear(const Var& x, const Var& w);

// Cross-correlation of input[B,Ci,H,W] with kernel[Co,Ci,k,k].
Var conv2d(const Var& input, const Var& kernel, std::size_t stride, std::size_t padding);

// ---- pointwise ------------------------------------------------------------

enum class Elementwise { Add, Sub, Mul };

// Shapes must match, or `b` must hold a single element (scalar broadcast).
Var elementwise(Elementwise op, const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double offset);
Var pow_scalar(const Var& a, double exponent);  // a > 0 elementwise
Var pass_through(const Var& a);                 // identity, recorded

// Forward by an arbitrary shape-preserving function; backward multiplies
// the upstream gradient by mask(input). Straight-through estimators and
// surrogate spike derivatives are built on this.
using TensorMap = std::function<Tensor(const Tensor&)>;
Var custom_grad(const Var& x, const TensorMap& forward, const TensorMap& backward_mask);

// Same contract with precomputed forward output and 0/1 mask.
Var masked_pass_through(const Var& x, Tensor output, std::vector<std::uint8_t> mask);

// ---- reductions and shape -------------------------------------------------

Var sum(const Var& a);
Var mean(const Var& a);
Var reshape(const Var& a, Shape shape);
// Sum of c[i] * a[i] for a constant vector c.
Var dot_constant(const Var& a, std::span<const double> c);
// sum_i weights[i] * terms[i]; terms share one shape, weights has one entry
// per term. Terms whose weight is exactly zero do not enter the forward sum.
Var weighted_sum(std::span<const Var> terms, const Var& weights);

// ---- channel-wise ---------------------------------------------------------

// x viewed as [outer, channels, inner]; y = x * gamma[c] + beta[c].
Var channel_affine(const Var& x, const Var& gamma, const Var& beta, std::size_t channels,
                   std::size_t inner);
// x[rows, cols] + row[cols] broadcast over rows.
Var add_row(const Var& x, const Var& row);

// ---- probability ----------------------------------------------------------

// Softmax over a rank-1 tensor.
Var softmax(const Var& logits);
// One-hot of argmax in the forward pass; identity gradient to `soft`.
Var straight_through_onehot(const Var& soft);
// Mean over the batch of -log softmax(logits)[label]; logits [B,K].
Var softmax_cross_entropy(const Var& logits, std::span<const std::uint32_t> labels);

}  // namespace shq
