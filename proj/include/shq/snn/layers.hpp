#pragma once

#include <cstddef>

#include "shq/diff/tape.hpp"

namespace shq::snn {

// 2x2 max pooling with stride 2 over x[B,C,H,W]. Ties route the gradient to
// the first maximum in row-major window order.
Var maxpool2x2(const Var& x);

// x[G,D,h,w] -> [G*h*w, D]: one row per spatial position.
Var channels_to_tokens(const Var& x);

// x[R,C] + p[P,C] where R is a multiple of P; p repeats every P rows.
Var add_tiled(const Var& x, const Var& p);

// Softmax-free attention. q, k, v are [groups*tokens, dim] with rows grouped
// by (time, sample). Per group and head: scale * (Q K^T) V.
Var spike_attention(const Var& q, const Var& k, const Var& v, std::size_t groups, std::size_t heads,
                    double scale);

// x[steps*batch*tokens, D] -> [batch, D], averaging over steps and tokens.
Var token_mean_pool(const Var& x, std::size_t steps, std::size_t batch);

}  // namespace shq::snn
