#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "safe/tensor.hpp"

namespace safe {

// Differentiable kernels over 1-D/2-D tensors. Each op computes its value
// eagerly and, when any input requires grad, records a backward closure on
// the result node. Shapes are validated up front; errors name both shapes.

Tensor add(const Tensor& a, const Tensor& b);        // same shape
Tensor sub(const Tensor& a, const Tensor& b);        // same shape
Tensor mul(const Tensor& a, const Tensor& b);        // elementwise, same shape
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, Real c);               // multiply by constant

/// x:[R×C] plus a length-C row applied to every row (bias add).
Tensor broadcast_add(const Tensor& x, const Tensor& row);

Tensor matmul(const Tensor& a, const Tensor& b);     // [m×k]·[k×n] -> [m×n]
Tensor transpose(const Tensor& a);                   // 2-D

Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);

Tensor sum(const Tensor& a);                         // -> scalar
Tensor mean_axis(const Tensor& a, int axis);         // 0 -> [1×C], 1 -> [R×1]

Tensor concat(const std::vector<Tensor>& parts, int axis);  // 2-D, axis 0/1
Tensor slice_rows(const Tensor& a, Index r0, Index r1);
Tensor slice_cols(const Tensor& a, Index c0, Index c1);

/// Gather rows of table:[V×d] by id; backward scatter-adds into the table.
Tensor embedding(const Tensor& table, const std::vector<std::int64_t>& ids);

/// Valid 1-D convolution over a sequence. x:[T×D], w:[(K·D)×F], b:[F],
/// output [(T−K+1)×F]. T must be >= K (callers pad shorter sequences).
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, Index k);

/// Column-wise max over the time axis: [T×F] -> [1×F]. Ties keep the
/// earliest row, so gradients are deterministic.
Tensor max_over_time(const Tensor& x);

/// Row-wise layer normalization with learned gain/offset.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Real eps = 1e-5);

/// Temperature softmax over the last axis: p_k = exp(o_k/T) / Σ exp(o_j/T),
/// computed with max subtraction. Rejects T <= 0. 1-D input is treated as a
/// single row.
Tensor softmax_t(const Tensor& logits, Real temperature);

/// Mean over the batch of −log probs[i, label_i]. Probabilities at the label
/// index are floored at 1e-12 inside the log, so an exact zero yields a large
/// finite loss instead of inf.
Tensor cross_entropy(const Tensor& probs, const std::vector<int>& labels);

/// Mean over the batch of Σ_k q_k·(log q_k − log p_k). Rows of both inputs
/// must sum to 1 within 1e-6. The gradient flows through p only; q is a
/// fixed target. Logs share the 1e-12 floor with cross_entropy.
Tensor kl_div(const Tensor& p, const Tensor& q);

/// Inverted dropout: in train mode each element is kept with probability
/// 1−rate and scaled by 1/(1−rate); in eval mode the input passes through.
Tensor dropout(const Tensor& x, Real rate, std::mt19937_64& rng, bool train);

/// Scaled dot-product attention over h heads in one node. q,k,v are [A×d]
/// with d divisible by heads; output is the head-concatenated [A×d] context.
/// If probs_out is non-null it receives the [A×A] attention matrix per head.
Tensor attention_core(const Tensor& q, const Tensor& k, const Tensor& v,
                      int heads, std::vector<Mat>* probs_out = nullptr);

// Uniform draw in [0,1) from the top 53 bits; identical on every platform.
inline Real uniform_real(std::mt19937_64& rng) {
  return static_cast<Real>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace safe
