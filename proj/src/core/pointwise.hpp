#pragma once

#include <cstdint>

#include "rng.hpp"
#include "tensor.hpp"

namespace d3fcnn {

// f(x) = x for x >= 0, alpha*x otherwise.
template <typename T>
Tensor<T> leaky_relu_forward(const Tensor<T>& x, double alpha);

// dx = gy where the forward input was >= 0, alpha*gy elsewhere.
template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& gy, double alpha);

template <typename T>
struct DropoutResult {
  Tensor<T> y;
  Tensor<T> mask;  // per element: 0 (dropped) or 1/(1-rate) (kept)
};

// Inverted dropout: each element independently zeroed with probability rate,
// survivors scaled by 1/(1-rate) so inference needs no rescaling.
template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& x, double rate, Rng& rng);

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& gy, const Tensor<T>& mask);

// Row-wise softmax of logits [B,n] with max subtraction; rows sum to 1.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

// Mean over the batch of -log(p[label]), p clamped at 1e-12.
template <typename T>
double cross_entropy_loss(const Tensor<T>& probs, const Tensor<std::int64_t>& labels);

// Gradient of the mean cross-entropy with respect to the logits feeding the
// softmax: (p - onehot(label)) / B.
template <typename T>
Tensor<T> cross_entropy_grad_logits(const Tensor<T>& probs, const Tensor<std::int64_t>& labels);

}  // namespace d3fcnn
