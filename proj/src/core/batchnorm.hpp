#pragma once

#include "tensor.hpp"

namespace d3fcnn {

// Batch normalization over the last (channel) axis; statistics pool every
// other axis. All tensors of per-channel values are rank 1 [C].

template <typename T>
struct BnTrainResult {
  Tensor<T> y;
  Tensor<T> mean;    // batch mean
  Tensor<T> var;     // biased batch variance (divides by N)
  Tensor<T> invstd;  // 1/sqrt(var + eps), cached for the backward pass
};

template <typename T>
struct BnGrads {
  Tensor<T> dx;
  Tensor<T> dgamma;
  Tensor<T> dbeta;
};

template <typename T>
BnTrainResult<T> batchnorm_forward_train(const Tensor<T>& x, const Tensor<T>& gamma,
                                         const Tensor<T>& beta, double eps);

template <typename T>
Tensor<T> batchnorm_forward_infer(const Tensor<T>& x, const Tensor<T>& gamma,
                                  const Tensor<T>& beta, const Tensor<T>& running_mean,
                                  const Tensor<T>& running_var, double eps);

// running = running * momentum + batch * (1 - momentum)
template <typename T>
void batchnorm_update_running(Tensor<T>& running_mean, Tensor<T>& running_var,
                              const Tensor<T>& mean, const Tensor<T>& var, double momentum);

// x is the forward input; mean/invstd are the cached batch statistics.
template <typename T>
BnGrads<T> batchnorm_backward(const Tensor<T>& x, const Tensor<T>& gy, const Tensor<T>& gamma,
                              const Tensor<T>& mean, const Tensor<T>& invstd);

}  // namespace d3fcnn
