#pragma once

#include <cstdint>
#include <vector>

#include "nn/layers.hpp"

namespace d3fcnn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Standard Adam with bias correction. Moment tensors are created lazily on
/// the first step and keyed by position in the parameter list, so the list
/// must stay stable for the optimizer's lifetime.
template <typename T>
class Adam {
public:
  explicit Adam(std::vector<Param<T>*> params, AdamConfig cfg = {});

  /// One update over every tracked parameter. A non-finite gradient anywhere
  /// rejects the whole step before any parameter is touched.
  void step(double lr);

  std::int64_t t() const { return t_; }

private:
  std::vector<Param<T>*> params_;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
  AdamConfig cfg_;
  std::int64_t t_ = 0;
};

}  // namespace d3fcnn
