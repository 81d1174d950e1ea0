#pragma once

#include <array>
#include <cstdint>

#include "tensor.hpp"

namespace d3fcnn {

template <typename T>
struct PoolResult {
  Tensor<T> y;
  Tensor<std::int64_t> argmax;  // flat index into the input, one per output element
};

// Max pooling over H, W, T of x [B,H,W,T,C], per channel.
// ceil_mode adds clipped windows so every input element is covered; ties keep
// the first element in (h, w, t) scan order.
template <typename T>
PoolResult<T> maxpool3d_forward(const Tensor<T>& x, std::array<std::int64_t, 3> kernel,
                                std::array<std::int64_t, 3> stride, bool ceil_mode);

template <typename T>
Tensor<T> maxpool3d_backward(const Tensor<T>& gy, const Tensor<std::int64_t>& argmax,
                             const Shape& in_shape);

// Mean over H and W of x [B,H,W,C] -> [B,C].
template <typename T>
Tensor<T> global_avgpool2d_forward(const Tensor<T>& x);

template <typename T>
Tensor<T> global_avgpool2d_backward(const Tensor<T>& gy, const Shape& in_shape);

}  // namespace d3fcnn
