#pragma once

#include <array>
#include <cstdint>

#include "tensor.hpp"

namespace d3fcnn {

enum class Pad { same, valid };

// Output extent and leading pad for one axis.
// same:  out = ceil(in / stride), pad split floor-before / rest-after.
// valid: out = (in - k) / stride + 1, requires in >= k.
std::int64_t conv_out_extent(std::int64_t in, std::int64_t k, std::int64_t stride, Pad pad);
std::int64_t conv_pad_before(std::int64_t in, std::int64_t k, std::int64_t stride, Pad pad);

template <typename T>
struct ConvGrads {
  Tensor<T> dx;  // stays empty when the caller skips input gradients
  Tensor<T> dw;
  Tensor<T> db;
};

// x [B,H,W,T,Cin], w [kh,kw,kt,Cin,Cout], b [Cout] -> y [B,Ho,Wo,To,Cout].
// Accumulation order per output element is fixed (kh, kw, kt, cin) so results
// are reproducible run to run.
template <typename T>
Tensor<T> conv3d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         std::array<std::int64_t, 3> stride, Pad pad);

template <typename T>
ConvGrads<T> conv3d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy,
                             std::array<std::int64_t, 3> stride, Pad pad, bool need_dx);

// x [B,H,W,Cin], w [kh,kw,Cin,Cout]; runs the 3-d kernel with a unit temporal axis.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         std::array<std::int64_t, 2> stride, Pad pad);

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy,
                             std::array<std::int64_t, 2> stride, Pad pad, bool need_dx);

}  // namespace d3fcnn
