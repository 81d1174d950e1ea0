#include "pool.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "errors.hpp"

namespace d3fcnn {

namespace {

std::int64_t pool_out_extent(std::int64_t in, std::int64_t k, std::int64_t s, bool ceil_mode) {
  if (in <= 0 || k <= 0 || s <= 0) throw ShapeError("maxpool3d: extents and stride must be > 0");
  if (ceil_mode) {
    if (in <= k) return 1;
    std::int64_t out = (in - k + s - 1) / s + 1;
    // with s > k the rounded-up count can place the last window entirely
    // past the end; such a window is empty, so drop it
    if ((out - 1) * s >= in) --out;
    return out;
  }
  if (in < k) {
    throw ShapeError("maxpool3d: input extent " + std::to_string(in) +
                     " smaller than window " + std::to_string(k));
  }
  return (in - k) / s + 1;
}

}  // namespace

template <typename T>
PoolResult<T> maxpool3d_forward(const Tensor<T>& x, std::array<std::int64_t, 3> kernel,
                                std::array<std::int64_t, 3> stride, bool ceil_mode) {
  if (x.rank() != 5) throw ShapeError("maxpool3d: input must be rank 5 [B,H,W,T,C]");
  const std::int64_t B = x.extent(0), H = x.extent(1), W = x.extent(2), Tn = x.extent(3),
                     C = x.extent(4);
  const std::int64_t HO = pool_out_extent(H, kernel[0], stride[0], ceil_mode);
  const std::int64_t WO = pool_out_extent(W, kernel[1], stride[1], ceil_mode);
  const std::int64_t TO = pool_out_extent(Tn, kernel[2], stride[2], ceil_mode);

  PoolResult<T> r{Tensor<T>(Shape{B, HO, WO, TO, C}),
                  Tensor<std::int64_t>(Shape{B, HO, WO, TO, C}, -1)};
  const std::int64_t xT = C, xW = Tn * xT, xH = W * xW, xB = H * xH;
  const T* xp = x.data();
  T* yp = r.y.data();
  std::int64_t* ip = r.argmax.data();

  std::int64_t o = 0;
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t ho = 0; ho < HO; ++ho) {
      const std::int64_t h0 = ho * stride[0], h1 = std::min(h0 + kernel[0], H);
      for (std::int64_t wo = 0; wo < WO; ++wo) {
        const std::int64_t w0 = wo * stride[1], w1 = std::min(w0 + kernel[1], W);
        for (std::int64_t to = 0; to < TO; ++to) {
          const std::int64_t t0 = to * stride[2], t1 = std::min(t0 + kernel[2], Tn);
          for (std::int64_t c = 0; c < C; ++c, ++o) {
            T best = std::numeric_limits<T>::lowest();
            std::int64_t bi = -1;
            for (std::int64_t h = h0; h < h1; ++h)
              for (std::int64_t w = w0; w < w1; ++w)
                for (std::int64_t t = t0; t < t1; ++t) {
                  const std::int64_t i = b * xB + h * xH + w * xW + t * xT + c;
                  if (xp[i] > best) {  // strict: ties keep the first scanned
                    best = xp[i];
                    bi = i;
                  }
                }
            yp[o] = best;
            ip[o] = bi;
          }
        }
      }
    }
  return r;
}

template <typename T>
Tensor<T> maxpool3d_backward(const Tensor<T>& gy, const Tensor<std::int64_t>& argmax,
                             const Shape& in_shape) {
  if (gy.shape() != argmax.shape()) {
    throw ShapeError("maxpool3d backward: gradient and argmax shapes differ");
  }
  Tensor<T> dx(in_shape, T(0));
  const T* gp = gy.data();
  const std::int64_t* ip = argmax.data();
  T* dp = dx.data();
  const std::int64_t n = gy.size(), in_n = dx.size();
  for (std::int64_t o = 0; o < n; ++o) {
    const std::int64_t i = ip[o];
    if (i < 0 || i >= in_n) throw ShapeError("maxpool3d backward: argmax index out of range");
    dp[i] += gp[o];
  }
  return dx;
}

template <typename T>
Tensor<T> global_avgpool2d_forward(const Tensor<T>& x) {
  if (x.rank() != 4) throw ShapeError("global_avgpool2d: input must be rank 4 [B,H,W,C]");
  const std::int64_t B = x.extent(0), H = x.extent(1), W = x.extent(2), C = x.extent(3);
  Tensor<T> y(Shape{B, C}, T(0));
  const T* xp = x.data();
  const double inv = 1.0 / static_cast<double>(H * W);
  std::vector<double> acc(static_cast<size_t>(C));
  for (std::int64_t b = 0; b < B; ++b) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const T* row = xp + b * H * W * C;
    for (std::int64_t i = 0; i < H * W; ++i, row += C)
      for (std::int64_t c = 0; c < C; ++c) acc[static_cast<size_t>(c)] += row[c];
    for (std::int64_t c = 0; c < C; ++c)
      y[b * C + c] = static_cast<T>(acc[static_cast<size_t>(c)] * inv);
  }
  return y;
}

template <typename T>
Tensor<T> global_avgpool2d_backward(const Tensor<T>& gy, const Shape& in_shape) {
  if (gy.rank() != 2 || in_shape.size() != 4) {
    throw ShapeError("global_avgpool2d backward: expected [B,C] gradient and rank 4 input shape");
  }
  if (gy.extent(0) != in_shape[0] || gy.extent(1) != in_shape[3]) {
    throw ShapeError("global_avgpool2d backward: gradient does not match input shape");
  }
  const std::int64_t B = in_shape[0], H = in_shape[1], W = in_shape[2], C = in_shape[3];
  Tensor<T> dx(in_shape);
  const T inv = static_cast<T>(1.0 / static_cast<double>(H * W));
  T* dp = dx.data();
  const T* gp = gy.data();
  for (std::int64_t b = 0; b < B; ++b) {
    const T* g = gp + b * C;
    T* row = dp + b * H * W * C;
    for (std::int64_t i = 0; i < H * W; ++i, row += C)
      for (std::int64_t c = 0; c < C; ++c) row[c] = g[c] * inv;
  }
  return dx;
}

#define D3FCNN_POOL_INSTANTIATE(T)                                                         \
  template PoolResult<T> maxpool3d_forward<T>(const Tensor<T>&, std::array<std::int64_t, 3>, \
                                              std::array<std::int64_t, 3>, bool);          \
  template Tensor<T> maxpool3d_backward<T>(const Tensor<T>&, const Tensor<std::int64_t>&,  \
                                           const Shape&);                                  \
  template Tensor<T> global_avgpool2d_forward<T>(const Tensor<T>&);                        \
  template Tensor<T> global_avgpool2d_backward<T>(const Tensor<T>&, const Shape&);

D3FCNN_POOL_INSTANTIATE(float)
D3FCNN_POOL_INSTANTIATE(double)

#undef D3FCNN_POOL_INSTANTIATE

}  // namespace d3fcnn
