#include "conv.hpp"

#include <algorithm>
#include <cstring>
#include <string>
#include <vector>

#include "errors.hpp"

namespace d3fcnn {

std::int64_t conv_out_extent(std::int64_t in, std::int64_t k, std::int64_t stride, Pad pad) {
  if (pad == Pad::same) return (in + stride - 1) / stride;
  if (in < k) {
    throw ShapeError("conv: input extent " + std::to_string(in) +
                     " smaller than kernel " + std::to_string(k));
  }
  return (in - k) / stride + 1;
}

std::int64_t conv_pad_before(std::int64_t in, std::int64_t k, std::int64_t stride, Pad pad) {
  if (pad == Pad::valid) return 0;
  const std::int64_t out = (in + stride - 1) / stride;
  const std::int64_t total = std::max<std::int64_t>((out - 1) * stride + k - in, 0);
  return total / 2;  // odd totals put the extra row after, matching ceil-grid cover
}

namespace {

struct ConvDims {
  std::int64_t B, H, W, T, CI, CO;
  std::int64_t KH, KW, KT;
  std::int64_t SH, SW, ST;
  std::int64_t PH, PW, PT;
  std::int64_t HO, WO, TO;
};

ConvDims make_dims(const Shape& xs, const Shape& ws, std::array<std::int64_t, 3> stride,
                   Pad pad) {
  if (xs.size() != 5) throw ShapeError("conv3d: input must be rank 5 [B,H,W,T,C]");
  if (ws.size() != 5) throw ShapeError("conv3d: weights must be rank 5 [kh,kw,kt,cin,cout]");
  for (auto s : stride) {
    if (s < 1) throw ShapeError("conv3d: stride must be >= 1");
  }
  if (ws[3] != xs[4]) {
    throw ShapeError("conv3d: weight cin " + std::to_string(ws[3]) +
                     " does not match input channels " + std::to_string(xs[4]));
  }
  ConvDims d;
  d.B = xs[0]; d.H = xs[1]; d.W = xs[2]; d.T = xs[3]; d.CI = xs[4];
  d.KH = ws[0]; d.KW = ws[1]; d.KT = ws[2]; d.CO = ws[4];
  d.SH = stride[0]; d.SW = stride[1]; d.ST = stride[2];
  d.HO = conv_out_extent(d.H, d.KH, d.SH, pad);
  d.WO = conv_out_extent(d.W, d.KW, d.SW, pad);
  d.TO = conv_out_extent(d.T, d.KT, d.ST, pad);
  d.PH = conv_pad_before(d.H, d.KH, d.SH, pad);
  d.PW = conv_pad_before(d.W, d.KW, d.SW, pad);
  d.PT = conv_pad_before(d.T, d.KT, d.ST, pad);
  return d;
}

// Direct convolution. Outputs are produced four-at-a-time along the temporal
// axis so each weight load feeds four independent accumulator rows; rows fall
// back to one-at-a-time wherever a temporal tap leaves the input. COC fixes
// the channel count at compile time for the layer widths the network uses;
// 0 keeps it dynamic.
template <typename T, int COC>
void forward_raw_impl(const T* x, const T* w, const T* bias, T* y, const ConvDims& d) {
  const std::int64_t xT = d.CI;
  const std::int64_t xW = d.T * xT;
  const std::int64_t xH = d.W * xW;
  const std::int64_t xB = d.H * xH;
  const std::int64_t yB = d.HO * d.WO * d.TO * d.CO;
  const std::int64_t wK = d.CI * d.CO;
  const std::int64_t CO = COC > 0 ? COC : d.CO;
  const std::int64_t CI = d.CI;
  const std::int64_t step = d.ST * xT;

  std::vector<T> accbuf(4 * CO);
  T* const __restrict acc0 = accbuf.data();
  T* const __restrict acc1 = acc0 + CO;
  T* const __restrict acc2 = acc0 + 2 * CO;
  T* const __restrict acc3 = acc0 + 3 * CO;

  for (std::int64_t b = 0; b < d.B; ++b) {
    const T* xb = x + b * xB;
    T* yrow = y + b * yB;
    for (std::int64_t ho = 0; ho < d.HO; ++ho) {
      for (std::int64_t wo = 0; wo < d.WO; ++wo) {
        std::int64_t to = 0;
        for (; to + 4 <= d.TO; to += 4) {
          for (int u = 0; u < 4; ++u)
            std::copy(bias, bias + CO, acc0 + u * CO);
          for (std::int64_t kh = 0; kh < d.KH; ++kh) {
            const std::int64_t hi = ho * d.SH + kh - d.PH;
            if (hi < 0 || hi >= d.H) continue;
            for (std::int64_t kw = 0; kw < d.KW; ++kw) {
              const std::int64_t wi = wo * d.SW + kw - d.PW;
              if (wi < 0 || wi >= d.W) continue;
              const T* xrow = xb + hi * xH + wi * xW;
              for (std::int64_t kt = 0; kt < d.KT; ++kt) {
                const std::int64_t ti0 = to * d.ST + kt - d.PT;
                const T* wp = w + ((kh * d.KW + kw) * d.KT + kt) * wK;
                if (ti0 < 0 || ti0 + 3 * d.ST >= d.T) {
                  // edge: handle each of the four outputs on its own
                  for (int u = 0; u < 4; ++u) {
                    const std::int64_t ti = ti0 + u * d.ST;
                    if (ti < 0 || ti >= d.T) continue;
                    const T* __restrict xp = xrow + ti * xT;
                    T* __restrict acc = acc0 + u * CO;
                    for (std::int64_t ci = 0; ci < CI; ++ci) {
                      const T xv = xp[ci];
                      const T* __restrict wr = wp + ci * CO;
                      for (std::int64_t co = 0; co < CO; ++co) acc[co] += xv * wr[co];
                    }
                  }
                  continue;
                }
                const T* __restrict xp = xrow + ti0 * xT;
                for (std::int64_t ci = 0; ci < CI; ++ci) {
                  const T xv0 = xp[ci];
                  const T xv1 = xp[step + ci];
                  const T xv2 = xp[2 * step + ci];
                  const T xv3 = xp[3 * step + ci];
                  const T* __restrict wr = wp + ci * CO;
                  for (std::int64_t co = 0; co < CO; ++co) {
                    const T wv = wr[co];
                    acc0[co] += xv0 * wv;
                    acc1[co] += xv1 * wv;
                    acc2[co] += xv2 * wv;
                    acc3[co] += xv3 * wv;
                  }
                }
              }
            }
          }
          std::copy(acc0, acc0 + 4 * CO, yrow);  // the four output rows are contiguous
          yrow += 4 * CO;
        }
        for (; to < d.TO; ++to) {
          std::copy(bias, bias + CO, acc0);
          for (std::int64_t kh = 0; kh < d.KH; ++kh) {
            const std::int64_t hi = ho * d.SH + kh - d.PH;
            if (hi < 0 || hi >= d.H) continue;
            for (std::int64_t kw = 0; kw < d.KW; ++kw) {
              const std::int64_t wi = wo * d.SW + kw - d.PW;
              if (wi < 0 || wi >= d.W) continue;
              for (std::int64_t kt = 0; kt < d.KT; ++kt) {
                const std::int64_t ti = to * d.ST + kt - d.PT;
                if (ti < 0 || ti >= d.T) continue;
                const T* __restrict xp = xb + hi * xH + wi * xW + ti * xT;
                const T* wp = w + ((kh * d.KW + kw) * d.KT + kt) * wK;
                for (std::int64_t ci = 0; ci < CI; ++ci) {
                  const T xv = xp[ci];
                  const T* __restrict wr = wp + ci * CO;
                  for (std::int64_t co = 0; co < CO; ++co) acc0[co] += xv * wr[co];
                }
              }
            }
          }
          std::copy(acc0, acc0 + CO, yrow);
          yrow += CO;
        }
      }
    }
  }
}

template <typename T>
void forward_raw(const T* x, const T* w, const T* bias, T* y, const ConvDims& d) {
  switch (d.CO) {
    case 32: return forward_raw_impl<T, 32>(x, w, bias, y, d);
    case 64: return forward_raw_impl<T, 64>(x, w, bias, y, d);
    case 128: return forward_raw_impl<T, 128>(x, w, bias, y, d);
    default: return forward_raw_impl<T, 0>(x, w, bias, y, d);
  }
}

// dw[kh,kw,kt,ci,co] = sum over batch and output grid of x * gy, same temporal
// four-way blocking as the forward pass.
template <typename T, int COC>
void grad_w_raw_impl(const T* x, const T* gy, T* dw, const ConvDims& d) {
  const std::int64_t xT = d.CI;
  const std::int64_t xW = d.T * xT;
  const std::int64_t xH = d.W * xW;
  const std::int64_t xB = d.H * xH;
  const std::int64_t yB = d.HO * d.WO * d.TO * d.CO;
  const std::int64_t wK = d.CI * d.CO;
  const std::int64_t CO = COC > 0 ? COC : d.CO;
  const std::int64_t CI = d.CI;
  const std::int64_t step = d.ST * xT;

  for (std::int64_t b = 0; b < d.B; ++b) {
    const T* xb = x + b * xB;
    const T* gyb = gy + b * yB;
    for (std::int64_t ho = 0; ho < d.HO; ++ho) {
      for (std::int64_t wo = 0; wo < d.WO; ++wo) {
        const T* gyrow = gyb + (ho * d.WO + wo) * d.TO * CO;
        for (std::int64_t kh = 0; kh < d.KH; ++kh) {
          const std::int64_t hi = ho * d.SH + kh - d.PH;
          if (hi < 0 || hi >= d.H) continue;
          for (std::int64_t kw = 0; kw < d.KW; ++kw) {
            const std::int64_t wi = wo * d.SW + kw - d.PW;
            if (wi < 0 || wi >= d.W) continue;
            const T* xrow = xb + hi * xH + wi * xW;
            for (std::int64_t kt = 0; kt < d.KT; ++kt) {
              T* dwk = dw + ((kh * d.KW + kw) * d.KT + kt) * wK;
              std::int64_t to = 0;
              for (; to + 4 <= d.TO; to += 4) {
                const std::int64_t ti0 = to * d.ST + kt - d.PT;
                const T* __restrict g0 = gyrow + to * CO;
                const T* __restrict g1 = g0 + CO;
                const T* __restrict g2 = g0 + 2 * CO;
                const T* __restrict g3 = g0 + 3 * CO;
                if (ti0 < 0 || ti0 + 3 * d.ST >= d.T) {
                  for (int u = 0; u < 4; ++u) {
                    const std::int64_t ti = ti0 + u * d.ST;
                    if (ti < 0 || ti >= d.T) continue;
                    const T* __restrict xp = xrow + ti * xT;
                    const T* __restrict gu = g0 + u * CO;
                    for (std::int64_t ci = 0; ci < CI; ++ci) {
                      const T xv = xp[ci];
                      T* __restrict dwr = dwk + ci * CO;
                      for (std::int64_t co = 0; co < CO; ++co) dwr[co] += xv * gu[co];
                    }
                  }
                  continue;
                }
                const T* __restrict xp = xrow + ti0 * xT;
                for (std::int64_t ci = 0; ci < CI; ++ci) {
                  const T xv0 = xp[ci];
                  const T xv1 = xp[step + ci];
                  const T xv2 = xp[2 * step + ci];
                  const T xv3 = xp[3 * step + ci];
                  T* __restrict dwr = dwk + ci * CO;
                  for (std::int64_t co = 0; co < CO; ++co) {
                    dwr[co] += xv0 * g0[co] + xv1 * g1[co] + xv2 * g2[co] + xv3 * g3[co];
                  }
                }
              }
              for (; to < d.TO; ++to) {
                const std::int64_t ti = to * d.ST + kt - d.PT;
                if (ti < 0 || ti >= d.T) continue;
                const T* __restrict xp = xrow + ti * xT;
                const T* __restrict gu = gyrow + to * CO;
                for (std::int64_t ci = 0; ci < CI; ++ci) {
                  const T xv = xp[ci];
                  T* __restrict dwr = dwk + ci * CO;
                  for (std::int64_t co = 0; co < CO; ++co) dwr[co] += xv * gu[co];
                }
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void grad_w_raw(const T* x, const T* gy, T* dw, const ConvDims& d) {
  switch (d.CO) {
    case 32: return grad_w_raw_impl<T, 32>(x, gy, dw, d);
    case 64: return grad_w_raw_impl<T, 64>(x, gy, dw, d);
    case 128: return grad_w_raw_impl<T, 128>(x, gy, dw, d);
    default: return grad_w_raw_impl<T, 0>(x, gy, dw, d);
  }
}

// General-stride fallback: walk the output grid and scatter w^T * gy rows
// back onto the input positions each window touched.
template <typename T>
void grad_x_scatter(const T* w, const T* gy, T* dx, const ConvDims& d) {
  const std::int64_t xT = d.CI;
  const std::int64_t xW = d.T * xT;
  const std::int64_t xH = d.W * xW;
  const std::int64_t xB = d.H * xH;
  const std::int64_t yB = d.HO * d.WO * d.TO * d.CO;
  const std::int64_t wK = d.CI * d.CO;
  const std::int64_t CO = d.CO, CI = d.CI;

  for (std::int64_t b = 0; b < d.B; ++b) {
    T* dxb = dx + b * xB;
    const T* gyb = gy + b * yB;
    for (std::int64_t ho = 0; ho < d.HO; ++ho)
      for (std::int64_t wo = 0; wo < d.WO; ++wo)
        for (std::int64_t to = 0; to < d.TO; ++to) {
          const T* __restrict gr = gyb + ((ho * d.WO + wo) * d.TO + to) * CO;
          for (std::int64_t kh = 0; kh < d.KH; ++kh) {
            const std::int64_t hi = ho * d.SH + kh - d.PH;
            if (hi < 0 || hi >= d.H) continue;
            for (std::int64_t kw = 0; kw < d.KW; ++kw) {
              const std::int64_t wi = wo * d.SW + kw - d.PW;
              if (wi < 0 || wi >= d.W) continue;
              for (std::int64_t kt = 0; kt < d.KT; ++kt) {
                const std::int64_t ti = to * d.ST + kt - d.PT;
                if (ti < 0 || ti >= d.T) continue;
                T* __restrict dxp = dxb + hi * xH + wi * xW + ti * xT;
                const T* wp = w + ((kh * d.KW + kw) * d.KT + kt) * wK;
                for (std::int64_t ci = 0; ci < CI; ++ci) {
                  const T* __restrict wr = wp + ci * CO;
                  T s = 0;
                  for (std::int64_t co = 0; co < CO; ++co) s += wr[co] * gr[co];
                  dxp[ci] += s;
                }
              }
            }
          }
        }
  }
}

template <typename T>
Tensor<T> conv_backward_x(const Tensor<T>& w, const Tensor<T>& gy, const ConvDims& d) {
  Tensor<T> dx(Shape{d.B, d.H, d.W, d.T, d.CI}, T(0));
  if (d.SH == 1 && d.SW == 1 && d.ST == 1) {
    // stride 1: input gradients are themselves a convolution of gy with the
    // kernel flipped on every spatial axis and cin/cout swapped, so the fast
    // forward kernel does the work.
    Tensor<T> wf(Shape{d.KH, d.KW, d.KT, d.CO, d.CI}, T(0));
    const T* ws = w.data();
    T* wd = wf.data();
    for (std::int64_t kh = 0; kh < d.KH; ++kh)
      for (std::int64_t kw = 0; kw < d.KW; ++kw)
        for (std::int64_t kt = 0; kt < d.KT; ++kt) {
          const T* src =
              ws + (((d.KH - 1 - kh) * d.KW + (d.KW - 1 - kw)) * d.KT + (d.KT - 1 - kt)) *
                       d.CI * d.CO;
          T* dst = wd + ((kh * d.KW + kw) * d.KT + kt) * d.CO * d.CI;
          for (std::int64_t ci = 0; ci < d.CI; ++ci)
            for (std::int64_t co = 0; co < d.CO; ++co) dst[co * d.CI + ci] = src[ci * d.CO + co];
        }
    ConvDims t;
    t.B = d.B; t.H = d.HO; t.W = d.WO; t.T = d.TO; t.CI = d.CO; t.CO = d.CI;
    t.KH = d.KH; t.KW = d.KW; t.KT = d.KT;
    t.SH = 1; t.SW = 1; t.ST = 1;
    t.PH = d.KH - 1 - d.PH; t.PW = d.KW - 1 - d.PW; t.PT = d.KT - 1 - d.PT;
    t.HO = d.H; t.WO = d.W; t.TO = d.T;
    const Tensor<T> zero_bias(Shape{d.CI}, T(0));
    forward_raw(gy.data(), wf.data(), zero_bias.data(),
                dx.data(), t);
  } else {
    grad_x_scatter(w.data(), gy.data(), dx.data(), d);
  }
  return dx;
}

template <typename T>
void check_gy(const Tensor<T>& gy, const ConvDims& d) {
  const Shape want{d.B, d.HO, d.WO, d.TO, d.CO};
  if (gy.shape() != want) {
    throw ShapeError("conv backward: upstream gradient shape does not match the forward output");
  }
}

}  // namespace

template <typename T>
Tensor<T> conv3d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         std::array<std::int64_t, 3> stride, Pad pad) {
  const ConvDims d = make_dims(x.shape(), w.shape(), stride, pad);
  if (b.rank() != 1 || b.extent(0) != d.CO) {
    throw ShapeError("conv3d: bias must be rank 1 with one entry per output channel");
  }
  Tensor<T> y(Shape{d.B, d.HO, d.WO, d.TO, d.CO});
  forward_raw(x.data(), w.data(), b.data(), y.data(), d);
  return y;
}

template <typename T>
ConvGrads<T> conv3d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy,
                             std::array<std::int64_t, 3> stride, Pad pad, bool need_dx) {
  const ConvDims d = make_dims(x.shape(), w.shape(), stride, pad);
  check_gy(gy, d);
  ConvGrads<T> g;
  g.dw = Tensor<T>(w.shape(), T(0));
  grad_w_raw(x.data(), gy.data(), g.dw.data(), d);

  g.db = Tensor<T>(Shape{d.CO}, T(0));
  {
    std::vector<double> acc(static_cast<size_t>(d.CO), 0.0);
    const T* gp = gy.data();
    const std::int64_t rows = d.B * d.HO * d.WO * d.TO;
    for (std::int64_t r = 0; r < rows; ++r, gp += d.CO)
      for (std::int64_t co = 0; co < d.CO; ++co) acc[static_cast<size_t>(co)] += gp[co];
    for (std::int64_t co = 0; co < d.CO; ++co)
      g.db[co] = static_cast<T>(acc[static_cast<size_t>(co)]);
  }

  if (need_dx) g.dx = conv_backward_x(w, gy, d);
  return g;
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         std::array<std::int64_t, 2> stride, Pad pad) {
  if (x.rank() != 4) throw ShapeError("conv2d: input must be rank 4 [B,H,W,C]");
  if (w.rank() != 4) throw ShapeError("conv2d: weights must be rank 4 [kh,kw,cin,cout]");
  Tensor<T> x5 = x.reshaped({x.extent(0), x.extent(1), x.extent(2), 1, x.extent(3)});
  Tensor<T> w5 = w.reshaped({w.extent(0), w.extent(1), 1, w.extent(2), w.extent(3)});
  Tensor<T> y = conv3d_forward(x5, w5, b, {stride[0], stride[1], 1}, pad);
  return std::move(y).reshaped({y.extent(0), y.extent(1), y.extent(2), y.extent(4)});
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy,
                             std::array<std::int64_t, 2> stride, Pad pad, bool need_dx) {
  if (x.rank() != 4) throw ShapeError("conv2d: input must be rank 4 [B,H,W,C]");
  if (w.rank() != 4) throw ShapeError("conv2d: weights must be rank 4 [kh,kw,cin,cout]");
  if (gy.rank() != 4) throw ShapeError("conv2d: upstream gradient must be rank 4");
  Tensor<T> x5 = x.reshaped({x.extent(0), x.extent(1), x.extent(2), 1, x.extent(3)});
  Tensor<T> w5 = w.reshaped({w.extent(0), w.extent(1), 1, w.extent(2), w.extent(3)});
  Tensor<T> g5 = gy.reshaped({gy.extent(0), gy.extent(1), gy.extent(2), 1, gy.extent(3)});
  ConvGrads<T> g = conv3d_backward(x5, w5, g5, {stride[0], stride[1], 1}, pad, need_dx);
  g.dw = std::move(g.dw).reshaped(w.shape());
  if (need_dx) g.dx = std::move(g.dx).reshaped(x.shape());
  return g;
}

#define D3FCNN_CONV_INSTANTIATE(T)                                                              \
  template Tensor<T> conv3d_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                       std::array<std::int64_t, 3>, Pad);                       \
  template ConvGrads<T> conv3d_backward<T>(const Tensor<T>&, const Tensor<T>&,                 \
                                           const Tensor<T>&, std::array<std::int64_t, 3>, Pad, \
                                           bool);                                              \
  template Tensor<T> conv2d_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                       std::array<std::int64_t, 2>, Pad);                       \
  template ConvGrads<T> conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&,                 \
                                           const Tensor<T>&, std::array<std::int64_t, 2>, Pad, \
                                           bool);

D3FCNN_CONV_INSTANTIATE(float)
D3FCNN_CONV_INSTANTIATE(double)

#undef D3FCNN_CONV_INSTANTIATE

}  // namespace d3fcnn
