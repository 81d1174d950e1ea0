#include "pointwise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace d3fcnn {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("leaky_relu: alpha must be in (0,1)");
}

}  // namespace

template <typename T>
Tensor<T> leaky_relu_forward(const Tensor<T>& x, double alpha) {
  check_alpha(alpha);
  Tensor<T> y(x.shape());
  const T a = static_cast<T>(alpha);
  const T* xp = x.data();
  T* yp = y.data();
  const std::int64_t n = x.size();
  for (std::int64_t i = 0; i < n; ++i) yp[i] = xp[i] >= T(0) ? xp[i] : a * xp[i];
  return y;
}

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& gy, double alpha) {
  check_alpha(alpha);
  if (!x.same_shape(gy)) throw ShapeError("leaky_relu backward: gradient shape mismatch");
  Tensor<T> dx(x.shape());
  const T a = static_cast<T>(alpha);
  const T* xp = x.data();
  const T* gp = gy.data();
  T* dp = dx.data();
  const std::int64_t n = x.size();
  for (std::int64_t i = 0; i < n; ++i) dp[i] = xp[i] >= T(0) ? gp[i] : a * gp[i];
  return dx;
}

template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& x, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must be in [0,1)");
  DropoutResult<T> r{Tensor<T>(x.shape()), Tensor<T>(x.shape())};
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  const T* xp = x.data();
  T* yp = r.y.data();
  T* mp = r.mask.data();
  const std::int64_t n = x.size();
  for (std::int64_t i = 0; i < n; ++i) {
    const T m = rng.uniform() < rate ? T(0) : keep_scale;
    mp[i] = m;
    yp[i] = xp[i] * m;
  }
  return r;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& gy, const Tensor<T>& mask) {
  if (!gy.same_shape(mask)) throw ShapeError("dropout backward: gradient shape mismatch");
  Tensor<T> dx(gy.shape());
  const T* gp = gy.data();
  const T* mp = mask.data();
  T* dp = dx.data();
  const std::int64_t n = gy.size();
  for (std::int64_t i = 0; i < n; ++i) dp[i] = gp[i] * mp[i];
  return dx;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  if (logits.rank() != 2 || logits.extent(1) < 1) {
    throw ShapeError("softmax: expected logits of shape [B,n] with n >= 1");
  }
  const std::int64_t B = logits.extent(0), n = logits.extent(1);
  Tensor<T> y(logits.shape());
  const T* lp = logits.data();
  T* yp = y.data();
  for (std::int64_t b = 0; b < B; ++b, lp += n, yp += n) {
    T mx = lp[0];
    for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, lp[j]);
    double denom = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      const double e = std::exp(static_cast<double>(lp[j] - mx));
      yp[j] = static_cast<T>(e);
      denom += e;
    }
    const double inv = 1.0 / denom;
    for (std::int64_t j = 0; j < n; ++j) yp[j] = static_cast<T>(yp[j] * inv);
  }
  return y;
}

template <typename T>
static void check_labels(const Tensor<T>& probs, const Tensor<std::int64_t>& labels) {
  if (probs.rank() != 2) throw ShapeError("cross_entropy: probabilities must be [B,n]");
  if (labels.rank() != 1 || labels.extent(0) != probs.extent(0)) {
    throw ShapeError("cross_entropy: labels must be rank 1 with one entry per row");
  }
  const std::int64_t n = probs.extent(1);
  for (std::int64_t b = 0; b < labels.extent(0); ++b) {
    if (labels[b] < 0 || labels[b] >= n) {
      throw ShapeError("cross_entropy: label " + std::to_string(labels[b]) +
                       " out of range for " + std::to_string(n) + " classes");
    }
  }
}

template <typename T>
double cross_entropy_loss(const Tensor<T>& probs, const Tensor<std::int64_t>& labels) {
  check_labels(probs, labels);
  const std::int64_t B = probs.extent(0), n = probs.extent(1);
  double total = 0.0;
  for (std::int64_t b = 0; b < B; ++b) {
    const double p = std::max(static_cast<double>(probs[b * n + labels[b]]), 1e-12);
    total -= std::log(p);
  }
  return total / static_cast<double>(B);
}

template <typename T>
Tensor<T> cross_entropy_grad_logits(const Tensor<T>& probs, const Tensor<std::int64_t>& labels) {
  check_labels(probs, labels);
  const std::int64_t B = probs.extent(0), n = probs.extent(1);
  Tensor<T> g(probs.shape());
  const T invb = static_cast<T>(1.0 / static_cast<double>(B));
  for (std::int64_t b = 0; b < B; ++b) {
    for (std::int64_t j = 0; j < n; ++j) g[b * n + j] = probs[b * n + j] * invb;
    g[b * n + labels[b]] -= invb;
  }
  return g;
}

#define D3FCNN_POINTWISE_INSTANTIATE(T)                                                  \
  template Tensor<T> leaky_relu_forward<T>(const Tensor<T>&, double);                    \
  template Tensor<T> leaky_relu_backward<T>(const Tensor<T>&, const Tensor<T>&, double); \
  template DropoutResult<T> dropout_forward<T>(const Tensor<T>&, double, Rng&);          \
  template Tensor<T> dropout_backward<T>(const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> softmax<T>(const Tensor<T>&);                                       \
  template double cross_entropy_loss<T>(const Tensor<T>&, const Tensor<std::int64_t>&);  \
  template Tensor<T> cross_entropy_grad_logits<T>(const Tensor<T>&,                      \
                                                  const Tensor<std::int64_t>&);

D3FCNN_POINTWISE_INSTANTIATE(float)
D3FCNN_POINTWISE_INSTANTIATE(double)

#undef D3FCNN_POINTWISE_INSTANTIATE

}  // namespace d3fcnn
