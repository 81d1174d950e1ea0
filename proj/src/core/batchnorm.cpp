#include "batchnorm.hpp"

#include <cmath>
#include <vector>

#include "errors.hpp"

namespace d3fcnn {

namespace {

template <typename T>
std::int64_t check_channels(const Tensor<T>& x, const Tensor<T>& per_channel,
                            const char* what) {
  if (x.rank() < 2) throw ShapeError("batchnorm: input must have a batch and a channel axis");
  const std::int64_t c = x.extent(x.rank() - 1);
  if (per_channel.rank() != 1 || per_channel.extent(0) != c) {
    throw ShapeError(std::string("batchnorm: ") + what + " must be rank 1 with one entry per channel");
  }
  return c;
}

}  // namespace

template <typename T>
BnTrainResult<T> batchnorm_forward_train(const Tensor<T>& x, const Tensor<T>& gamma,
                                         const Tensor<T>& beta, double eps) {
  const std::int64_t C = check_channels(x, gamma, "gamma");
  check_channels(x, beta, "beta");
  const std::int64_t rows = x.size() / C;
  const T* xp = x.data();

  // two passes in double: mean, then squared deviations
  std::vector<double> m(static_cast<size_t>(C), 0.0), v(static_cast<size_t>(C), 0.0);
  {
    const T* p = xp;
    for (std::int64_t r = 0; r < rows; ++r, p += C)
      for (std::int64_t c = 0; c < C; ++c) m[static_cast<size_t>(c)] += p[c];
    for (auto& s : m) s /= static_cast<double>(rows);
    p = xp;
    for (std::int64_t r = 0; r < rows; ++r, p += C)
      for (std::int64_t c = 0; c < C; ++c) {
        const double d = p[c] - m[static_cast<size_t>(c)];
        v[static_cast<size_t>(c)] += d * d;
      }
    for (auto& s : v) s /= static_cast<double>(rows);
  }

  BnTrainResult<T> r{Tensor<T>(x.shape()), Tensor<T>(Shape{C}), Tensor<T>(Shape{C}),
                     Tensor<T>(Shape{C})};
  // kept in subtract form so a constant channel maps exactly to beta
  std::vector<T> mu(static_cast<size_t>(C)), scale(static_cast<size_t>(C));
  for (std::int64_t c = 0; c < C; ++c) {
    const size_t cc = static_cast<size_t>(c);
    const double istd = 1.0 / std::sqrt(v[cc] + eps);
    r.mean[c] = static_cast<T>(m[cc]);
    r.var[c] = static_cast<T>(v[cc]);
    r.invstd[c] = static_cast<T>(istd);
    mu[cc] = r.mean[c];
    scale[cc] = static_cast<T>(gamma[c] * istd);
  }
  T* yp = r.y.data();
  const T* p = xp;
  for (std::int64_t rr = 0; rr < rows; ++rr, p += C, yp += C)
    for (std::int64_t c = 0; c < C; ++c) {
      const size_t cc = static_cast<size_t>(c);
      yp[c] = scale[cc] * (p[c] - mu[cc]) + beta[c];
    }
  return r;
}

template <typename T>
Tensor<T> batchnorm_forward_infer(const Tensor<T>& x, const Tensor<T>& gamma,
                                  const Tensor<T>& beta, const Tensor<T>& running_mean,
                                  const Tensor<T>& running_var, double eps) {
  const std::int64_t C = check_channels(x, gamma, "gamma");
  check_channels(x, beta, "beta");
  check_channels(x, running_mean, "running_mean");
  check_channels(x, running_var, "running_var");
  const std::int64_t rows = x.size() / C;

  std::vector<T> scale(static_cast<size_t>(C));
  for (std::int64_t c = 0; c < C; ++c) {
    const double istd = 1.0 / std::sqrt(static_cast<double>(running_var[c]) + eps);
    scale[static_cast<size_t>(c)] = static_cast<T>(gamma[c] * istd);
  }
  Tensor<T> y(x.shape());
  const T* p = x.data();
  T* yp = y.data();
  for (std::int64_t r = 0; r < rows; ++r, p += C, yp += C)
    for (std::int64_t c = 0; c < C; ++c) {
      const size_t cc = static_cast<size_t>(c);
      yp[c] = scale[cc] * (p[c] - running_mean[c]) + beta[c];
    }
  return y;
}

template <typename T>
void batchnorm_update_running(Tensor<T>& running_mean, Tensor<T>& running_var,
                              const Tensor<T>& mean, const Tensor<T>& var, double momentum) {
  if (!running_mean.same_shape(mean) || !running_var.same_shape(var)) {
    throw ShapeError("batchnorm: running statistic shapes do not match batch statistics");
  }
  const std::int64_t C = mean.size();
  for (std::int64_t c = 0; c < C; ++c) {
    running_mean[c] = static_cast<T>(running_mean[c] * momentum + mean[c] * (1.0 - momentum));
    running_var[c] = static_cast<T>(running_var[c] * momentum + var[c] * (1.0 - momentum));
  }
}

template <typename T>
BnGrads<T> batchnorm_backward(const Tensor<T>& x, const Tensor<T>& gy, const Tensor<T>& gamma,
                              const Tensor<T>& mean, const Tensor<T>& invstd) {
  const std::int64_t C = check_channels(x, gamma, "gamma");
  check_channels(x, mean, "mean");
  check_channels(x, invstd, "invstd");
  if (!x.same_shape(gy)) throw ShapeError("batchnorm backward: gradient shape mismatch");
  const std::int64_t rows = x.size() / C;
  const double N = static_cast<double>(rows);

  const T* xp = x.data();
  const T* gp = gy.data();
  std::vector<double> sg(static_cast<size_t>(C), 0.0);   // sum of gy
  std::vector<double> sgx(static_cast<size_t>(C), 0.0);  // sum of gy * xhat
  {
    const T* px = xp;
    const T* pg = gp;
    for (std::int64_t r = 0; r < rows; ++r, px += C, pg += C)
      for (std::int64_t c = 0; c < C; ++c) {
        const size_t cc = static_cast<size_t>(c);
        const double xh = (px[c] - mean[c]) * invstd[c];
        sg[cc] += pg[c];
        sgx[cc] += pg[c] * xh;
      }
  }

  BnGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(Shape{C}), Tensor<T>(Shape{C})};
  for (std::int64_t c = 0; c < C; ++c) {
    g.dgamma[c] = static_cast<T>(sgx[static_cast<size_t>(c)]);
    g.dbeta[c] = static_cast<T>(sg[static_cast<size_t>(c)]);
  }
  // dx = gamma*invstd/N * (N*gy - sum(gy) - xhat*sum(gy*xhat))
  T* dp = g.dx.data();
  const T* px = xp;
  const T* pg = gp;
  for (std::int64_t r = 0; r < rows; ++r, px += C, pg += C, dp += C)
    for (std::int64_t c = 0; c < C; ++c) {
      const size_t cc = static_cast<size_t>(c);
      const double xh = (px[c] - mean[c]) * invstd[c];
      const double t = N * pg[c] - sg[cc] - xh * sgx[cc];
      dp[c] = static_cast<T>(gamma[c] * invstd[c] / N * t);
    }
  return g;
}

#define D3FCNN_BN_INSTANTIATE(T)                                                              \
  template BnTrainResult<T> batchnorm_forward_train<T>(const Tensor<T>&, const Tensor<T>&,    \
                                                       const Tensor<T>&, double);             \
  template Tensor<T> batchnorm_forward_infer<T>(const Tensor<T>&, const Tensor<T>&,           \
                                                const Tensor<T>&, const Tensor<T>&,           \
                                                const Tensor<T>&, double);                    \
  template void batchnorm_update_running<T>(Tensor<T>&, Tensor<T>&, const Tensor<T>&,         \
                                            const Tensor<T>&, double);                        \
  template BnGrads<T> batchnorm_backward<T>(const Tensor<T>&, const Tensor<T>&,               \
                                            const Tensor<T>&, const Tensor<T>&,               \
                                            const Tensor<T>&);

D3FCNN_BN_INSTANTIATE(float)
D3FCNN_BN_INSTANTIATE(double)

#undef D3FCNN_BN_INSTANTIATE

}  // namespace d3fcnn
