#include "nn/layers.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace d3fcnn {

namespace {

template <typename T>
TensorPtr<T> require(const TensorPtr<T>& x, const char* who) {
  if (!x) throw Error(std::string(who) + ": null input tensor");
  return x;
}

template <typename T>
void require_cache(const TensorPtr<T>& c, const std::string& name) {
  if (!c) throw Error(name + ": backward called without a cached forward pass");
}

}  // namespace

template <typename T>
void glorot_fill(Tensor<T>& w, std::int64_t fan_in, std::int64_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.flat()) v = static_cast<T>(rng.uniform(-bound, bound));
}

// ---- Conv3dLayer ------------------------------------------------------------

template <typename T>
Conv3dLayer<T>::Conv3dLayer(std::string name, std::array<std::int64_t, 3> kernel,
                            std::int64_t cin, std::int64_t cout,
                            std::array<std::int64_t, 3> stride, Pad pad, Rng& init)
    : Layer<T>(std::move(name)), stride_(stride), pad_(pad) {
  const Shape ws{kernel[0], kernel[1], kernel[2], cin, cout};
  w_ = {this->name_ + ".weights", Tensor<T>(ws), Tensor<T>(ws)};
  b_ = {this->name_ + ".bias", Tensor<T>(Shape{cout}), Tensor<T>(Shape{cout})};
  const std::int64_t k = kernel[0] * kernel[1] * kernel[2];
  glorot_fill(w_.value, k * cin, k * cout, init);
}

template <typename T>
TensorPtr<T> Conv3dLayer<T>::forward(const TensorPtr<T>& x, const ForwardCtx&) {
  x_ = require(x, "conv3d");
  return share(conv3d_forward(*x_, w_.value, b_.value, stride_, pad_));
}

template <typename T>
TensorPtr<T> Conv3dLayer<T>::backward(const TensorPtr<T>& gy, bool need_dx) {
  require_cache(x_, this->name_);
  ConvGrads<T> g = conv3d_backward(*x_, w_.value, *gy, stride_, pad_, need_dx);
  w_.grad = std::move(g.dw);
  b_.grad = std::move(g.db);
  x_.reset();
  return need_dx ? share(std::move(g.dx)) : nullptr;
}

// ---- Conv2dLayer ------------------------------------------------------------

template <typename T>
Conv2dLayer<T>::Conv2dLayer(std::string name, std::array<std::int64_t, 2> kernel,
                            std::int64_t cin, std::int64_t cout,
                            std::array<std::int64_t, 2> stride, Pad pad, Rng& init)
    : Layer<T>(std::move(name)), stride_(stride), pad_(pad) {
  const Shape ws{kernel[0], kernel[1], cin, cout};
  w_ = {this->name_ + ".weights", Tensor<T>(ws), Tensor<T>(ws)};
  b_ = {this->name_ + ".bias", Tensor<T>(Shape{cout}), Tensor<T>(Shape{cout})};
  const std::int64_t k = kernel[0] * kernel[1];
  glorot_fill(w_.value, k * cin, k * cout, init);
}

template <typename T>
TensorPtr<T> Conv2dLayer<T>::forward(const TensorPtr<T>& x, const ForwardCtx&) {
  x_ = require(x, "conv2d");
  return share(conv2d_forward(*x_, w_.value, b_.value, stride_, pad_));
}

template <typename T>
TensorPtr<T> Conv2dLayer<T>::backward(const TensorPtr<T>& gy, bool need_dx) {
  require_cache(x_, this->name_);
  ConvGrads<T> g = conv2d_backward(*x_, w_.value, *gy, stride_, pad_, need_dx);
  w_.grad = std::move(g.dw);
  b_.grad = std::move(g.db);
  x_.reset();
  return need_dx ? share(std::move(g.dx)) : nullptr;
}

// ---- BatchNormLayer ---------------------------------------------------------

template <typename T>
BatchNormLayer<T>::BatchNormLayer(std::string name, std::int64_t channels, double eps,
                                  double momentum)
    : Layer<T>(std::move(name)), eps_(eps), momentum_(momentum) {
  gamma_ = {this->name_ + ".gamma", Tensor<T>(Shape{channels}, T(1)),
            Tensor<T>(Shape{channels})};
  beta_ = {this->name_ + ".beta", Tensor<T>(Shape{channels}), Tensor<T>(Shape{channels})};
  running_mean_ = Tensor<T>(Shape{channels}, T(0));
  running_var_ = Tensor<T>(Shape{channels}, T(1));
}

template <typename T>
TensorPtr<T> BatchNormLayer<T>::forward(const TensorPtr<T>& x, const ForwardCtx& ctx) {
  require(x, "batchnorm");
  if (!ctx.training) {
    return share(
        batchnorm_forward_infer(*x, gamma_.value, beta_.value, running_mean_, running_var_, eps_));
  }
  BnTrainResult<T> r = batchnorm_forward_train(*x, gamma_.value, beta_.value, eps_);
  x_ = x;
  mean_ = std::move(r.mean);
  invstd_ = std::move(r.invstd);
  if (this->trainable_ && ctx.update_running) {
    batchnorm_update_running(running_mean_, running_var_, mean_, r.var, momentum_);
  }
  return share(std::move(r.y));
}

template <typename T>
TensorPtr<T> BatchNormLayer<T>::backward(const TensorPtr<T>& gy, bool need_dx) {
  require_cache(x_, this->name_);
  BnGrads<T> g = batchnorm_backward(*x_, *gy, gamma_.value, mean_, invstd_);
  gamma_.grad = std::move(g.dgamma);
  beta_.grad = std::move(g.dbeta);
  x_.reset();
  return need_dx ? share(std::move(g.dx)) : nullptr;
}

// ---- LeakyReluLayer ---------------------------------------------------------

template <typename T>
TensorPtr<T> LeakyReluLayer<T>::forward(const TensorPtr<T>& x, const ForwardCtx& ctx) {
  x_ = require(x, "leaky_relu");
  if (!ctx.training) x_.reset();  // nothing to cache outside training
  return share(leaky_relu_forward(*x, alpha_));
}

template <typename T>
TensorPtr<T> LeakyReluLayer<T>::backward(const TensorPtr<T>& gy, bool need_dx) {
  require_cache(x_, this->name_);
  Tensor<T> dx = leaky_relu_backward(*x_, *gy, alpha_);
  x_.reset();
  return need_dx ? share(std::move(dx)) : nullptr;
}

// ---- DropoutLayer -----------------------------------------------------------

template <typename T>
TensorPtr<T> DropoutLayer<T>::forward(const TensorPtr<T>& x, const ForwardCtx& ctx) {
  require(x, "dropout");
  if (!ctx.training || rate_ == 0.0) {
    have_mask_ = false;
    return x;  // identity, bitwise
  }
  if (ctx.rng == nullptr) throw ConfigError(this->name_ + ": training requires a random source");
  DropoutResult<T> r = dropout_forward(*x, rate_, *ctx.rng);
  mask_ = std::move(r.mask);
  have_mask_ = true;
  return share(std::move(r.y));
}

template <typename T>
TensorPtr<T> DropoutLayer<T>::backward(const TensorPtr<T>& gy, bool need_dx) {
  if (!need_dx) return nullptr;
  if (!have_mask_) return gy;  // forward ran as identity
  Tensor<T> dx = dropout_backward(*gy, mask_);
  have_mask_ = false;
  return share(std::move(dx));
}

// ---- MaxPool3dLayer ---------------------------------------------------------

template <typename T>
TensorPtr<T> MaxPool3dLayer<T>::forward(const TensorPtr<T>& x, const ForwardCtx&) {
  require(x, "maxpool3d");
  PoolResult<T> r = maxpool3d_forward(*x, kernel_, stride_, ceil_mode_);
  argmax_ = std::move(r.argmax);
  in_shape_ = x->shape();
  return share(std::move(r.y));
}

template <typename T>
TensorPtr<T> MaxPool3dLayer<T>::backward(const TensorPtr<T>& gy, bool need_dx) {
  if (in_shape_.empty()) throw Error(this->name_ + ": backward called without a cached forward pass");
  if (!need_dx) return nullptr;
  Tensor<T> dx = maxpool3d_backward(*gy, argmax_, in_shape_);
  in_shape_.clear();
  return share(std::move(dx));
}

// ---- SqueezeTimeLayer -------------------------------------------------------

template <typename T>
TensorPtr<T> SqueezeTimeLayer<T>::forward(const TensorPtr<T>& x, const ForwardCtx&) {
  require(x, "squeeze");
  if (x->rank() != 5 || x->extent(3) != 1) {
    throw ShapeError(this->name_ + ": expected [B,H,W,1,C], got a different shape");
  }
  in_shape_ = x->shape();
  return share(x->reshaped({x->extent(0), x->extent(1), x->extent(2), x->extent(4)}));
}

template <typename T>
TensorPtr<T> SqueezeTimeLayer<T>::backward(const TensorPtr<T>& gy, bool need_dx) {
  if (in_shape_.empty()) throw Error(this->name_ + ": backward called without a cached forward pass");
  if (!need_dx) return nullptr;
  Tensor<T> dx = gy->reshaped(in_shape_);
  in_shape_.clear();
  return share(std::move(dx));
}

// ---- GlobalAvgPool2dLayer ---------------------------------------------------

template <typename T>
TensorPtr<T> GlobalAvgPool2dLayer<T>::forward(const TensorPtr<T>& x, const ForwardCtx&) {
  require(x, "global_avgpool2d");
  in_shape_ = x->shape();
  return share(global_avgpool2d_forward(*x));
}

template <typename T>
TensorPtr<T> GlobalAvgPool2dLayer<T>::backward(const TensorPtr<T>& gy, bool need_dx) {
  if (in_shape_.empty()) throw Error(this->name_ + ": backward called without a cached forward pass");
  if (!need_dx) return nullptr;
  Tensor<T> dx = global_avgpool2d_backward(*gy, in_shape_);
  in_shape_.clear();
  return share(std::move(dx));
}

#define D3FCNN_LAYERS_INSTANTIATE(T)                                       \
  template void glorot_fill<T>(Tensor<T>&, std::int64_t, std::int64_t, Rng&); \
  template class Conv3dLayer<T>;                                           \
  template class Conv2dLayer<T>;                                           \
  template class BatchNormLayer<T>;                                        \
  template class LeakyReluLayer<T>;                                        \
  template class DropoutLayer<T>;                                          \
  template class MaxPool3dLayer<T>;                                        \
  template class SqueezeTimeLayer<T>;                                      \
  template class GlobalAvgPool2dLayer<T>;

D3FCNN_LAYERS_INSTANTIATE(float)
D3FCNN_LAYERS_INSTANTIATE(double)

#undef D3FCNN_LAYERS_INSTANTIATE

}  // namespace d3fcnn
