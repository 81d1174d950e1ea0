#pragma once

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "core/batchnorm.hpp"
#include "core/conv.hpp"
#include "core/pointwise.hpp"
#include "core/pool.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace d3fcnn {

/// One learnable tensor plus the gradient slot the backward pass fills.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;  // same shape as value, overwritten by each backward pass
};

/// Per-call execution context for the forward pass.
struct ForwardCtx {
  bool training = false;
  Rng* rng = nullptr;          // consumed by dropout when training
  bool update_running = true;  // batch-norm moving statistics (training only)
};

/// A network stage. Forward caches whatever its backward needs; backward
/// fills parameter gradients and returns the input gradient (or null when the
/// caller does not need it). Caches are single-use.
template <typename T>
class Layer {
public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  const std::string& name() const { return name_; }
  bool trainable() const { return trainable_; }
  void set_trainable(bool t) { trainable_ = t; }

  /// True for layers that count toward the fine-tune tail (convolutions).
  virtual bool parameterized() const { return false; }

  virtual TensorPtr<T> forward(const TensorPtr<T>& x, const ForwardCtx& ctx) = 0;
  virtual TensorPtr<T> backward(const TensorPtr<T>& gy, bool need_dx) = 0;

  virtual std::vector<Param<T>*> params() { return {}; }
  /// Non-learnable state that checkpoints must carry (running statistics).
  virtual std::vector<std::pair<std::string, Tensor<T>*>> buffers() { return {}; }

protected:
  std::string name_;
  bool trainable_ = true;
};

template <typename T>
class Conv3dLayer : public Layer<T> {
public:
  Conv3dLayer(std::string name, std::array<std::int64_t, 3> kernel, std::int64_t cin,
              std::int64_t cout, std::array<std::int64_t, 3> stride, Pad pad, Rng& init);

  bool parameterized() const override { return true; }
  TensorPtr<T> forward(const TensorPtr<T>& x, const ForwardCtx& ctx) override;
  TensorPtr<T> backward(const TensorPtr<T>& gy, bool need_dx) override;
  std::vector<Param<T>*> params() override { return {&w_, &b_}; }

private:
  Param<T> w_, b_;
  std::array<std::int64_t, 3> stride_;
  Pad pad_;
  TensorPtr<T> x_;
};

template <typename T>
class Conv2dLayer : public Layer<T> {
public:
  Conv2dLayer(std::string name, std::array<std::int64_t, 2> kernel, std::int64_t cin,
              std::int64_t cout, std::array<std::int64_t, 2> stride, Pad pad, Rng& init);

  bool parameterized() const override { return true; }
  TensorPtr<T> forward(const TensorPtr<T>& x, const ForwardCtx& ctx) override;
  TensorPtr<T> backward(const TensorPtr<T>& gy, bool need_dx) override;
  std::vector<Param<T>*> params() override { return {&w_, &b_}; }

  std::int64_t out_channels() const { return w_.value.extent(3); }

private:
  Param<T> w_, b_;
  std::array<std::int64_t, 2> stride_;
  Pad pad_;
  TensorPtr<T> x_;
};

template <typename T>
class BatchNormLayer : public Layer<T> {
public:
  BatchNormLayer(std::string name, std::int64_t channels, double eps, double momentum);

  TensorPtr<T> forward(const TensorPtr<T>& x, const ForwardCtx& ctx) override;
  TensorPtr<T> backward(const TensorPtr<T>& gy, bool need_dx) override;
  std::vector<Param<T>*> params() override { return {&gamma_, &beta_}; }
  std::vector<std::pair<std::string, Tensor<T>*>> buffers() override {
    return {{"running_mean", &running_mean_}, {"running_var", &running_var_}};
  }

  double eps() const { return eps_; }
  double momentum() const { return momentum_; }

private:
  Param<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_;
  double eps_, momentum_;
  TensorPtr<T> x_;
  Tensor<T> mean_, invstd_;
};

template <typename T>
class LeakyReluLayer : public Layer<T> {
public:
  LeakyReluLayer(std::string name, double alpha)
      : Layer<T>(std::move(name)), alpha_(alpha) {}

  TensorPtr<T> forward(const TensorPtr<T>& x, const ForwardCtx& ctx) override;
  TensorPtr<T> backward(const TensorPtr<T>& gy, bool need_dx) override;

private:
  double alpha_;
  TensorPtr<T> x_;
};

template <typename T>
class DropoutLayer : public Layer<T> {
public:
  DropoutLayer(std::string name, double rate) : Layer<T>(std::move(name)), rate_(rate) {}

  TensorPtr<T> forward(const TensorPtr<T>& x, const ForwardCtx& ctx) override;
  TensorPtr<T> backward(const TensorPtr<T>& gy, bool need_dx) override;

private:
  double rate_;
  Tensor<T> mask_;
  bool have_mask_ = false;
};

template <typename T>
class MaxPool3dLayer : public Layer<T> {
public:
  MaxPool3dLayer(std::string name, std::array<std::int64_t, 3> kernel,
                 std::array<std::int64_t, 3> stride, bool ceil_mode)
      : Layer<T>(std::move(name)), kernel_(kernel), stride_(stride), ceil_mode_(ceil_mode) {}

  TensorPtr<T> forward(const TensorPtr<T>& x, const ForwardCtx& ctx) override;
  TensorPtr<T> backward(const TensorPtr<T>& gy, bool need_dx) override;

private:
  std::array<std::int64_t, 3> kernel_, stride_;
  bool ceil_mode_;
  Tensor<std::int64_t> argmax_;
  Shape in_shape_;
};

/// [B,H,W,1,C] -> [B,H,W,C]; the bridge from the 3-d trunk to the 2-d head.
template <typename T>
class SqueezeTimeLayer : public Layer<T> {
public:
  explicit SqueezeTimeLayer(std::string name) : Layer<T>(std::move(name)) {}

  TensorPtr<T> forward(const TensorPtr<T>& x, const ForwardCtx& ctx) override;
  TensorPtr<T> backward(const TensorPtr<T>& gy, bool need_dx) override;

private:
  Shape in_shape_;
};

template <typename T>
class GlobalAvgPool2dLayer : public Layer<T> {
public:
  explicit GlobalAvgPool2dLayer(std::string name) : Layer<T>(std::move(name)) {}

  TensorPtr<T> forward(const TensorPtr<T>& x, const ForwardCtx& ctx) override;
  TensorPtr<T> backward(const TensorPtr<T>& gy, bool need_dx) override;

private:
  Shape in_shape_;
};

/// Uniform init over ±sqrt(6/(fan_in+fan_out)), the usual fan-balanced rule.
template <typename T>
void glorot_fill(Tensor<T>& w, std::int64_t fan_in, std::int64_t fan_out, Rng& rng);

}  // namespace d3fcnn
