#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nn/layers.hpp"

namespace d3fcnn {

struct ModelConfig {
  std::int64_t n_classes = 60;
  double lrelu_alpha = 0.3;
  double dropout_rate = 0.25;
  double bn_eps = 1e-5;
  double bn_momentum = 0.99;
};

/// The fixed 3-d convolutional trunk plus 2-d head. Input is a batch of
/// [64,64,30,1] depth clips; forward yields logits [B, n_classes]. Softmax
/// and the loss live outside the model so the logits stay reusable.
template <typename T>
class Model {
public:
  struct TraceEntry {
    std::string layer;
    Shape shape;
  };

  Model(const ModelConfig& cfg, const Rng& init_rng);

  const ModelConfig& config() const { return cfg_; }

  TensorPtr<T> forward(const TensorPtr<T>& x, const ForwardCtx& ctx,
                       std::vector<TraceEntry>* trace = nullptr);

  /// Walks layers in reverse from the logits gradient, filling parameter
  /// gradients of trainable layers; stops once nothing upstream needs one.
  void backward(const TensorPtr<T>& grad_logits);

  std::vector<Layer<T>*> layers();
  std::vector<Param<T>*> params();
  std::vector<Param<T>*> trainable_params();
  std::int64_t param_count();

  /// Keeps only the last `trainable_tail` convolution layers (and everything
  /// after the first of them) trainable; freezes the rest, including their
  /// normalization statistics.
  void freeze_for_finetune(int trainable_tail);

  /// Re-initializes the final 1x1 convolution for a new class count.
  void swap_head(std::int64_t new_classes, const Rng& rng);

private:
  ModelConfig cfg_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  Rng init_rng_;  // retained so swap_head derives a fresh stream

  void build(const Rng& init_rng);
};

}  // namespace d3fcnn
