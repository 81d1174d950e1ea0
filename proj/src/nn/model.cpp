#include "nn/model.hpp"

#include <algorithm>

#include "core/errors.hpp"

namespace d3fcnn {

template <typename T>
Model<T>::Model(const ModelConfig& cfg, const Rng& init_rng)
    : cfg_(cfg), init_rng_(init_rng) {
  if (cfg_.n_classes < 2) throw ConfigError("model: n_classes must be at least 2");
  build(init_rng_);
}

template <typename T>
void Model<T>::build(const Rng& init_rng) {
  Rng init = init_rng.stream("init");
  const double a = cfg_.lrelu_alpha;
  const double rate = cfg_.dropout_rate;
  const double eps = cfg_.bn_eps;
  const double mom = cfg_.bn_momentum;

  layers_.clear();
  auto conv3 = [&](std::string name, std::int64_t cin, std::int64_t cout,
                   std::array<std::int64_t, 3> k, Pad pad) {
    layers_.push_back(std::make_unique<Conv3dLayer<T>>(std::move(name), k, cin, cout,
                                                       std::array<std::int64_t, 3>{1, 1, 1},
                                                       pad, init));
  };
  auto bn = [&](std::string name, std::int64_t c) {
    layers_.push_back(std::make_unique<BatchNormLayer<T>>(std::move(name), c, eps, mom));
  };
  auto lrelu = [&](std::string name) {
    layers_.push_back(std::make_unique<LeakyReluLayer<T>>(std::move(name), a));
  };

  conv3("conv3d_1", 1, 32, {3, 3, 3}, Pad::same);
  bn("bn_1", 32);
  lrelu("lrelu_1");
  conv3("conv3d_2", 32, 32, {3, 3, 3}, Pad::same);
  bn("bn_2", 32);
  lrelu("lrelu_2");
  layers_.push_back(std::make_unique<MaxPool3dLayer<T>>(
      "maxpool", std::array<std::int64_t, 3>{3, 3, 3}, std::array<std::int64_t, 3>{3, 3, 3},
      true));
  layers_.push_back(std::make_unique<DropoutLayer<T>>("dropout_1", rate));
  conv3("conv3d_3", 32, 64, {3, 3, 3}, Pad::valid);
  bn("bn_3", 64);
  lrelu("lrelu_3");
  conv3("conv3d_4", 64, 64, {3, 3, 3}, Pad::valid);
  bn("bn_4", 64);
  lrelu("lrelu_4");
  layers_.push_back(std::make_unique<DropoutLayer<T>>("dropout_2", rate));
  conv3("conv3d_5", 64, 128, {1, 1, 6}, Pad::valid);
  layers_.push_back(std::make_unique<SqueezeTimeLayer<T>>("reshape"));
  layers_.push_back(std::make_unique<Conv2dLayer<T>>(
      "conv2d_1", std::array<std::int64_t, 2>{3, 3}, 128, 128,
      std::array<std::int64_t, 2>{2, 2}, Pad::valid, init));
  bn("bn_5", 128);
  lrelu("lrelu_5");
  layers_.push_back(std::make_unique<Conv2dLayer<T>>(
      "conv2d_2", std::array<std::int64_t, 2>{1, 1}, 128, cfg_.n_classes,
      std::array<std::int64_t, 2>{1, 1}, Pad::valid, init));
  layers_.push_back(std::make_unique<GlobalAvgPool2dLayer<T>>("avgpool"));
}

template <typename T>
TensorPtr<T> Model<T>::forward(const TensorPtr<T>& x, const ForwardCtx& ctx,
                               std::vector<TraceEntry>* trace) {
  if (!x) throw Error("model: null input");
  if (x->rank() != 5 || x->extent(1) != 64 || x->extent(2) != 64 || x->extent(3) != 30 ||
      x->extent(4) != 1) {
    throw ShapeError("model: input must be [B,64,64,30,1]");
  }
  if (ctx.training && ctx.rng == nullptr) {
    throw ConfigError("model: training forward requires a random source");
  }
  TensorPtr<T> h = x;
  if (trace) trace->clear();
  for (auto& layer : layers_) {
    h = layer->forward(h, ctx);
    if (trace) trace->push_back({layer->name(), h->shape()});
  }
  return h;
}

template <typename T>
void Model<T>::backward(const TensorPtr<T>& grad_logits) {
  if (!grad_logits) throw Error("model: null logits gradient");
  // earliest layer whose parameters still learn; nothing before it is touched
  std::size_t first = layers_.size();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i]->trainable() && !layers_[i]->params().empty()) {
      first = i;
      break;
    }
  }
  if (first == layers_.size()) throw ConfigError("model: no trainable parameters");

  TensorPtr<T> g = grad_logits;
  for (std::size_t i = layers_.size(); i-- > first;) {
    const bool need_dx = i > first;
    g = layers_[i]->backward(g, need_dx);
    if (need_dx && !g) throw Error("model: missing input gradient from " + layers_[i]->name());
  }
}

template <typename T>
std::vector<Layer<T>*> Model<T>::layers() {
  std::vector<Layer<T>*> out;
  out.reserve(layers_.size());
  for (auto& l : layers_) out.push_back(l.get());
  return out;
}

template <typename T>
std::vector<Param<T>*> Model<T>::params() {
  std::vector<Param<T>*> out;
  for (auto& l : layers_)
    for (Param<T>* p : l->params()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<Param<T>*> Model<T>::trainable_params() {
  std::vector<Param<T>*> out;
  for (auto& l : layers_) {
    if (!l->trainable()) continue;
    for (Param<T>* p : l->params()) out.push_back(p);
  }
  return out;
}

template <typename T>
std::int64_t Model<T>::param_count() {
  std::int64_t n = 0;
  for (auto& l : layers_)
    for (Param<T>* p : l->params()) n += p->value.size();
  return n;
}

template <typename T>
void Model<T>::freeze_for_finetune(int trainable_tail) {
  std::vector<std::size_t> conv_positions;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i]->parameterized()) conv_positions.push_back(i);
  if (trainable_tail < 1 || std::size_t(trainable_tail) > conv_positions.size()) {
    throw ConfigError("freeze_for_finetune: tail must be between 1 and " +
                      std::to_string(conv_positions.size()));
  }
  const std::size_t cut = conv_positions[conv_positions.size() - std::size_t(trainable_tail)];
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->set_trainable(i >= cut);
}

template <typename T>
void Model<T>::swap_head(std::int64_t new_classes, const Rng& rng) {
  if (new_classes < 2) throw ConfigError("swap_head: n_classes must be at least 2");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i]->name() == "conv2d_2") {
      Rng head_rng = rng.stream("head");
      auto fresh = std::make_unique<Conv2dLayer<T>>(
          "conv2d_2", std::array<std::int64_t, 2>{1, 1}, 128, new_classes,
          std::array<std::int64_t, 2>{1, 1}, Pad::valid, head_rng);
      fresh->set_trainable(layers_[i]->trainable());
      layers_[i] = std::move(fresh);
      cfg_.n_classes = new_classes;
      return;
    }
  }
  throw Error("swap_head: classification head not found");
}

template class Model<float>;
template class Model<double>;

}  // namespace d3fcnn
