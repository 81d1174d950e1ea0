#include "opt/adam.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace d3fcnn {

template <typename T>
Adam<T>::Adam(std::vector<Param<T>*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (cfg_.beta1 < 0 || cfg_.beta1 >= 1 || cfg_.beta2 < 0 || cfg_.beta2 >= 1 ||
      cfg_.eps <= 0) {
    throw ConfigError("adam: betas must lie in [0,1) and eps must be positive");
  }
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Param<T>* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

template <typename T>
void Adam<T>::step(double lr) {
  for (Param<T>* p : params_) {
    if (!p->grad.same_shape(p->value)) {
      throw ShapeError("adam: gradient for " + p->name +
                       " is missing or shaped differently from its parameter");
    }
    for (T g : p->grad.flat()) {
      if (!std::isfinite(double(g)))
        throw NumericError("adam: non-finite gradient in " + p->name + ", step rejected");
    }
  }

  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto pv = params_[i]->value.flat();
    auto pg = params_[i]->grad.flat();
    auto mv = m_[i].flat();
    auto vv = v_[i].flat();
    for (std::size_t k = 0; k < pv.size(); ++k) {
      const double g = double(pg[k]);
      const double m = cfg_.beta1 * double(mv[k]) + (1.0 - cfg_.beta1) * g;
      const double v = cfg_.beta2 * double(vv[k]) + (1.0 - cfg_.beta2) * g * g;
      mv[k] = T(m);
      vv[k] = T(v);
      pv[k] = T(double(pv[k]) - lr * (m / c1) / (std::sqrt(v / c2) + cfg_.eps));
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace d3fcnn
