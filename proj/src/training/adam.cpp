#include "flowlhd/training/adam.hpp"

#include <cmath>

#include "flowlhd/errors.hpp"

namespace flowlhd::training {

void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
               std::size_t t, const AdamHyper& hyper) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size())
    throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
  if (t == 0) throw ConfigError("adam_step: step index is 1-based");
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * grads[i];
    v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
    const double mh = m[i] / c1, vh = v[i] / c2;
    params[i] -= hyper.learning_rate * mh / (std::sqrt(vh) + hyper.eps);
  }
}

Adam::Adam(numerics::ParamStore& store, AdamHyper hyper) : store_(&store), hyper_(hyper) {
  store.for_each([&](const numerics::Parameter& p) {
    m_.emplace_back(p.value.shape());
    v_.emplace_back(p.value.shape());
  });
}

void Adam::step() {
  ++t_;
  std::size_t i = 0;
  store_->for_each([&](numerics::Parameter& p) {
    adam_step(p.value.values(), p.grad.values(), m_[i].values(), v_[i].values(), t_, hyper_);
    ++i;
  });
}

double clip_grad_norm(numerics::ParamStore& store, double max_norm) {
  const double norm = store.grad_norm();
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    store.for_each([&](numerics::Parameter& p) {
      for (double& g : p.grad.values()) g *= scale;
    });
  }
  return norm;
}

}  // namespace flowlhd::training
