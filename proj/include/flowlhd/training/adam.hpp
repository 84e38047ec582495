#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flowlhd/numerics/param_store.hpp"

namespace flowlhd::training {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update; `t` is the 1-based step index.
void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
               std::size_t t, const AdamHyper& hyper);

class Adam {
 public:
  Adam(numerics::ParamStore& store, AdamHyper hyper);
  void step();
  std::size_t steps() const noexcept { return t_; }

 private:
  numerics::ParamStore* store_;
  AdamHyper hyper_;
  std::vector<numerics::Tensor> m_, v_;
  std::size_t t_ = 0;
};

// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(numerics::ParamStore& store, double max_norm);

}  // namespace flowlhd::training
