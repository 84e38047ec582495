#pragma once

#include "flowlhd/flow/mask.hpp"
#include "flowlhd/flow/transform.hpp"
#include "flowlhd/numerics/module.hpp"

namespace flowlhd::flow {

// Affine coupling y = m*x + (1-m)*(x*exp(s) + t) with (s_raw, t) = net(m*x [, cond])
// and s = c * tanh(s_raw / c). The net emits 2x the input channels (features
// for flat inputs): the first half of each sample is s_raw, the second t.
class CouplingLayer final : public Transform {
 public:
  CouplingLayer(Mask mask, numerics::ModulePtr net, double clamp = 2.0, std::string label = "coupling");

  std::string_view kind() const noexcept override { return "coupling"; }
  std::string describe() const override;
  bool is_coupling() const noexcept override { return true; }

  // Optional conditioning tensor concatenated (axis 1) after the masked input.
  // The pointer must stay valid across forward/inverse/backward.
  void set_condition(const Tensor* cond) noexcept { cond_ = cond; }

  TransformResult forward(const Tensor& x) override;
  Tensor inverse(const Tensor& y, const Tensor* factored = nullptr) override;
  Tensor backward(const Tensor& grad_y, std::span<const double> grad_log_det) override;

  const Mask& mask() const noexcept { return mask_; }
  double clamp() const noexcept { return clamp_; }
  numerics::Module& net() noexcept { return *net_; }

 private:
  void check_shape(const Tensor& x) const;
  Tensor masked(const Tensor& x) const;
  // Runs the net and fills s (clamped, zero where masked), t (zero where
  // masked) and th = tanh(s_raw / c).
  void scale_shift(const Tensor& x, Tensor& s, Tensor& t, Tensor& th);

  Mask mask_;
  numerics::ModulePtr net_;
  double clamp_;
  std::string label_;
  const Tensor* cond_ = nullptr;

  bool cached_ = false;
  Tensor x_, s_, th_;
  Tensor::Shape out_shape_;
};

}  // namespace flowlhd::flow
