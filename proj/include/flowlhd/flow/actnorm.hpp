#pragma once

#include "flowlhd/flow/transform.hpp"
#include "flowlhd/numerics/param_store.hpp"

namespace flowlhd::flow {

// Per-channel affine y = (x + bias) * exp(log_scale). Axis 1 is the channel
// (feature) axis; trailing axes share the channel's parameters.
// initialize() sets bias/log_scale so the given batch maps to zero mean and
// unit variance per channel.
class ActNorm final : public Transform {
 public:
  ActNorm(numerics::ParamStore& store, const std::string& prefix, std::size_t channels);

  std::string_view kind() const noexcept override { return "actnorm"; }
  std::string describe() const override;

  void initialize(const Tensor& x);

  TransformResult forward(const Tensor& x) override;
  Tensor inverse(const Tensor& y, const Tensor* factored = nullptr) override;
  Tensor backward(const Tensor& grad_y, std::span<const double> grad_log_det) override;

 private:
  std::size_t inner(const Tensor& x) const;

  numerics::Parameter* bias_;
  numerics::Parameter* log_scale_;
  std::size_t channels_;
  bool cached_ = false;
  Tensor y_;
};

}  // namespace flowlhd::flow
