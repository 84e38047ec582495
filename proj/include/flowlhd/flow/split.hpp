#pragma once

#include "flowlhd/flow/transform.hpp"

namespace flowlhd::flow {

// Sum over one sample of the standard normal log-density.
double standard_normal_log_pdf(std::span<const double> z) noexcept;

// Keeps the first half of the channels and scores the second half under the
// standard normal prior. The prior term is returned as log_det and the
// dropped half as `factored`; inverse() needs it back.
class Split final : public Transform {
 public:
  std::string_view kind() const noexcept override { return "split"; }
  std::string describe() const override { return "split channels, second half scored by prior"; }
  Tensor::Shape output_shape(const Tensor::Shape& in) const override;
  bool factors_out() const noexcept override { return true; }

  TransformResult forward(const Tensor& x) override;
  Tensor inverse(const Tensor& y, const Tensor* factored = nullptr) override;
  Tensor backward(const Tensor& grad_y, std::span<const double> grad_log_det) override;

  // Per-sample shape of the factored part for a per-sample input shape.
  Tensor::Shape factored_shape(const Tensor::Shape& in) const { return output_shape(in); }

 private:
  bool cached_ = false;
  Tensor dropped_;
};

}  // namespace flowlhd::flow
