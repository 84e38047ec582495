#pragma once

#include "flowlhd/flow/transform.hpp"

namespace flowlhd::flow {

// N x C x H x W -> N x 4C x H/2 x W/2. Output channel c*4 + (dy*2 + dx) holds
// input pixel (2i+dy, 2j+dx) of channel c.
Tensor squeeze2x2(const Tensor& x);
Tensor unsqueeze2x2(const Tensor& y);

class Squeeze final : public Transform {
 public:
  std::string_view kind() const noexcept override { return "squeeze"; }
  std::string describe() const override { return "squeeze 2x2"; }
  Tensor::Shape output_shape(const Tensor::Shape& in) const override;
  TransformResult forward(const Tensor& x) override;
  Tensor inverse(const Tensor& y, const Tensor* factored = nullptr) override;
  Tensor backward(const Tensor& grad_y, std::span<const double> grad_log_det) override;

 private:
  bool cached_ = false;
};

}  // namespace flowlhd::flow
