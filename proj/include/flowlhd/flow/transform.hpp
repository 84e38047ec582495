#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowlhd/numerics/tensor.hpp"

namespace flowlhd::flow {

using numerics::Tensor;

struct TransformResult {
  Tensor output;
  std::vector<double> log_det;  // per sample, nats
  Tensor factored;              // split-off part, empty unless the transform factors out
};

// An invertible map on batched tensors. Splitting transforms put the scored
// prior log-density of the factored part into log_det, so summing log_det
// across a chain always yields the log-likelihood contribution.
class Transform {
 public:
  virtual ~Transform() = default;
  virtual std::string_view kind() const noexcept = 0;
  virtual std::string describe() const = 0;
  // Per-sample output shape for a per-sample input shape.
  virtual Tensor::Shape output_shape(const Tensor::Shape& in) const { return in; }

  virtual TransformResult forward(const Tensor& x) = 0;
  // `factored` supplies the split-off part for transforms that factor out.
  virtual Tensor inverse(const Tensor& y, const Tensor* factored = nullptr) = 0;
  // grad_log_det[b] is the upstream derivative with respect to log_det[b].
  virtual Tensor backward(const Tensor& grad_y, std::span<const double> grad_log_det) = 0;

  virtual bool factors_out() const noexcept { return false; }
  virtual bool is_coupling() const noexcept { return false; }
};

}  // namespace flowlhd::flow
