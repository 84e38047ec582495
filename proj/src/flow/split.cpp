#include "flowlhd/flow/split.hpp"

#include <cmath>
#include <numbers>

#include "flowlhd/errors.hpp"

namespace flowlhd::flow {

double standard_normal_log_pdf(std::span<const double> z) noexcept {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double acc = 0.0;
  for (double v : z) acc += -0.5 * v * v - half_log_2pi;
  return acc;
}

Tensor::Shape Split::output_shape(const Tensor::Shape& in) const {
  if (in.empty() || in[0] % 2 != 0) throw ShapeError("split needs an even channel count, got " + numerics::shape_string(in));
  Tensor::Shape out = in;
  out[0] /= 2;
  return out;
}

TransformResult Split::forward(const Tensor& x) {
  if (x.rank() < 2) throw ShapeError("split expects a batched tensor");
  Tensor::Shape sample(x.shape().begin() + 1, x.shape().end());
  Tensor::Shape half = output_shape(sample);
  half.insert(half.begin(), x.dim(0));

  TransformResult r{Tensor(half), std::vector<double>(x.dim(0), 0.0), Tensor(half)};
  numerics::split_samples(x, x.per_sample() / 2, r.output, r.factored);
  r.output = r.output.reshaped(half);
  r.factored = r.factored.reshaped(half);
  for (std::size_t n = 0; n < x.dim(0); ++n) r.log_det[n] = standard_normal_log_pdf(r.factored.sample(n));
  dropped_ = r.factored;
  cached_ = true;
  return r;
}

Tensor Split::inverse(const Tensor& y, const Tensor* factored) {
  if (!factored) throw StateError("split inverse needs the factored half");
  if (factored->shape() != y.shape())
    throw ShapeError("split inverse: factored half " + numerics::shape_string(factored->shape()) +
                     " does not match kept half " + numerics::shape_string(y.shape()));
  Tensor x = numerics::concat_samples(y, *factored);
  return x;
}

Tensor Split::backward(const Tensor& grad_y, std::span<const double> grad_log_det) {
  if (!cached_) throw StateError("split backward called without forward");
  cached_ = false;
  if (grad_y.shape() != dropped_.shape() || grad_log_det.size() != dropped_.dim(0))
    throw ShapeError("split backward gradient shape mismatch");
  // d/dz of log N(z) is -z.
  Tensor g_drop(dropped_.shape());
  const std::size_t d = dropped_.per_sample();
  for (std::size_t n = 0; n < dropped_.dim(0); ++n)
    for (std::size_t i = 0; i < d; ++i) g_drop[n * d + i] = -dropped_[n * d + i] * grad_log_det[n];
  dropped_ = Tensor();
  return numerics::concat_samples(grad_y, g_drop);
}

}  // namespace flowlhd::flow
