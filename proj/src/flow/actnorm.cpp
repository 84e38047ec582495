#include "flowlhd/flow/actnorm.hpp"

#include <cmath>

#include "flowlhd/errors.hpp"

namespace flowlhd::flow {

ActNorm::ActNorm(numerics::ParamStore& store, const std::string& prefix, std::size_t channels)
    : bias_(&store.add(prefix + ".bias", Tensor({channels}))),
      log_scale_(&store.add(prefix + ".log_scale", Tensor({channels}))),
      channels_(channels) {}

std::string ActNorm::describe() const { return "actnorm channels=" + std::to_string(channels_); }

std::size_t ActNorm::inner(const Tensor& x) const {
  if (x.rank() < 2 || x.dim(1) != channels_)
    throw ShapeError("actnorm expects " + std::to_string(channels_) + " channels, got " +
                     numerics::shape_string(x.shape()));
  return x.per_sample() / channels_;
}

void ActNorm::initialize(const Tensor& x) {
  const std::size_t in = inner(x);
  const std::size_t count = x.dim(0) * in;
  if (count == 0) throw DataError("actnorm initialisation needs a nonempty batch");
  for (std::size_t c = 0; c < channels_; ++c) {
    double sum = 0.0;
    for (std::size_t n = 0; n < x.dim(0); ++n)
      for (std::size_t k = 0; k < in; ++k) sum += x[(n * channels_ + c) * in + k];
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (std::size_t n = 0; n < x.dim(0); ++n)
      for (std::size_t k = 0; k < in; ++k) {
        const double d = x[(n * channels_ + c) * in + k] - mean;
        ss += d * d;
      }
    const double sd = std::sqrt(ss / static_cast<double>(count));
    bias_->value[c] = -mean;
    log_scale_->value[c] = -std::log(sd + 1e-6);
  }
}

TransformResult ActNorm::forward(const Tensor& x) {
  const std::size_t in = inner(x);
  TransformResult r{Tensor(x.shape()), std::vector<double>(x.dim(0), 0.0), {}};
  double ld = 0.0;
  for (std::size_t c = 0; c < channels_; ++c) ld += log_scale_->value[c];
  ld *= static_cast<double>(in);
  for (std::size_t n = 0; n < x.dim(0); ++n) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const double b = bias_->value[c], e = std::exp(log_scale_->value[c]);
      for (std::size_t k = 0; k < in; ++k) {
        const std::size_t i = (n * channels_ + c) * in + k;
        r.output[i] = (x[i] + b) * e;
      }
    }
    r.log_det[n] = ld;
  }
  y_ = r.output;
  cached_ = true;
  return r;
}

Tensor ActNorm::inverse(const Tensor& y, const Tensor*) {
  const std::size_t in = inner(y);
  Tensor x(y.shape());
  for (std::size_t n = 0; n < y.dim(0); ++n)
    for (std::size_t c = 0; c < channels_; ++c) {
      const double b = bias_->value[c], e = std::exp(-log_scale_->value[c]);
      for (std::size_t k = 0; k < in; ++k) {
        const std::size_t i = (n * channels_ + c) * in + k;
        x[i] = y[i] * e - b;
      }
    }
  return x;
}

Tensor ActNorm::backward(const Tensor& grad_y, std::span<const double> grad_log_det) {
  if (!cached_) throw StateError("actnorm backward called without forward");
  cached_ = false;
  if (grad_y.shape() != y_.shape() || grad_log_det.size() != y_.dim(0))
    throw ShapeError("actnorm backward gradient shape mismatch");
  const std::size_t in = inner(y_);
  Tensor gx(y_.shape());
  for (std::size_t n = 0; n < y_.dim(0); ++n)
    for (std::size_t c = 0; c < channels_; ++c) {
      const double e = std::exp(log_scale_->value[c]);
      double gb = 0.0, gl = static_cast<double>(in) * grad_log_det[n];
      for (std::size_t k = 0; k < in; ++k) {
        const std::size_t i = (n * channels_ + c) * in + k;
        gx[i] = grad_y[i] * e;
        gb += grad_y[i] * e;
        gl += grad_y[i] * y_[i];
      }
      bias_->grad[c] += gb;
      log_scale_->grad[c] += gl;
    }
  y_ = Tensor();
  return gx;
}

}  // namespace flowlhd::flow
