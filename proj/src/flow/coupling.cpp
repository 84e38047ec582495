#include "flowlhd/flow/coupling.hpp"

#include <cmath>

#include "flowlhd/errors.hpp"

namespace flowlhd::flow {

CouplingLayer::CouplingLayer(Mask mask, numerics::ModulePtr net, double clamp, std::string label)
    : mask_(std::move(mask)), net_(std::move(net)), clamp_(clamp), label_(std::move(label)) {
  if (!net_) throw ConfigError("coupling layer needs a subnet");
  if (!(clamp_ > 0.0)) throw ConfigError("coupling clamp must be positive");
}

std::string CouplingLayer::describe() const {
  return label_ + " mask=" + mask_.describe() + " shape=" + numerics::shape_string(mask_.values.shape());
}

void CouplingLayer::check_shape(const Tensor& x) const {
  if (x.rank() != mask_.values.rank() + 1 || x.per_sample() != mask_.size())
    throw ShapeError("coupling input " + numerics::shape_string(x.shape()) + " does not match mask " +
                     numerics::shape_string(mask_.values.shape()));
  for (std::size_t a = 1; a < x.rank(); ++a)
    if (x.dim(a) != mask_.values.dim(a - 1))
      throw ShapeError("coupling input " + numerics::shape_string(x.shape()) + " does not match mask " +
                       numerics::shape_string(mask_.values.shape()));
}

Tensor CouplingLayer::masked(const Tensor& x) const {
  Tensor out(x.shape());
  const std::size_t d = mask_.size();
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] * mask_.values[i % d];
  return out;
}

void CouplingLayer::scale_shift(const Tensor& x, Tensor& s, Tensor& t, Tensor& th) {
  Tensor in = masked(x);
  if (cond_) {
    if (cond_->dim(0) != x.dim(0)) throw ShapeError("coupling condition batch size mismatch");
    in = numerics::concat_samples(in, *cond_);
  }
  const Tensor out = net_->forward(in);
  const std::size_t d = mask_.size();
  if (out.dim(0) != x.dim(0) || out.per_sample() != 2 * d)
    throw ShapeError("coupling subnet output " + numerics::shape_string(out.shape()) + " is not twice the input");
  numerics::require_finite(out, "coupling subnet output");
  out_shape_ = out.shape();

  s = Tensor(x.shape());
  t = Tensor(x.shape());
  th = Tensor(x.shape());
  for (std::size_t n = 0; n < x.dim(0); ++n) {
    const auto o = out.sample(n);
    for (std::size_t i = 0; i < d; ++i) {
      const double free = 1.0 - mask_.values[i];
      const double h = std::tanh(o[i] / clamp_);
      th[n * d + i] = h;
      s[n * d + i] = free * clamp_ * h;
      t[n * d + i] = free * o[d + i];
    }
  }
}

TransformResult CouplingLayer::forward(const Tensor& x) {
  check_shape(x);
  Tensor s, t, th;
  scale_shift(x, s, t, th);
  const std::size_t d = mask_.size();
  TransformResult r{Tensor(x.shape()), std::vector<double>(x.dim(0), 0.0), {}};
  for (std::size_t n = 0; n < x.dim(0); ++n) {
    double ld = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t k = n * d + i;
      r.output[k] = x[k] * std::exp(s[k]) + t[k];
      ld += s[k];
    }
    r.log_det[n] = ld;
  }
  numerics::require_finite(r.output, "coupling output");
  x_ = x;
  s_ = std::move(s);
  th_ = std::move(th);
  cached_ = true;
  return r;
}

Tensor CouplingLayer::inverse(const Tensor& y, const Tensor*) {
  check_shape(y);
  // Masked entries are untouched by forward, so m*y == m*x feeds the net.
  Tensor s, t, th;
  scale_shift(y, s, t, th);
  cached_ = false;
  Tensor x(y.shape());
  for (std::size_t k = 0; k < y.numel(); ++k) x[k] = (y[k] - t[k]) * std::exp(-s[k]);
  numerics::require_finite(x, "coupling inverse");
  return x;
}

Tensor CouplingLayer::backward(const Tensor& grad_y, std::span<const double> grad_log_det) {
  if (!cached_) throw StateError("coupling backward called without forward");
  cached_ = false;
  const std::size_t n_batch = x_.dim(0);
  const std::size_t d = mask_.size();
  if (grad_y.shape() != x_.shape() || grad_log_det.size() != n_batch)
    throw ShapeError("coupling backward gradient shape mismatch");

  Tensor grad_x(x_.shape());
  Tensor grad_net(out_shape_);
  for (std::size_t n = 0; n < n_batch; ++n) {
    auto g = grad_net.sample(n);
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t k = n * d + i;
      const double free = 1.0 - mask_.values[i];
      const double e = std::exp(s_[k]);
      grad_x[k] = grad_y[k] * e;
      const double gs = free * (grad_y[k] * x_[k] * e + grad_log_det[n]);
      g[i] = gs * (1.0 - th_[k] * th_[k]);
      g[d + i] = free * grad_y[k];
    }
  }
  const Tensor grad_in = net_->backward(grad_net);
  for (std::size_t n = 0; n < n_batch; ++n) {
    const auto gi = grad_in.sample(n);
    for (std::size_t i = 0; i < d; ++i) grad_x[n * d + i] += mask_.values[i] * gi[i];
  }
  x_ = Tensor();
  s_ = Tensor();
  th_ = Tensor();
  return grad_x;
}

}  // namespace flowlhd::flow
