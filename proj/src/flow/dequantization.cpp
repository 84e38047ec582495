#include "flowlhd/flow/dequantization.hpp"

#include <cmath>
#include <numbers>

#include "flowlhd/errors.hpp"
#include "flowlhd/numerics/layers.hpp"

namespace flowlhd::flow {

namespace {

const double kLog256 = std::log(256.0);

// log(sigmoid(v)) and log(1 - sigmoid(v)) without cancellation.
double log_sigmoid(double v) noexcept { return v >= 0 ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v)); }

}  // namespace

Dequantizer::Dequantizer(std::size_t channels, std::size_t height, std::size_t width)
    : mode_(DequantMode::uniform), c_(channels), h_(height), w_(width) {}

Dequantizer::Dequantizer(numerics::ParamStore& store, const std::string& prefix, std::size_t channels,
                         std::size_t height, std::size_t width, std::size_t layers, std::size_t hidden,
                         std::size_t gated_blocks, const numerics::RngStream& init, double clamp)
    : mode_(DequantMode::variational), c_(channels), h_(height), w_(width) {
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string name = prefix + ".layer" + std::to_string(l);
    auto net = std::make_unique<numerics::GatedConvNet>(store, name + ".net", 2 * c_, hidden, 2 * c_, gated_blocks, init);
    layers_.push_back(std::make_unique<CouplingLayer>(checkerboard_mask(c_, h_, w_, static_cast<int>(l % 2)),
                                                      std::move(net), clamp, "dequant-coupling"));
  }
}

void Dequantizer::check(const data::ImageBatch& x, const Tensor& noise) const {
  if (x.c != c_ || x.h != h_ || x.w != w_)
    throw ShapeError("dequantizer expects " + numerics::shape_string(sample_shape()) + " images, got " +
                     numerics::shape_string({x.c, x.h, x.w}));
  if (noise.shape() != x.shape())
    throw ShapeError("dequantization noise " + numerics::shape_string(noise.shape()) + " does not match batch " +
                     numerics::shape_string(x.shape()));
}

Tensor Dequantizer::condition_of(const data::ImageBatch& x) {
  Tensor cond(x.shape());
  for (std::size_t i = 0; i < x.pixels.size(); ++i) cond[i] = static_cast<double>(x.pixels[i]) / 255.0 * 2.0 - 1.0;
  return cond;
}

DequantOutput Dequantizer::forward(const data::ImageBatch& x, const Tensor& noise) {
  check(x, noise);
  const std::size_t n = x.n, d = dims();
  DequantOutput out{Tensor(x.shape()), std::vector<double>(n, -static_cast<double>(d) * kLog256), Tensor(x.shape())};

  if (mode_ == DequantMode::uniform) {
    for (std::size_t i = 0; i < noise.numel(); ++i) {
      if (!(noise[i] >= 0.0 && noise[i] < 1.0)) throw NumericsError("dequantization noise outside [0, 1)");
      out.u[i] = noise[i];
    }
  } else {
    Tensor v(x.shape());
    for (std::size_t b = 0; b < n; ++b) {
      double ld = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double e = noise[b * d + i];
        if (!(e > 0.0 && e < 1.0)) throw NumericsError("variational dequantization noise must lie in (0, 1)");
        v[b * d + i] = std::log(e) - std::log1p(-e);
        ld += -std::log(e) - std::log1p(-e);
      }
      out.log_correction[b] += ld;
    }
    cond_ = condition_of(x);
    for (auto& layer : layers_) {
      layer->set_condition(&cond_);
      TransformResult r = layer->forward(v);
      v = std::move(r.output);
      for (std::size_t b = 0; b < n; ++b) out.log_correction[b] += r.log_det[b];
    }
    for (std::size_t b = 0; b < n; ++b) {
      double ld = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double vi = v[b * d + i];
        const double u = numerics::sigmoid(vi);
        if (!(u >= 0.0 && u < 1.0)) throw NumericsError("variational dequantization produced u outside [0, 1)");
        out.u[b * d + i] = u;
        ld += log_sigmoid(vi) + log_sigmoid(-vi);
      }
      out.log_correction[b] += ld;
    }
    u_ = out.u;
    cached_ = true;
  }
  for (std::size_t i = 0; i < out.continuous.numel(); ++i)
    out.continuous[i] = (static_cast<double>(x.pixels[i]) + out.u[i]) / 256.0;
  for (double lc : out.log_correction)
    if (!std::isfinite(lc)) throw NumericsError("non-finite dequantization log-correction");
  return out;
}

void Dequantizer::backward(const Tensor& grad_continuous, std::span<const double> grad_log_correction) {
  if (mode_ == DequantMode::uniform) return;
  if (!cached_) throw StateError("dequantizer backward called without forward");
  cached_ = false;
  if (grad_continuous.shape() != u_.shape() || grad_log_correction.size() != u_.dim(0))
    throw ShapeError("dequantizer backward gradient shape mismatch");
  const std::size_t n = u_.dim(0), d = dims();
  Tensor g(u_.shape());
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t i = 0; i < d; ++i) {
      const double u = u_[b * d + i];
      g[b * d + i] = grad_continuous[b * d + i] / 256.0 * u * (1.0 - u) + grad_log_correction[b] * (1.0 - 2.0 * u);
    }
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g, grad_log_correction);
  u_ = Tensor();
}

data::ImageBatch Dequantizer::quantize(const Tensor& continuous) {
  if (continuous.rank() != 4) throw ShapeError("quantize expects NCHW");
  data::ImageBatch out(continuous.dim(0), continuous.dim(1), continuous.dim(2), continuous.dim(3));
  for (std::size_t i = 0; i < continuous.numel(); ++i) {
    const double q = std::floor(continuous[i] * 256.0);
    out.pixels[i] = static_cast<std::uint8_t>(q < 0.0 ? 0.0 : (q > 255.0 ? 255.0 : q));
  }
  return out;
}

Tensor Dequantizer::recover_noise(const Tensor& continuous) {
  const data::ImageBatch x = quantize(continuous);
  Tensor u(continuous.shape());
  for (std::size_t i = 0; i < u.numel(); ++i) u[i] = continuous[i] * 256.0 - static_cast<double>(x.pixels[i]);
  if (mode_ == DequantMode::uniform) return u;
  Tensor v(u.shape());
  for (std::size_t i = 0; i < u.numel(); ++i) v[i] = std::log(u[i]) - std::log1p(-u[i]);
  cond_ = condition_of(x);
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    (*it)->set_condition(&cond_);
    v = (*it)->inverse(v);
  }
  for (std::size_t i = 0; i < v.numel(); ++i) v[i] = numerics::sigmoid(v[i]);
  return v;
}

Tensor dequant_noise_for_ids(std::span<const std::string> ids, const Tensor::Shape& sample_shape, std::uint64_t seed) {
  Tensor::Shape shape = sample_shape;
  shape.insert(shape.begin(), ids.size());
  Tensor noise(shape);
  const std::size_t d = numerics::shape_numel(sample_shape);
  const numerics::RngStream base = numerics::RngStream(seed).split("dequant");
  for (std::size_t b = 0; b < ids.size(); ++b) {
    numerics::RngStream rng = base.split(ids[b]);
    for (std::size_t i = 0; i < d; ++i) noise[b * d + i] = rng.uniform_open();
  }
  return noise;
}

Tensor dequant_noise(std::size_t n, const Tensor::Shape& sample_shape, numerics::RngStream& rng) {
  Tensor::Shape shape = sample_shape;
  shape.insert(shape.begin(), n);
  Tensor noise(shape);
  for (std::size_t i = 0; i < noise.numel(); ++i) noise[i] = rng.uniform_open();
  return noise;
}

}  // namespace flowlhd::flow
