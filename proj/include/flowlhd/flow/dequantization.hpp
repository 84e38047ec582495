#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "flowlhd/data/image_batch.hpp"
#include "flowlhd/flow/coupling.hpp"
#include "flowlhd/numerics/param_store.hpp"
#include "flowlhd/numerics/rng.hpp"

namespace flowlhd::flow {

enum class DequantMode { uniform, variational };

struct DequantOutput {
  Tensor continuous;                    // (x + u) / 256, N x C x H x W
  std::vector<double> log_correction;   // -log q(u|x) - D log 256 per sample
  Tensor u;
};

// Maps 8-bit images to [0, 1] by adding noise u in [0, 1). In variational mode
// u = sigmoid(g(logit(eps); x)) where g is a stack of checkerboard couplings
// conditioned on the image rescaled to [-1, 1]; eps is caller-supplied uniform
// noise in (0, 1). In uniform mode u = eps.
class Dequantizer {
 public:
  Dequantizer(std::size_t channels, std::size_t height, std::size_t width);
  Dequantizer(numerics::ParamStore& store, const std::string& prefix, std::size_t channels, std::size_t height,
              std::size_t width, std::size_t layers, std::size_t hidden, std::size_t gated_blocks,
              const numerics::RngStream& init, double clamp = 2.0);

  DequantMode mode() const noexcept { return mode_; }
  Tensor::Shape sample_shape() const { return {c_, h_, w_}; }
  std::size_t dims() const noexcept { return c_ * h_ * w_; }
  std::size_t layer_count() const noexcept { return layers_.size(); }
  const CouplingLayer& layer(std::size_t i) const { return *layers_.at(i); }

  DequantOutput forward(const data::ImageBatch& x, const Tensor& noise);
  // Gradient w.r.t. the continuous output and per-sample log_correction.
  // Noise is treated as a constant.
  void backward(const Tensor& grad_continuous, std::span<const double> grad_log_correction);

  // floor(256 * continuous) clipped to [0, 255].
  static data::ImageBatch quantize(const Tensor& continuous);
  // Inverts the conditional flow: the eps that forward() would need to
  // produce `continuous` from quantize(continuous).
  Tensor recover_noise(const Tensor& continuous);

 private:
  void check(const data::ImageBatch& x, const Tensor& noise) const;
  static Tensor condition_of(const data::ImageBatch& x);

  DequantMode mode_;
  std::size_t c_, h_, w_;
  std::vector<std::unique_ptr<CouplingLayer>> layers_;
  Tensor cond_;
  bool cached_ = false;
  Tensor u_;
};

// Uniform (0, 1) noise for the listed images, one substream per image id so
// every image gets the same noise regardless of batch composition.
Tensor dequant_noise_for_ids(std::span<const std::string> ids, const Tensor::Shape& sample_shape, std::uint64_t seed);
Tensor dequant_noise(std::size_t n, const Tensor::Shape& sample_shape, numerics::RngStream& rng);

}  // namespace flowlhd::flow
