#pragma once

#include <array>

#include "flowlhd/data/image_batch.hpp"
#include "flowlhd/numerics/rng.hpp"
#include "flowlhd/numerics/tensor.hpp"

namespace flowlhd::data {

// Four isotropic Gaussians at (s,0), (-s,0), (0,s), (0,-s), each with
// covariance (1 - s^2/2) I. The mixture has zero mean and identity covariance
// for every valid s in [0, sqrt(2)).
struct Mixture4Spec {
  double separation = 0.0;

  void validate() const;  // ConfigError unless 0 <= s < sqrt(2)
  double component_variance() const noexcept { return 1.0 - separation * separation / 2.0; }
  std::array<std::array<double, 2>, 4> means() const noexcept;
};

// Standard bivariate normal, N x 2. Standard-normal draws come from the
// rng.split("z") substream, the same one gen_mixture4 uses, so a reference
// set and a mixture set built from equal streams share their noise.
numerics::Tensor gen_reference_gaussian(std::size_t n, const numerics::RngStream& rng);

// Component labels from rng.split("label"), noise from rng.split("z").
numerics::Tensor gen_mixture4(std::size_t n, double separation, const numerics::RngStream& rng);

// First ceil(n/2) points on the upper unit semicircle, the rest on the shifted
// lower one, angles uniform, plus isotropic N(0, noise_sd^2) noise.
numerics::Tensor gen_two_moons(std::size_t n, double noise_sd, const numerics::RngStream& rng);

// Piecewise-constant colour images: a flat background with a few
// axis-aligned rectangles and discs of random colour. Each channel takes one
// of `levels` evenly spaced values in [0, 255] (256 allows every intensity),
// then a uniform integer offset in [-jitter, jitter] reflected back into
// [0, 255]. Image i only depends on rng.split(i).
ImageBatch gen_shapes(std::size_t n, std::size_t channels, std::size_t height, std::size_t width,
                      const numerics::RngStream& rng, std::size_t levels = 256, std::size_t jitter = 0);

}  // namespace flowlhd::data
