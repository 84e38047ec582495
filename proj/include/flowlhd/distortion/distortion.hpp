#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flowlhd/data/image_batch.hpp"
#include "flowlhd/numerics/rng.hpp"

namespace flowlhd::distortion {

enum class DistortionKind { gaussian_noise, gaussian_blur, salt_pepper };

std::vector<std::string> distortion_kinds();
DistortionKind parse_kind(std::string_view name);  // ConfigError listing the valid kinds
std::string kind_name(DistortionKind k);

struct DistortionSpec {
  DistortionKind kind = DistortionKind::gaussian_noise;
  double param = 0.0;  // alpha, blur radius or probability
  std::uint64_t seed = 0;
  double noise_clip_sigma = 3.0;  // gaussian_noise: z clipped to +-this before mapping to [0, 255]

  void validate() const;
};

// round(clip((1 - alpha) X + alpha N, 0, 255)), N = clip(z, -c, c) * 255 / (2c) + 127.5.
// Image i draws from rng.split(i).
data::ImageBatch gaussian_noise(const data::ImageBatch& x, double alpha, const numerics::RngStream& rng,
                                double clip_sigma = 3.0);
// Separable Gaussian, sigma = r, radius ceil(3 sigma), reflect-101 borders.
data::ImageBatch gaussian_blur(const data::ImageBatch& x, double r);
// One u per pixel location shared by all channels: u < p/2 -> 255, u > 1 - p/2 -> 0.
data::ImageBatch salt_pepper(const data::ImageBatch& x, double p, const numerics::RngStream& rng);

data::ImageBatch apply(const data::ImageBatch& x, const DistortionSpec& spec);

// Normalised taps of the truncated kernel, length 2 * ceil(3 sigma) + 1.
std::vector<double> gaussian_kernel(double sigma);

}  // namespace flowlhd::distortion
