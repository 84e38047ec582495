#include "flowlhd/distortion/distortion.hpp"

#include <cmath>

#include "flowlhd/errors.hpp"

namespace flowlhd::distortion {

using data::ImageBatch;

std::vector<std::string> distortion_kinds() { return {"gaussian_noise", "gaussian_blur", "salt_pepper"}; }

DistortionKind parse_kind(std::string_view name) {
  if (name == "gaussian_noise") return DistortionKind::gaussian_noise;
  if (name == "gaussian_blur") return DistortionKind::gaussian_blur;
  if (name == "salt_pepper") return DistortionKind::salt_pepper;
  throw ConfigError("unknown distortion kind '" + std::string(name) +
                    "'; valid kinds: gaussian_noise, gaussian_blur, salt_pepper");
}

std::string kind_name(DistortionKind k) {
  switch (k) {
    case DistortionKind::gaussian_noise: return "gaussian_noise";
    case DistortionKind::gaussian_blur: return "gaussian_blur";
    case DistortionKind::salt_pepper: return "salt_pepper";
  }
  return "?";
}

void DistortionSpec::validate() const {
  switch (kind) {
    case DistortionKind::gaussian_noise:
      if (!(param >= 0.0 && param <= 1.0)) throw ConfigError("gaussian_noise alpha must lie in [0, 1]");
      if (!(noise_clip_sigma > 0.0)) throw ConfigError("noise clip must be positive");
      break;
    case DistortionKind::gaussian_blur:
      if (!(param >= 0.0) || !std::isfinite(param)) throw ConfigError("gaussian_blur radius must be >= 0");
      break;
    case DistortionKind::salt_pepper:
      if (!(param >= 0.0 && param <= 1.0)) throw ConfigError("salt_pepper probability must lie in [0, 1]");
      break;
  }
}

namespace {

std::uint8_t to_pixel(double v) {
  const double r = std::round(v);
  return static_cast<std::uint8_t>(r < 0.0 ? 0.0 : (r > 255.0 ? 255.0 : r));
}

// Reflect-101 (dcb|abcd|cba), repeated for kernels wider than the image.
long reflect(long i, long n) {
  if (n == 1) return 0;
  const long period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

ImageBatch gaussian_noise(const ImageBatch& x, double alpha, const numerics::RngStream& rng, double clip_sigma) {
  DistortionSpec{DistortionKind::gaussian_noise, alpha, 0, clip_sigma}.validate();
  ImageBatch out = x;
  if (alpha == 0.0) return out;
  const double scale = 255.0 / (2.0 * clip_sigma);
  for (std::size_t i = 0; i < x.n; ++i) {
    numerics::RngStream r = rng.split(static_cast<std::uint64_t>(i));
    auto src = x.image(i);
    auto dst = out.image(i);
    for (std::size_t k = 0; k < src.size(); ++k) {
      const double z = std::clamp(r.normal(), -clip_sigma, clip_sigma);
      const double noise = z * scale + 127.5;
      dst[k] = to_pixel((1.0 - alpha) * static_cast<double>(src[k]) + alpha * noise);
    }
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) return {1.0};
  const long radius = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (long t = -radius; t <= radius; ++t) {
    const double v = std::exp(-0.5 * static_cast<double>(t * t) / (sigma * sigma));
    k[static_cast<std::size_t>(t + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

ImageBatch gaussian_blur(const ImageBatch& x, double r) {
  DistortionSpec{DistortionKind::gaussian_blur, r}.validate();
  if (r == 0.0) return x;
  const std::vector<double> k = gaussian_kernel(r);
  const long radius = static_cast<long>(k.size() / 2);
  const long h = static_cast<long>(x.h), w = static_cast<long>(x.w);
  ImageBatch out = x;
  std::vector<double> tmp(x.h * x.w);
  for (std::size_t i = 0; i < x.n; ++i)
    for (std::size_t c = 0; c < x.c; ++c) {
      const std::uint8_t* src = x.pixels.data() + (i * x.c + c) * x.h * x.w;
      std::uint8_t* dst = out.pixels.data() + (i * x.c + c) * x.h * x.w;
      for (long y = 0; y < h; ++y)
        for (long xx = 0; xx < w; ++xx) {
          double acc = 0.0;
          for (long t = -radius; t <= radius; ++t)
            acc += k[static_cast<std::size_t>(t + radius)] * src[y * w + reflect(xx + t, w)];
          tmp[static_cast<std::size_t>(y * w + xx)] = acc;
        }
      for (long y = 0; y < h; ++y)
        for (long xx = 0; xx < w; ++xx) {
          double acc = 0.0;
          for (long t = -radius; t <= radius; ++t)
            acc += k[static_cast<std::size_t>(t + radius)] * tmp[static_cast<std::size_t>(reflect(y + t, h) * w + xx)];
          dst[y * w + xx] = to_pixel(acc);
        }
    }
  return out;
}

ImageBatch salt_pepper(const ImageBatch& x, double p, const numerics::RngStream& rng) {
  DistortionSpec{DistortionKind::salt_pepper, p}.validate();
  ImageBatch out = x;
  if (p == 0.0) return out;
  const std::size_t plane = x.h * x.w;
  for (std::size_t i = 0; i < x.n; ++i) {
    numerics::RngStream r = rng.split(static_cast<std::uint64_t>(i));
    for (std::size_t k = 0; k < plane; ++k) {
      const double u = r.uniform();
      const int set = u < p / 2.0 ? 255 : (u > 1.0 - p / 2.0 ? 0 : -1);
      if (set < 0) continue;
      for (std::size_t c = 0; c < x.c; ++c) out.pixels[(i * x.c + c) * plane + k] = static_cast<std::uint8_t>(set);
    }
  }
  return out;
}

ImageBatch apply(const ImageBatch& x, const DistortionSpec& spec) {
  spec.validate();
  const numerics::RngStream rng = numerics::RngStream(spec.seed).split(kind_name(spec.kind));
  switch (spec.kind) {
    case DistortionKind::gaussian_noise: return gaussian_noise(x, spec.param, rng, spec.noise_clip_sigma);
    case DistortionKind::gaussian_blur: return gaussian_blur(x, spec.param);
    case DistortionKind::salt_pepper: return salt_pepper(x, spec.param, rng);
  }
  return x;
}

}  // namespace flowlhd::distortion
