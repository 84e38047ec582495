#include "flowlhd/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flowlhd/errors.hpp"

namespace flowlhd::data {

using numerics::RngStream;
using numerics::Tensor;

void Mixture4Spec::validate() const {
  if (!(separation >= 0.0) || !(separation < std::numbers::sqrt2)) {
    throw ConfigError("mixture separation " + std::to_string(separation) +
                      " outside [0, sqrt(2)): component covariance would not be positive definite");
  }
}

std::array<std::array<double, 2>, 4> Mixture4Spec::means() const noexcept {
  const double s = separation;
  return {{{s, 0.0}, {-s, 0.0}, {0.0, s}, {0.0, -s}}};
}

Tensor gen_reference_gaussian(std::size_t n, const RngStream& rng) {
  if (n == 0) throw ConfigError("gen_reference_gaussian: n must be at least 1");
  RngStream z = rng.split("z");
  Tensor out({n, 2});
  for (auto& v : out.values()) v = z.normal();
  return out;
}

Tensor gen_mixture4(std::size_t n, double separation, const RngStream& rng) {
  const Mixture4Spec spec{separation};
  spec.validate();
  if (n == 0) throw ConfigError("gen_mixture4: n must be at least 1");
  RngStream z = rng.split("z");
  RngStream label = rng.split("label");
  const auto means = spec.means();
  const double sd = std::sqrt(spec.component_variance());
  Tensor out({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& mu = means[label.below(4)];
    out[2 * i] = mu[0] + sd * z.normal();
    out[2 * i + 1] = mu[1] + sd * z.normal();
  }
  return out;
}

Tensor gen_two_moons(std::size_t n, double noise_sd, const RngStream& rng) {
  if (n == 0) throw ConfigError("gen_two_moons: n must be at least 1");
  if (noise_sd < 0.0) throw ConfigError("gen_two_moons: noise_sd must be non-negative");
  RngStream angle = rng.split("angle");
  RngStream noise = rng.split("noise");
  const std::size_t outer = (n + 1) / 2;
  Tensor out({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::numbers::pi * angle.uniform();
    double x, y;
    if (i < outer) {
      x = std::cos(t);
      y = std::sin(t);
    } else {
      x = 1.0 - std::cos(t);
      y = 0.5 - std::sin(t);
    }
    if (noise_sd > 0.0) {
      x += noise_sd * noise.normal();
      y += noise_sd * noise.normal();
    }
    out[2 * i] = x;
    out[2 * i + 1] = y;
  }
  return out;
}

ImageBatch gen_shapes(std::size_t n, std::size_t channels, std::size_t height, std::size_t width,
                      const RngStream& rng, std::size_t levels, std::size_t jitter) {
  if (height < 4 || width < 4) throw ConfigError("gen_shapes: images must be at least 4x4");
  if (levels < 2 || levels > 256) throw ConfigError("gen_shapes: levels must lie in [2, 256]");
  if (jitter > 255) throw ConfigError("gen_shapes: jitter must be at most 255");
  ImageBatch out(n, channels, height, width);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream r = rng.split(i);
    auto colour = [&] {
      std::vector<std::uint8_t> c(channels);
      for (auto& v : c) {
        long x = static_cast<long>(r.below(levels) * 255 / (levels - 1));
        if (jitter > 0) {
          x += static_cast<long>(r.below(2 * jitter + 1)) - static_cast<long>(jitter);
          if (x < 0) x = -x;
          if (x > 255) x = 510 - x;
        }
        v = static_cast<std::uint8_t>(x);
      }
      return c;
    };
    const auto bg = colour();
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) out.at(i, c, y, x) = bg[c];

    const std::size_t shapes = 2 + r.below(3);
    for (std::size_t s = 0; s < shapes; ++s) {
      const auto fg = colour();
      if (r.below(2) == 0) {
        const std::size_t rh = 3 + r.below(height / 2), rw = 3 + r.below(width / 2);
        const std::size_t y0 = r.below(height - std::min(rh, height - 1)), x0 = r.below(width - std::min(rw, width - 1));
        for (std::size_t y = y0; y < std::min(height, y0 + rh); ++y)
          for (std::size_t x = x0; x < std::min(width, x0 + rw); ++x)
            for (std::size_t c = 0; c < channels; ++c) out.at(i, c, y, x) = fg[c];
      } else {
        const double cy = r.uniform() * static_cast<double>(height);
        const double cx = r.uniform() * static_cast<double>(width);
        const double rad = 2.0 + r.uniform() * static_cast<double>(std::min(height, width)) / 4.0;
        for (std::size_t y = 0; y < height; ++y)
          for (std::size_t x = 0; x < width; ++x) {
            const double dy = static_cast<double>(y) + 0.5 - cy, dx = static_cast<double>(x) + 0.5 - cx;
            if (dy * dy + dx * dx <= rad * rad)
              for (std::size_t c = 0; c < channels; ++c) out.at(i, c, y, x) = fg[c];
          }
      }
    }
  }
  return out;
}

}  // namespace flowlhd::data
