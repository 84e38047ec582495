#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "flowlhd/numerics/tensor.hpp"

namespace flowlhd::data {

// N x C x H x W block of 8-bit pixels, row-major.
struct ImageBatch {
  std::size_t n = 0, c = 0, h = 0, w = 0;
  std::vector<std::uint8_t> pixels;

  ImageBatch() = default;
  ImageBatch(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_, std::uint8_t fill = 0)
      : n(n_), c(c_), h(h_), w(w_), pixels(n_ * c_ * h_ * w_, fill) {}

  std::size_t per_image() const noexcept { return c * h * w; }
  std::uint8_t& at(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) noexcept {
    return pixels[((i * c + ch) * h + y) * w + x];
  }
  std::uint8_t at(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) const noexcept {
    return pixels[((i * c + ch) * h + y) * w + x];
  }
  std::span<std::uint8_t> image(std::size_t i) noexcept {
    return std::span<std::uint8_t>(pixels).subspan(i * per_image(), per_image());
  }
  std::span<const std::uint8_t> image(std::size_t i) const noexcept {
    return std::span<const std::uint8_t>(pixels).subspan(i * per_image(), per_image());
  }
  numerics::Tensor::Shape shape() const { return {n, c, h, w}; }

  ImageBatch select(std::span<const std::size_t> indices) const;
  bool operator==(const ImageBatch&) const = default;
};

}  // namespace flowlhd::data
