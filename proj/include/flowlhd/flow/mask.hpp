#pragma once

#include <string>

#include "flowlhd/numerics/tensor.hpp"

namespace flowlhd::flow {

enum class MaskKind { checkerboard, channel, coordinate };

// Binary per-sample mask. Entries equal to 1 pass through a coupling layer
// unchanged and condition the transform of the rest.
//   checkerboard: mask[c][h][w] = 1 iff (h + w + parity) is even
//   channel:      mask[c][h][w] = 1 iff (c + parity) is even
//   coordinate:   mask[i]       = 1 iff (i + parity) is even
struct Mask {
  MaskKind kind = MaskKind::coordinate;
  int parity = 0;
  numerics::Tensor values;  // per-sample shape

  std::size_t size() const noexcept { return values.numel(); }
  std::string describe() const;
};

Mask checkerboard_mask(std::size_t channels, std::size_t height, std::size_t width, int parity);
Mask channel_mask(std::size_t channels, std::size_t height, std::size_t width, int parity);
Mask coordinate_mask(std::size_t dims, int parity);

}  // namespace flowlhd::flow
