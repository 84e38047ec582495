#include "flowlhd/flow/mask.hpp"

namespace flowlhd::flow {

using numerics::Tensor;

std::string Mask::describe() const {
  const char* k = kind == MaskKind::checkerboard ? "checkerboard" : kind == MaskKind::channel ? "channel" : "coordinate";
  return std::string(k) + "/" + std::to_string(parity);
}

Mask checkerboard_mask(std::size_t channels, std::size_t height, std::size_t width, int parity) {
  Mask m{MaskKind::checkerboard, parity & 1, Tensor({channels, height, width})};
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t h = 0; h < height; ++h)
      for (std::size_t w = 0; w < width; ++w)
        m.values[(c * height + h) * width + w] = ((h + w + static_cast<std::size_t>(m.parity)) % 2 == 0) ? 1.0 : 0.0;
  return m;
}

Mask channel_mask(std::size_t channels, std::size_t height, std::size_t width, int parity) {
  Mask m{MaskKind::channel, parity & 1, Tensor({channels, height, width})};
  for (std::size_t c = 0; c < channels; ++c) {
    const double v = ((c + static_cast<std::size_t>(m.parity)) % 2 == 0) ? 1.0 : 0.0;
    for (std::size_t k = 0; k < height * width; ++k) m.values[c * height * width + k] = v;
  }
  return m;
}

Mask coordinate_mask(std::size_t dims, int parity) {
  Mask m{MaskKind::coordinate, parity & 1, Tensor({dims})};
  for (std::size_t i = 0; i < dims; ++i) m.values[i] = ((i + static_cast<std::size_t>(m.parity)) % 2 == 0) ? 1.0 : 0.0;
  return m;
}

}  // namespace flowlhd::flow
