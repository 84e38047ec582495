#include "flowlhd/data/image_batch.hpp"

#include <algorithm>

#include "flowlhd/errors.hpp"

namespace flowlhd::data {

ImageBatch ImageBatch::select(std::span<const std::size_t> indices) const {
  ImageBatch out(indices.size(), c, h, w);
  const std::size_t d = per_image();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= n) throw DataError("image index " + std::to_string(indices[k]) + " out of range");
    std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(indices[k] * d), d,
                out.pixels.begin() + static_cast<std::ptrdiff_t>(k * d));
  }
  return out;
}

}  // namespace flowlhd::data
