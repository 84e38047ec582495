#pragma once

#include <span>
#include <string>
#include <vector>

#include "flowlhd/data/image_batch.hpp"
#include "flowlhd/numerics/rng.hpp"
#include "flowlhd/numerics/tensor.hpp"

namespace flowlhd::data {

// An ordered, id-keyed sample set: either 8-bit images or continuous points
// (N x D). Samples are kept sorted by id and ids are unique, so every
// reduction over a dataset has a fixed order.
class Dataset {
 public:
  Dataset() = default;

  static Dataset from_images(std::vector<std::string> ids, ImageBatch images);
  static Dataset from_points(std::vector<std::string> ids, numerics::Tensor points);
  // Ids are zero-padded indices ("000000", "000001", ...).
  static Dataset from_points(numerics::Tensor points);
  static Dataset from_images(ImageBatch images);

  bool is_image() const noexcept { return is_image_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const ImageBatch& images() const noexcept { return images_; }
  const numerics::Tensor& points() const noexcept { return points_; }

  // Per-sample shape: {C, H, W} for images, {D} for points.
  numerics::Tensor::Shape sample_shape() const;

  Dataset subset(std::span<const std::size_t> indices) const;
  // Shuffled visiting order, a pure function of (size, rng state).
  std::vector<std::size_t> shuffled_order(const numerics::RngStream& rng) const;

  // Points as an N x D tensor restricted to `indices` (in the given order).
  numerics::Tensor point_rows(std::span<const std::size_t> indices) const;

 private:
  bool is_image_ = false;
  std::vector<std::string> ids_;
  ImageBatch images_;
  numerics::Tensor points_;
};

std::string index_id(std::size_t i);

}  // namespace flowlhd::data
