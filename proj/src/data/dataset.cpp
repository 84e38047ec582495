#include "flowlhd/data/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "flowlhd/errors.hpp"

namespace flowlhd::data {

namespace {

std::vector<std::size_t> sorted_order(const std::vector<std::string>& ids) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (ids[order[k]] == ids[order[k - 1]]) throw DataError("duplicate sample id '" + ids[order[k]] + "'");
  }
  return order;
}

}  // namespace

std::string index_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return buf;
}

Dataset Dataset::from_images(std::vector<std::string> ids, ImageBatch images) {
  if (ids.size() != images.n) throw DataError("image count does not match id count");
  const auto order = sorted_order(ids);
  Dataset ds;
  ds.is_image_ = true;
  ds.images_ = images.select(order);
  for (auto k : order) ds.ids_.push_back(ids[k]);
  return ds;
}

Dataset Dataset::from_images(ImageBatch images) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < images.n; ++i) ids.push_back(index_id(i));
  return from_images(std::move(ids), std::move(images));
}

Dataset Dataset::from_points(std::vector<std::string> ids, numerics::Tensor points) {
  if (points.rank() != 2) throw DataError("point sets must be N x D, got " + numerics::shape_string(points.shape()));
  if (ids.size() != points.dim(0)) throw DataError("point count does not match id count");
  const auto order = sorted_order(ids);
  Dataset ds;
  ds.is_image_ = false;
  const std::size_t d = points.dim(1);
  ds.points_ = numerics::Tensor({order.size(), d});
  for (std::size_t k = 0; k < order.size(); ++k) {
    std::copy_n(points.data() + order[k] * d, d, ds.points_.data() + k * d);
    ds.ids_.push_back(ids[order[k]]);
  }
  return ds;
}

Dataset Dataset::from_points(numerics::Tensor points) {
  if (points.rank() != 2) throw DataError("point sets must be N x D, got " + numerics::shape_string(points.shape()));
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < points.dim(0); ++i) ids.push_back(index_id(i));
  return from_points(std::move(ids), std::move(points));
}

numerics::Tensor::Shape Dataset::sample_shape() const {
  if (is_image_) return {images_.c, images_.h, images_.w};
  return {points_.rank() == 2 ? points_.dim(1) : 0};
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<std::string> ids;
  for (auto i : indices) {
    if (i >= size()) throw DataError("subset index " + std::to_string(i) + " out of range");
    ids.push_back(ids_[i]);
  }
  if (is_image_) return from_images(std::move(ids), images_.select(indices));
  return from_points(std::move(ids), point_rows(indices));
}

std::vector<std::size_t> Dataset::shuffled_order(const numerics::RngStream& rng) const {
  numerics::RngStream r = rng;
  return r.permutation(size());
}

numerics::Tensor Dataset::point_rows(std::span<const std::size_t> indices) const {
  const std::size_t d = points_.dim(1);
  numerics::Tensor out({indices.size(), d});
  for (std::size_t k = 0; k < indices.size(); ++k) std::copy_n(points_.data() + indices[k] * d, d, out.data() + k * d);
  return out;
}

}  // namespace flowlhd::data
