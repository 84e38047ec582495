#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace flowlhd::numerics {

// Dense row-major block of doubles. The leading dimension is the batch
// dimension wherever a tensor flows through a model.
class Tensor {
 public:
  using Shape = std::vector<std::size_t>;

  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  // Elements per leading-dimension slice.
  std::size_t per_sample() const;

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> sample(std::size_t n);
  std::span<const double> sample(std::size_t n) const;

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  // NCHW accessor; only valid on rank-4 tensors.
  double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) noexcept {
    return values_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return values_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  Tensor reshaped(Shape shape) const;
  void fill(double v);
  bool all_finite() const noexcept;

  // Bitwise equality of shape and values.
  bool identical(const Tensor& other) const noexcept;

 private:
  Shape shape_;
  std::vector<double> values_;
};

std::size_t shape_numel(const Tensor::Shape& shape) noexcept;
std::string shape_string(const Tensor::Shape& shape);
double max_abs_diff(const Tensor& a, const Tensor& b);

// Throws NumericsError naming `where` if any value is NaN/Inf.
void require_finite(const Tensor& t, const char* where);

// Concatenate two tensors along axis 1 per sample (channel concat for NCHW).
Tensor concat_samples(const Tensor& a, const Tensor& b);
// Inverse of concat_samples: first `first_per_sample` elements of every sample
// go to the first output.
void split_samples(const Tensor& x, std::size_t first_per_sample, Tensor& a, Tensor& b);

}  // namespace flowlhd::numerics
