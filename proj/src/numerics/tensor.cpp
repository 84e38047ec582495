#include "flowlhd/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "flowlhd/errors.hpp"

namespace flowlhd::numerics {

std::size_t shape_numel(const Tensor::Shape& shape) noexcept {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Tensor::Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), values_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != shape_numel(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(values_.size()) + " does not match shape " +
                     shape_string(shape_));
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(shape_));
  }
  return shape_[axis];
}

std::size_t Tensor::per_sample() const {
  if (shape_.empty() || shape_[0] == 0) return 0;
  return values_.size() / shape_[0];
}

std::span<double> Tensor::sample(std::size_t n) {
  const std::size_t d = per_sample();
  return std::span<double>(values_).subspan(n * d, d);
}

std::span<const double> Tensor::sample(std::size_t n) const {
  const std::size_t d = per_sample();
  return std::span<const double>(values_).subspan(n * d, d);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != values_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), values_);
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

bool Tensor::identical(const Tensor& other) const noexcept {
  return shape_ == other.shape_ &&
         (values_.empty() || std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(double)) == 0);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("max_abs_diff shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void require_finite(const Tensor& t, const char* where) {
  if (!t.all_finite()) throw NumericsError(std::string("non-finite values in ") + where);
}

Tensor concat_samples(const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || a.rank() != b.rank() || a.dim(0) != b.dim(0)) {
    throw ShapeError("concat_samples: incompatible shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
  for (std::size_t i = 2; i < a.rank(); ++i) {
    if (a.dim(i) != b.dim(i)) {
      throw ShapeError("concat_samples: trailing dims differ " + shape_string(a.shape()) + " vs " +
                       shape_string(b.shape()));
    }
  }
  Tensor::Shape shape = a.shape();
  shape[1] += b.dim(1);
  Tensor out(shape);
  const std::size_t da = a.per_sample(), db = b.per_sample();
  for (std::size_t n = 0; n < a.dim(0); ++n) {
    std::copy_n(a.data() + n * da, da, out.data() + n * (da + db));
    std::copy_n(b.data() + n * db, db, out.data() + n * (da + db) + da);
  }
  return out;
}

void split_samples(const Tensor& x, std::size_t first_per_sample, Tensor& a, Tensor& b) {
  const std::size_t d = x.per_sample();
  if (x.rank() < 2 || first_per_sample > d) throw ShapeError("split_samples: bad split point");
  const std::size_t rest = d - first_per_sample;
  const std::size_t inner = shape_numel(Tensor::Shape(x.shape().begin() + 2, x.shape().end()));
  if (first_per_sample % inner != 0) throw ShapeError("split_samples: split not on a channel boundary");
  Tensor::Shape sa = x.shape(), sb = x.shape();
  sa[1] = first_per_sample / inner;
  sb[1] = rest / inner;
  a = Tensor(sa);
  b = Tensor(sb);
  for (std::size_t n = 0; n < x.dim(0); ++n) {
    std::copy_n(x.data() + n * d, first_per_sample, a.data() + n * first_per_sample);
    std::copy_n(x.data() + n * d + first_per_sample, rest, b.data() + n * rest);
  }
}

}  // namespace flowlhd::numerics
