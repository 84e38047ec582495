#include "flowlhd/flow/squeeze.hpp"

#include "flowlhd/errors.hpp"

namespace flowlhd::flow {

Tensor squeeze2x2(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("squeeze expects NCHW, got " + numerics::shape_string(x.shape()));
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0) throw ShapeError("squeeze needs even H and W, got " + numerics::shape_string(x.shape()));
  Tensor y({n, 4 * c, h / 2, w / 2});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < h / 2; ++i)
        for (std::size_t j = 0; j < w / 2; ++j)
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx) y.at(b, ch * 4 + dy * 2 + dx, i, j) = x.at(b, ch, 2 * i + dy, 2 * j + dx);
  return y;
}

Tensor unsqueeze2x2(const Tensor& y) {
  if (y.rank() != 4 || y.dim(1) % 4 != 0)
    throw ShapeError("unsqueeze expects NCHW with C divisible by 4, got " + numerics::shape_string(y.shape()));
  const std::size_t n = y.dim(0), c = y.dim(1) / 4, h = y.dim(2) * 2, w = y.dim(3) * 2;
  Tensor x({n, c, h, w});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < h / 2; ++i)
        for (std::size_t j = 0; j < w / 2; ++j)
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx) x.at(b, ch, 2 * i + dy, 2 * j + dx) = y.at(b, ch * 4 + dy * 2 + dx, i, j);
  return x;
}

Tensor::Shape Squeeze::output_shape(const Tensor::Shape& in) const {
  if (in.size() != 3 || in[1] % 2 != 0 || in[2] % 2 != 0)
    throw ShapeError("squeeze needs a C x H x W sample with even H and W, got " + numerics::shape_string(in));
  return {in[0] * 4, in[1] / 2, in[2] / 2};
}

TransformResult Squeeze::forward(const Tensor& x) {
  TransformResult r{squeeze2x2(x), std::vector<double>(x.dim(0), 0.0), {}};
  cached_ = true;
  return r;
}

Tensor Squeeze::inverse(const Tensor& y, const Tensor*) { return unsqueeze2x2(y); }

Tensor Squeeze::backward(const Tensor& grad_y, std::span<const double>) {
  if (!cached_) throw StateError("squeeze backward called without forward");
  cached_ = false;
  return unsqueeze2x2(grad_y);
}

}  // namespace flowlhd::flow
