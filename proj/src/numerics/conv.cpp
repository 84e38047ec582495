#include "flowlhd/numerics/conv.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <vector>

#include "flowlhd/errors.hpp"

namespace flowlhd::numerics {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

struct Geometry {
  std::size_t n, in_c, h, w, out_c, k, out_h, out_w;
  int pad;
  std::size_t col_rows() const { return in_c * k * k; }
  std::size_t col_cols() const { return out_h * out_w; }
  bool is_pointwise() const { return k == 1 && pad == 0; }
};

Geometry geometry(const Tensor::Shape& in, const Tensor::Shape& kernel, int padding) {
  if (in.size() != 4 || kernel.size() != 4) {
    throw ShapeError("conv2d expects NCHW input and OIKK kernel, got " + shape_string(in) + " and " +
                     shape_string(kernel));
  }
  if (kernel[2] != kernel[3] || kernel[2] % 2 == 0) {
    throw ShapeError("conv2d kernel must be square with odd size, got " + shape_string(kernel));
  }
  if (in[1] != kernel[1]) {
    throw ShapeError("conv2d input channels " + std::to_string(in[1]) + " do not match kernel input channels " +
                     std::to_string(kernel[1]));
  }
  if (padding < 0) throw ShapeError("conv2d padding must be non-negative");
  const auto k = kernel[2];
  const auto p = static_cast<std::size_t>(padding);
  if (in[2] + 2 * p < k || in[3] + 2 * p < k) throw ShapeError("conv2d kernel larger than padded input");
  return {in[0], in[1], in[2], in[3], kernel[0], k, in[2] + 2 * p - k + 1, in[3] + 2 * p - k + 1, padding};
}

void im2col(const double* img, const Geometry& g, double* col) {
  const long pad = g.pad;
  for (std::size_t c = 0; c < g.in_c; ++c) {
    const double* plane = img + c * g.h * g.w;
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        double* row = col + ((c * g.k + ky) * g.k + kx) * g.col_cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy + ky) - pad;
          double* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<long>(g.h)) {
            std::fill_n(dst, g.out_w, 0.0);
            continue;
          }
          const double* src = plane + iy * g.w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox + kx) - pad;
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.w)) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const Geometry& g, double* img) {
  const long pad = g.pad;
  for (std::size_t c = 0; c < g.in_c; ++c) {
    double* plane = img + c * g.h * g.w;
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const double* row = col + ((c * g.k + ky) * g.k + kx) * g.col_cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy + ky) - pad;
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          double* dst = plane + iy * g.w;
          const double* src = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox + kx) - pad;
            if (ix >= 0 && ix < static_cast<long>(g.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

std::vector<double>& workspace(std::size_t n) {
  thread_local std::vector<double> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, int padding) {
  const Geometry g = geometry(input.shape(), kernel.shape(), padding);
  Tensor out({g.n, g.out_c, g.out_h, g.out_w});
  ConstMapMat wmat(kernel.data(), g.out_c, g.col_rows());
  const std::size_t in_stride = g.in_c * g.h * g.w;
  const std::size_t out_stride = g.out_c * g.col_cols();
  for (std::size_t n = 0; n < g.n; ++n) {
    const double* col = input.data() + n * in_stride;
    if (!g.is_pointwise()) {
      auto& ws = workspace(g.col_rows() * g.col_cols());
      im2col(input.data() + n * in_stride, g, ws.data());
      col = ws.data();
    }
    MapMat(out.data() + n * out_stride, g.out_c, g.col_cols()).noalias() =
        wmat * ConstMapMat(col, g.col_rows(), g.col_cols());
  }
  return out;
}

Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& kernel, const Tensor::Shape& input_shape,
                             int padding) {
  const Geometry g = geometry(input_shape, kernel.shape(), padding);
  if (grad_out.shape() != Tensor::Shape{g.n, g.out_c, g.out_h, g.out_w}) {
    throw ShapeError("conv2d backward: grad shape " + shape_string(grad_out.shape()) + " does not match output");
  }
  Tensor grad_in(input_shape);
  ConstMapMat wmat(kernel.data(), g.out_c, g.col_rows());
  const std::size_t in_stride = g.in_c * g.h * g.w;
  const std::size_t out_stride = g.out_c * g.col_cols();
  for (std::size_t n = 0; n < g.n; ++n) {
    ConstMapMat gout(grad_out.data() + n * out_stride, g.out_c, g.col_cols());
    if (g.is_pointwise()) {
      MapMat(grad_in.data() + n * in_stride, g.col_rows(), g.col_cols()).noalias() = wmat.transpose() * gout;
      continue;
    }
    auto& ws = workspace(g.col_rows() * g.col_cols());
    MapMat(ws.data(), g.col_rows(), g.col_cols()).noalias() = wmat.transpose() * gout;
    col2im_add(ws.data(), g, grad_in.data() + n * in_stride);
  }
  return grad_in;
}

void conv2d_backward_kernel(const Tensor& grad_out, const Tensor& input, int padding, Tensor& kernel_grad) {
  const Geometry g = geometry(input.shape(), kernel_grad.shape(), padding);
  if (grad_out.shape() != Tensor::Shape{g.n, g.out_c, g.out_h, g.out_w}) {
    throw ShapeError("conv2d backward: grad shape " + shape_string(grad_out.shape()) + " does not match output");
  }
  MapMat gw(kernel_grad.data(), g.out_c, g.col_rows());
  const std::size_t in_stride = g.in_c * g.h * g.w;
  const std::size_t out_stride = g.out_c * g.col_cols();
  for (std::size_t n = 0; n < g.n; ++n) {
    const double* col = input.data() + n * in_stride;
    if (!g.is_pointwise()) {
      auto& ws = workspace(g.col_rows() * g.col_cols());
      im2col(input.data() + n * in_stride, g, ws.data());
      col = ws.data();
    }
    gw.noalias() += ConstMapMat(grad_out.data() + n * out_stride, g.out_c, g.col_cols()) *
                    ConstMapMat(col, g.col_rows(), g.col_cols()).transpose();
  }
}

}  // namespace flowlhd::numerics
