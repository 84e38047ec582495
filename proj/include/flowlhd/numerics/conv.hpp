#pragma once

#include "flowlhd/numerics/tensor.hpp"

namespace flowlhd::numerics {

// 2-D cross-correlation, stride 1, zero padding. input is N x I x H x W,
// kernel is O x I x K x K with K odd; output is N x O x (H+2p-K+1) x (W+2p-K+1).
Tensor conv2d(const Tensor& input, const Tensor& kernel, int padding);

// Gradient of sum(grad_out * conv2d(input, kernel)) with respect to input.
Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& kernel, const Tensor::Shape& input_shape,
                             int padding);

// Accumulates the kernel gradient into kernel_grad, samples in ascending order.
void conv2d_backward_kernel(const Tensor& grad_out, const Tensor& input, int padding, Tensor& kernel_grad);

}  // namespace flowlhd::numerics
