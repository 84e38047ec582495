#pragma once

#include <functional>
#include <vector>

#include "flowlhd/numerics/param_store.hpp"

namespace flowlhd::numerics {

// Central differences (f(p+h) - f(p-h)) / 2h for every coordinate of every
// parameter, in store order. f must be deterministic given the parameter
// values; each coordinate is restored exactly after probing.
std::vector<Tensor> finite_diff_grad(const std::function<double()>& f, ParamStore& params, double h);

// ||a - b|| / max(||a||, ||b||) over the concatenation of all tensors; 0 when
// both are exactly zero.
double relative_error(const std::vector<Tensor>& a, const std::vector<Tensor>& b);
double relative_error(const Tensor& a, const Tensor& b);

// Snapshot of the analytic gradients currently held in the store.
std::vector<Tensor> collect_grads(const ParamStore& params);

}  // namespace flowlhd::numerics
