#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "flowlhd/numerics/tensor.hpp"

namespace flowlhd::numerics {

// A differentiable block with a hand-derived reverse pass. forward() caches
// whatever backward() needs; backward() consumes the cache, accumulates
// parameter gradients into the owning ParamStore and returns the input
// gradient. Calling backward() without a preceding forward() is a StateError.
class Module {
 public:
  virtual ~Module() = default;
  virtual std::string_view kind() const noexcept = 0;
  virtual Tensor forward(const Tensor& x) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
};

using ModulePtr = std::unique_ptr<Module>;

// One entry per differentiable block shipped by the library, with a short
// statement of its reverse-mode rule. The gradient-check suite walks this list.
struct BlockInfo {
  std::string_view name;
  std::string_view derivative;
};

std::vector<BlockInfo> block_registry();

}  // namespace flowlhd::numerics
