#include "flowlhd/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "flowlhd/errors.hpp"

namespace flowlhd::numerics {

std::vector<Tensor> finite_diff_grad(const std::function<double()>& f, ParamStore& params, double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_grad: step size must be positive");
  std::vector<Tensor> out;
  params.for_each([&](Parameter& p) {
    Tensor g = Tensor::zeros_like(p.value);
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      const double orig = p.value[i];
      p.value[i] = orig + h;
      const double fp = f();
      p.value[i] = orig - h;
      const double fm = f();
      p.value[i] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw NumericsError("finite_diff_grad: non-finite function value probing " + p.name + "[" +
                            std::to_string(i) + "]");
      }
      g[i] = (fp - fm) / (2.0 * h);
    }
    out.push_back(std::move(g));
  });
  return out;
}

double relative_error(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  if (a.size() != b.size()) throw ShapeError("relative_error: tensor count mismatch");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].shape() != b[t].shape()) throw ShapeError("relative_error: shape mismatch");
    for (std::size_t i = 0; i < a[t].numel(); ++i) {
      const double x = a[t][i], y = b[t][i];
      diff += (x - y) * (x - y);
      na += x * x;
      nb += y * y;
    }
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

double relative_error(const Tensor& a, const Tensor& b) {
  return relative_error(std::vector<Tensor>{a}, std::vector<Tensor>{b});
}

std::vector<Tensor> collect_grads(const ParamStore& params) {
  std::vector<Tensor> out;
  params.for_each([&](const Parameter& p) { out.push_back(p.grad); });
  return out;
}

}  // namespace flowlhd::numerics
