#pragma once

#include <cmath>
#include <vector>

#include "flowlhd/data/image_batch.hpp"
#include "flowlhd/flow/model.hpp"
#include "flowlhd/numerics/module.hpp"
#include "flowlhd/numerics/param_store.hpp"
#include "flowlhd/numerics/rng.hpp"

namespace oracle {

// Subnet double that ignores its input and emits fixed (s_raw, t) values.
class ConstantNet final : public flowlhd::numerics::Module {
 public:
  ConstantNet(std::vector<double> s_raw, std::vector<double> t) : s_(std::move(s_raw)), t_(std::move(t)) {}
  std::string_view kind() const noexcept override { return "constant"; }
  flowlhd::numerics::Tensor forward(const flowlhd::numerics::Tensor& x) override {
    flowlhd::numerics::Tensor out({x.dim(0), 2 * s_.size()});
    for (std::size_t n = 0; n < x.dim(0); ++n)
      for (std::size_t i = 0; i < s_.size(); ++i) {
        out[n * 2 * s_.size() + i] = s_[i];
        out[n * 2 * s_.size() + s_.size() + i] = t_[i];
      }
    return out;
  }
  flowlhd::numerics::Tensor backward(const flowlhd::numerics::Tensor& g) override {
    return flowlhd::numerics::Tensor({g.dim(0), s_.size()});
  }

 private:
  std::vector<double> s_, t_;
};

inline void randomize_params(flowlhd::numerics::ParamStore& s, flowlhd::numerics::RngStream& rng, double scale) {
  s.for_each([&](flowlhd::numerics::Parameter& p) {
    for (std::size_t i = 0; i < p.value.numel(); ++i) p.value[i] = scale * rng.normal();
  });
}

inline flowlhd::data::ImageBatch random_images(std::size_t n, const flowlhd::numerics::Tensor::Shape& s,
                                               flowlhd::numerics::RngStream& rng) {
  flowlhd::data::ImageBatch b(n, s[0], s[1], s[2]);
  for (auto& p : b.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return b;
}

// The continuous-space forward map of a model on one sample, flattened:
// factored parts in transform order followed by the final latent.
inline std::vector<double> flat_forward(flowlhd::flow::FlowModel& m, const std::vector<double>& x) {
  flowlhd::numerics::Tensor::Shape shape = m.sample_shape();
  shape.insert(shape.begin(), 1);
  const auto enc = m.encode(flowlhd::numerics::Tensor(shape, x));
  std::vector<double> out;
  for (const auto& f : enc.latent.factored) out.insert(out.end(), f.values().begin(), f.values().end());
  out.insert(out.end(), enc.latent.z.values().begin(), enc.latent.z.values().end());
  return out;
}

}  // namespace oracle
