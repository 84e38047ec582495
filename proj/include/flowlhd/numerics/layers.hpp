#pragma once

#include <optional>
#include <string>

#include "flowlhd/numerics/module.hpp"
#include "flowlhd/numerics/param_store.hpp"
#include "flowlhd/numerics/rng.hpp"

namespace flowlhd::numerics {

double sigmoid(double a) noexcept;

// PyTorch-style uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation; the
// stream is split by parameter name so init does not depend on build order.
Tensor uniform_init(const Tensor::Shape& shape, std::size_t fan_in, const RngStream& rng, std::string_view name);

class Conv2d final : public Module {
 public:
  Conv2d(ParamStore& store, const std::string& prefix, std::size_t in_channels, std::size_t out_channels,
         std::size_t kernel, const RngStream& init, bool zero_init = false);
  std::string_view kind() const noexcept override { return "conv2d"; }
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Parameter* weight_;
  Parameter* bias_;
  int padding_;
  std::optional<Tensor> input_;
};

// [elu(x), elu(-x)] stacked along axis 1; doubles the channel count.
class ConcatElu final : public Module {
 public:
  std::string_view kind() const noexcept override { return "concat_elu"; }
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::optional<Tensor> input_;
};

// Normalises each pixel over the channel axis, then applies a per-channel
// affine map.
class LayerNormChannels final : public Module {
 public:
  LayerNormChannels(ParamStore& store, const std::string& prefix, std::size_t channels, double eps = 1e-5);
  std::string_view kind() const noexcept override { return "layer_norm_channels"; }
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Parameter* gamma_;
  Parameter* beta_;
  double eps_;
  std::optional<Tensor> normalized_;
  std::vector<double> inv_std_;
};

// x + a * sigmoid(b) where (a, b) = conv1x1(elu2(conv3x3(elu2(x)))).
class GatedConv final : public Module {
 public:
  GatedConv(ParamStore& store, const std::string& prefix, std::size_t channels, std::size_t hidden,
            const RngStream& init);
  std::string_view kind() const noexcept override { return "gated_conv"; }
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  ConcatElu elu_in_;
  Conv2d conv_in_;
  ConcatElu elu_mid_;
  Conv2d conv_out_;
  std::optional<Tensor> value_;
  std::optional<Tensor> gate_;  // sigmoid(b)
};

// conv3x3 -> [GatedConv -> LayerNormChannels] x blocks -> ConcatElu -> conv3x3.
// The final conv is zero-initialised, so a fresh coupling layer is the identity.
class GatedConvNet final : public Module {
 public:
  GatedConvNet(ParamStore& store, const std::string& prefix, std::size_t in_channels, std::size_t hidden,
               std::size_t out_channels, std::size_t blocks, const RngStream& init);
  std::string_view kind() const noexcept override { return "gated_conv_net"; }
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<ModulePtr> layers_;
};

// y = x W^T + b on N x in tensors.
class Linear final : public Module {
 public:
  Linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out, const RngStream& init,
         bool zero_init = false);
  std::string_view kind() const noexcept override { return "linear"; }
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Parameter* weight_;
  Parameter* bias_;
  std::optional<Tensor> input_;
};

class Tanh final : public Module {
 public:
  std::string_view kind() const noexcept override { return "tanh"; }
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::optional<Tensor> output_;
};

class Sequential final : public Module {
 public:
  Sequential() = default;
  explicit Sequential(std::vector<ModulePtr> layers) : layers_(std::move(layers)) {}
  void push_back(ModulePtr m) { layers_.push_back(std::move(m)); }
  std::string_view kind() const noexcept override { return "sequential"; }
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<ModulePtr> layers_;
};

// Linear -> Tanh -> (Linear -> Tanh) x (depth - 1) -> zero-initialised Linear.
ModulePtr make_mlp(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden,
                   std::size_t out, std::size_t depth, const RngStream& init);

}  // namespace flowlhd::numerics
