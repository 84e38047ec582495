#include "flowlhd/numerics/layers.hpp"

#include <Eigen/Core>
#include <cmath>

#include "flowlhd/errors.hpp"
#include "flowlhd/numerics/conv.hpp"

namespace flowlhd::numerics {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

const Tensor& cached(const std::optional<Tensor>& t, std::string_view block) {
  if (!t) throw StateError(std::string(block) + ": backward called before forward");
  return *t;
}

void require_rank(const Tensor& x, std::size_t rank, std::string_view block) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(block) + " expects rank " + std::to_string(rank) + " input, got " +
                     shape_string(x.shape()));
  }
}

inline double elu(double a) noexcept { return a > 0.0 ? a : std::expm1(a); }
inline double elu_grad(double a) noexcept { return a > 0.0 ? 1.0 : std::exp(a); }

}  // namespace

double sigmoid(double a) noexcept {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

Tensor uniform_init(const Tensor::Shape& shape, std::size_t fan_in, const RngStream& rng, std::string_view name) {
  Tensor t(shape);
  RngStream r = rng.split(name);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.values()) v = (2.0 * r.uniform() - 1.0) * bound;
  return t;
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(ParamStore& store, const std::string& prefix, std::size_t in_channels, std::size_t out_channels,
               std::size_t kernel, const RngStream& init, bool zero_init)
    : padding_(static_cast<int>((kernel - 1) / 2)) {
  const Tensor::Shape wshape{out_channels, in_channels, kernel, kernel};
  const std::size_t fan_in = in_channels * kernel * kernel;
  const std::string wname = prefix + ".weight", bname = prefix + ".bias";
  weight_ = &store.add(wname, zero_init ? Tensor(wshape) : uniform_init(wshape, fan_in, init, wname));
  bias_ = &store.add(bname, zero_init ? Tensor({out_channels}) : uniform_init({out_channels}, fan_in, init, bname));
}

Tensor Conv2d::forward(const Tensor& x) {
  Tensor y = conv2d(x, weight_->value, padding_);
  const std::size_t n = y.dim(0), c = y.dim(1), hw = y.dim(2) * y.dim(3);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < c; ++o) {
      double* p = y.data() + (i * c + o) * hw;
      const double b = bias_->value[o];
      for (std::size_t k = 0; k < hw; ++k) p[k] += b;
    }
  }
  input_ = x;
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const Tensor& x = cached(input_, kind());
  conv2d_backward_kernel(grad_out, x, padding_, weight_->grad);
  const std::size_t n = grad_out.dim(0), c = grad_out.dim(1), hw = grad_out.dim(2) * grad_out.dim(3);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < c; ++o) {
      const double* g = grad_out.data() + (i * c + o) * hw;
      double s = 0.0;
      for (std::size_t k = 0; k < hw; ++k) s += g[k];
      bias_->grad[o] += s;
    }
  }
  Tensor gx = conv2d_backward_input(grad_out, weight_->value, x.shape(), padding_);
  input_.reset();
  return gx;
}

// ---------------------------------------------------------------- ConcatElu

Tensor ConcatElu::forward(const Tensor& x) {
  if (x.rank() < 2) throw ShapeError("concat_elu expects a batched tensor");
  Tensor::Shape shape = x.shape();
  shape[1] *= 2;
  Tensor y(shape);
  const std::size_t d = x.per_sample();
  for (std::size_t n = 0; n < x.dim(0); ++n) {
    const double* src = x.data() + n * d;
    double* dst = y.data() + n * 2 * d;
    for (std::size_t i = 0; i < d; ++i) {
      dst[i] = elu(src[i]);
      dst[d + i] = elu(-src[i]);
    }
  }
  input_ = x;
  return y;
}

Tensor ConcatElu::backward(const Tensor& grad_out) {
  const Tensor& x = cached(input_, kind());
  Tensor gx = Tensor::zeros_like(x);
  const std::size_t d = x.per_sample();
  for (std::size_t n = 0; n < x.dim(0); ++n) {
    const double* src = x.data() + n * d;
    const double* g = grad_out.data() + n * 2 * d;
    double* dst = gx.data() + n * d;
    for (std::size_t i = 0; i < d; ++i) dst[i] = g[i] * elu_grad(src[i]) - g[d + i] * elu_grad(-src[i]);
  }
  input_.reset();
  return gx;
}

// ---------------------------------------------------------------- LayerNormChannels

LayerNormChannels::LayerNormChannels(ParamStore& store, const std::string& prefix, std::size_t channels, double eps)
    : eps_(eps) {
  gamma_ = &store.add(prefix + ".gamma", Tensor({channels}, 1.0));
  beta_ = &store.add(prefix + ".beta", Tensor({channels}, 0.0));
}

Tensor LayerNormChannels::forward(const Tensor& x) {
  require_rank(x, 4, kind());
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (c != gamma_->value.numel()) throw ShapeError("layer_norm_channels: channel count mismatch");
  Tensor xhat = Tensor::zeros_like(x);
  Tensor y = Tensor::zeros_like(x);
  inv_std_.assign(n * hw, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* src = x.data() + i * c * hw;
    double* nrm = xhat.data() + i * c * hw;
    double* dst = y.data() + i * c * hw;
    for (std::size_t p = 0; p < hw; ++p) {
      double mean = 0.0;
      for (std::size_t ch = 0; ch < c; ++ch) mean += src[ch * hw + p];
      mean /= static_cast<double>(c);
      double var = 0.0;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double dlt = src[ch * hw + p] - mean;
        var += dlt * dlt;
      }
      var /= static_cast<double>(c);
      const double inv = 1.0 / std::sqrt(var + eps_);
      inv_std_[i * hw + p] = inv;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double v = (src[ch * hw + p] - mean) * inv;
        nrm[ch * hw + p] = v;
        dst[ch * hw + p] = gamma_->value[ch] * v + beta_->value[ch];
      }
    }
  }
  normalized_ = std::move(xhat);
  return y;
}

Tensor LayerNormChannels::backward(const Tensor& grad_out) {
  const Tensor& xhat = cached(normalized_, kind());
  const std::size_t n = xhat.dim(0), c = xhat.dim(1), hw = xhat.dim(2) * xhat.dim(3);
  Tensor gx = Tensor::zeros_like(xhat);
  const double inv_c = 1.0 / static_cast<double>(c);
  for (std::size_t i = 0; i < n; ++i) {
    const double* nrm = xhat.data() + i * c * hw;
    const double* g = grad_out.data() + i * c * hw;
    double* dst = gx.data() + i * c * hw;
    for (std::size_t p = 0; p < hw; ++p) {
      double mean_g = 0.0, mean_gx = 0.0;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double gh = g[ch * hw + p] * gamma_->value[ch];
        mean_g += gh;
        mean_gx += gh * nrm[ch * hw + p];
      }
      mean_g *= inv_c;
      mean_gx *= inv_c;
      const double inv = inv_std_[i * hw + p];
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double gh = g[ch * hw + p] * gamma_->value[ch];
        dst[ch * hw + p] = inv * (gh - mean_g - nrm[ch * hw + p] * mean_gx);
      }
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      double sg = 0.0, sb = 0.0;
      for (std::size_t p = 0; p < hw; ++p) {
        sg += g[ch * hw + p] * nrm[ch * hw + p];
        sb += g[ch * hw + p];
      }
      gamma_->grad[ch] += sg;
      beta_->grad[ch] += sb;
    }
  }
  normalized_.reset();
  return gx;
}

// ---------------------------------------------------------------- GatedConv

GatedConv::GatedConv(ParamStore& store, const std::string& prefix, std::size_t channels, std::size_t hidden,
                     const RngStream& init)
    : conv_in_(store, prefix + ".conv_in", 2 * channels, hidden, 3, init),
      conv_out_(store, prefix + ".conv_out", 2 * hidden, 2 * channels, 1, init) {}

Tensor GatedConv::forward(const Tensor& x) {
  Tensor h = conv_out_.forward(elu_mid_.forward(conv_in_.forward(elu_in_.forward(x))));
  Tensor value, gate;
  split_samples(h, x.per_sample(), value, gate);
  for (auto& g : gate.values()) g = sigmoid(g);
  Tensor y = x;
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] += value[i] * gate[i];
  value_ = std::move(value);
  gate_ = std::move(gate);
  return y;
}

Tensor GatedConv::backward(const Tensor& grad_out) {
  const Tensor& value = cached(value_, kind());
  const Tensor& gate = *gate_;
  Tensor g_value = Tensor::zeros_like(value), g_gate = Tensor::zeros_like(gate);
  for (std::size_t i = 0; i < grad_out.numel(); ++i) {
    g_value[i] = grad_out[i] * gate[i];
    g_gate[i] = grad_out[i] * value[i] * gate[i] * (1.0 - gate[i]);
  }
  Tensor gx = elu_in_.backward(conv_in_.backward(elu_mid_.backward(conv_out_.backward(concat_samples(g_value, g_gate)))));
  for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += grad_out[i];
  value_.reset();
  gate_.reset();
  return gx;
}

// ---------------------------------------------------------------- GatedConvNet

GatedConvNet::GatedConvNet(ParamStore& store, const std::string& prefix, std::size_t in_channels, std::size_t hidden,
                           std::size_t out_channels, std::size_t blocks, const RngStream& init) {
  layers_.push_back(std::make_unique<Conv2d>(store, prefix + ".conv_in", in_channels, hidden, 3, init));
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::string p = prefix + ".block" + std::to_string(b);
    layers_.push_back(std::make_unique<GatedConv>(store, p + ".gated", hidden, hidden, init));
    layers_.push_back(std::make_unique<LayerNormChannels>(store, p + ".norm", hidden));
  }
  layers_.push_back(std::make_unique<ConcatElu>());
  layers_.push_back(std::make_unique<Conv2d>(store, prefix + ".conv_out", 2 * hidden, out_channels, 3, init, true));
}

Tensor GatedConvNet::forward(const Tensor& x) {
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h);
  return h;
}

Tensor GatedConvNet::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out, const RngStream& init,
               bool zero_init) {
  const std::string wname = prefix + ".weight", bname = prefix + ".bias";
  weight_ = &store.add(wname, zero_init ? Tensor({out, in}) : uniform_init({out, in}, in, init, wname));
  bias_ = &store.add(bname, zero_init ? Tensor({out}) : uniform_init({out}, in, init, bname));
}

Tensor Linear::forward(const Tensor& x) {
  require_rank(x, 2, kind());
  const std::size_t n = x.dim(0), in = weight_->value.dim(1), out = weight_->value.dim(0);
  if (x.dim(1) != in) {
    throw ShapeError("linear: input width " + std::to_string(x.dim(1)) + " != " + std::to_string(in));
  }
  Tensor y({n, out});
  MapMat ym(y.data(), n, out);
  ym.noalias() = ConstMapMat(x.data(), n, in) * ConstMapMat(weight_->value.data(), out, in).transpose();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < out; ++o) y[i * out + o] += bias_->value[o];
  }
  input_ = x;
  return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
  const Tensor& x = cached(input_, kind());
  const std::size_t n = x.dim(0), in = weight_->value.dim(1), out = weight_->value.dim(0);
  ConstMapMat g(grad_out.data(), n, out);
  MapMat(weight_->grad.data(), out, in).noalias() += g.transpose() * ConstMapMat(x.data(), n, in);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < out; ++o) bias_->grad[o] += grad_out[i * out + o];
  }
  Tensor gx({n, in});
  MapMat(gx.data(), n, in).noalias() = g * ConstMapMat(weight_->value.data(), out, in);
  input_.reset();
  return gx;
}

// ---------------------------------------------------------------- Tanh

Tensor Tanh::forward(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.values()) v = std::tanh(v);
  output_ = y;
  return y;
}

Tensor Tanh::backward(const Tensor& grad_out) {
  const Tensor& y = cached(output_, kind());
  Tensor gx = grad_out;
  for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] *= 1.0 - y[i] * y[i];
  output_.reset();
  return gx;
}

// ---------------------------------------------------------------- Sequential

Tensor Sequential::forward(const Tensor& x) {
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h);
  return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

ModulePtr make_mlp(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden,
                   std::size_t out, std::size_t depth, const RngStream& init) {
  if (depth == 0) throw ConfigError("mlp depth must be at least 1");
  auto seq = std::make_unique<Sequential>();
  std::size_t width = in;
  for (std::size_t l = 0; l < depth; ++l) {
    seq->push_back(std::make_unique<Linear>(store, prefix + ".fc" + std::to_string(l), width, hidden, init));
    seq->push_back(std::make_unique<Tanh>());
    width = hidden;
  }
  seq->push_back(std::make_unique<Linear>(store, prefix + ".fc_out", width, out, init, true));
  return seq;
}

// ---------------------------------------------------------------- registry

std::vector<BlockInfo> block_registry() {
  return {
      {"conv2d", "dW += g * im2col(x)^T per sample; db += sum_hw g; dx = col2im(W^T g)"},
      {"concat_elu", "dx = g_pos * elu'(x) - g_neg * elu'(-x), elu'(a) = 1 (a>0) else e^a"},
      {"layer_norm_channels", "dx = inv_std * (gh - mean_c(gh) - xhat * mean_c(gh*xhat)), gh = g*gamma"},
      {"gated_conv", "y = x + a*s(b): da = g*s(b), db = g*a*s(b)(1-s(b)), plus identity path"},
      {"gated_conv_net", "chain rule over its conv/gated/norm/elu stages in reverse"},
      {"linear", "dW += g^T x; db += sum_n g; dx = g W"},
      {"tanh", "dx = g * (1 - y^2)"},
      {"sequential", "chain rule in reverse order"},
      {"coupling", "dx = m*g + (1-m)*g*e^s + m*dnet; ds = (1-m)(g*x*e^s + g_ld); ds_raw = ds*(1-tanh^2)"},
      {"actnorm", "y = (x+b)e^l: dx = g e^l; db = sum g e^l; dl = sum g*y + g_ld"},
      {"squeeze", "permutation; gradient is the inverse permutation"},
      {"split", "dropped half scored by N(0,1): d/dz_drop = -z_drop * g_ld"},
      {"variational_dequantization", "reverse through sigmoid, conditional couplings and logit of the noise"},
      {"flow_model", "prior grad -z*c, log-det grad c per sample, transforms in reverse"},
  };
}

}  // namespace flowlhd::numerics
