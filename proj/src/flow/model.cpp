#include "flowlhd/flow/model.hpp"

#include <cmath>

#include "flowlhd/errors.hpp"
#include "flowlhd/flow/actnorm.hpp"
#include "flowlhd/flow/split.hpp"

namespace flowlhd::flow {

double prior_log_pdf(std::span<const double> z) noexcept { return standard_normal_log_pdf(z); }

FlowModel::FlowModel(ArchSpec arch, Tensor::Shape sample_shape) : arch_(std::move(arch)) {
  shapes_.push_back(std::move(sample_shape));
}

void FlowModel::add(std::unique_ptr<Transform> t) {
  const Tensor::Shape out = t->output_shape(shapes_.back());
  if (t->factors_out()) {
    const auto* s = dynamic_cast<const Split*>(t.get());
    factored_shapes_.push_back(s ? s->factored_shape(shapes_.back()) : out);
  }
  if (dynamic_cast<const ActNorm*>(t.get())) data_initialized_ = false;
  shapes_.push_back(out);
  transforms_.push_back(std::move(t));
}

void FlowModel::set_dequantizer(std::unique_ptr<Dequantizer> deq) {
  if (transforms_.size() > 0) throw StateError("dequantizer must be set before transforms are added");
  if (deq && deq->sample_shape() != shapes_.front())
    throw ShapeError("dequantizer shape " + numerics::shape_string(deq->sample_shape()) + " differs from model input " +
                     numerics::shape_string(shapes_.front()));
  deq_ = std::move(deq);
}

std::size_t FlowModel::input_dims() const noexcept { return numerics::shape_numel(shapes_.front()); }

std::size_t FlowModel::coupling_count() const noexcept {
  std::size_t n = deq_ ? deq_->layer_count() : 0;
  for (const auto& t : transforms_) n += t->is_coupling() ? 1 : 0;
  return n;
}

std::vector<std::string> FlowModel::summary() const {
  std::vector<std::string> lines;
  lines.push_back("arch " + arch_.name() + " input " + numerics::shape_string(shapes_.front()));
  std::size_t idx = 0;
  if (deq_) {
    if (deq_->mode() == DequantMode::uniform) lines.push_back("[" + std::to_string(idx++) + "] uniform dequantization");
    for (std::size_t i = 0; i < deq_->layer_count(); ++i)
      lines.push_back("[" + std::to_string(idx++) + "] " + deq_->layer(i).describe());
  }
  for (std::size_t i = 0; i < transforms_.size(); ++i)
    lines.push_back("[" + std::to_string(idx++) + "] " + transforms_[i]->describe() + " -> " +
                    numerics::shape_string(shapes_[i + 1]));
  lines.push_back("coupling layers " + std::to_string(coupling_count()));
  lines.push_back("parameters " + std::to_string(parameter_count()));
  return lines;
}

void FlowModel::check_input(const Tensor& x) const {
  const Tensor::Shape& s = shapes_.front();
  bool ok = x.rank() == s.size() + 1;
  for (std::size_t a = 0; ok && a < s.size(); ++a) ok = x.dim(a + 1) == s[a];
  if (!ok)
    throw ShapeError("model expects N x " + numerics::shape_string(s) + " input, got " + numerics::shape_string(x.shape()));
}

EncodeResult FlowModel::encode(const Tensor& x) {
  check_input(x);
  EncodeResult r;
  r.log_det.assign(x.dim(0), 0.0);
  Tensor h = x;
  for (auto& t : transforms_) {
    TransformResult step = t->forward(h);
    for (std::size_t b = 0; b < r.log_det.size(); ++b) r.log_det[b] += step.log_det[b];
    if (t->factors_out()) r.latent.factored.push_back(std::move(step.factored));
    h = std::move(step.output);
  }
  r.latent.z = std::move(h);
  for (double v : r.log_det)
    if (!std::isfinite(v)) throw NumericsError("non-finite log-determinant");
  return r;
}

Tensor FlowModel::decode(const Latent& latent) {
  if (latent.factored.size() != factored_shapes_.size())
    throw ShapeError("latent carries " + std::to_string(latent.factored.size()) + " factored parts, model needs " +
                     std::to_string(factored_shapes_.size()));
  Tensor h = latent.z;
  std::size_t f = latent.factored.size();
  for (std::size_t i = transforms_.size(); i-- > 0;) {
    const Tensor* fac = nullptr;
    if (transforms_[i]->factors_out()) fac = &latent.factored[--f];
    h = transforms_[i]->inverse(h, fac);
  }
  numerics::require_finite(h, "decoded sample");
  return h;
}

std::vector<double> FlowModel::log_prob(const Tensor& x) {
  EncodeResult enc = encode(x);
  std::vector<double> lp(enc.log_det);
  for (std::size_t b = 0; b < lp.size(); ++b) lp[b] += prior_log_pdf(enc.latent.z.sample(b));
  return lp;
}

std::vector<double> FlowModel::log_prob(const data::ImageBatch& x, const Tensor& noise) {
  if (!deq_) throw ConfigError("model " + arch_.name() + " takes continuous vectors, not images");
  DequantOutput dq = deq_->forward(x, noise);
  std::vector<double> lp = log_prob(dq.continuous);
  for (std::size_t b = 0; b < lp.size(); ++b) lp[b] += dq.log_correction[b];
  return lp;
}

Tensor FlowModel::backward_chain(const EncodeResult& enc, std::span<const double> coeff) {
  const Tensor& z = enc.latent.z;
  const std::size_t d = z.per_sample();
  Tensor g(z.shape());
  for (std::size_t b = 0; b < z.dim(0); ++b)
    for (std::size_t i = 0; i < d; ++i) g[b * d + i] = -z[b * d + i] * coeff[b];
  for (std::size_t i = transforms_.size(); i-- > 0;) g = transforms_[i]->backward(g, coeff);
  return g;
}

std::vector<double> FlowModel::backprop_log_prob(const Tensor& x, std::span<const double> coeff) {
  if (coeff.size() != x.dim(0)) throw ShapeError("one coefficient per sample required");
  EncodeResult enc = encode(x);
  std::vector<double> lp(enc.log_det);
  for (std::size_t b = 0; b < lp.size(); ++b) lp[b] += prior_log_pdf(enc.latent.z.sample(b));
  backward_chain(enc, coeff);
  return lp;
}

std::vector<double> FlowModel::backprop_log_prob(const data::ImageBatch& x, const Tensor& noise,
                                                 std::span<const double> coeff) {
  if (!deq_) throw ConfigError("model " + arch_.name() + " takes continuous vectors, not images");
  if (coeff.size() != x.n) throw ShapeError("one coefficient per sample required");
  DequantOutput dq = deq_->forward(x, noise);
  EncodeResult enc = encode(dq.continuous);
  std::vector<double> lp(enc.log_det);
  for (std::size_t b = 0; b < lp.size(); ++b) lp[b] += prior_log_pdf(enc.latent.z.sample(b)) + dq.log_correction[b];
  const Tensor g = backward_chain(enc, coeff);
  deq_->backward(g, coeff);
  return lp;
}

Latent FlowModel::sample_latent(std::size_t n, numerics::RngStream& rng) const {
  auto draw = [&](const Tensor::Shape& s) {
    Tensor::Shape full = s;
    full.insert(full.begin(), n);
    Tensor t(full);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.normal();
    return t;
  };
  Latent lat;
  for (const auto& s : factored_shapes_) lat.factored.push_back(draw(s));
  lat.z = draw(shapes_.back());
  return lat;
}

Tensor FlowModel::sample(std::size_t n, numerics::RngStream& rng) { return decode(sample_latent(n, rng)); }

data::ImageBatch FlowModel::sample_images(std::size_t n, numerics::RngStream& rng) {
  if (!deq_) throw ConfigError("model " + arch_.name() + " does not produce images");
  return Dequantizer::quantize(sample(n, rng));
}

void FlowModel::initialize_from_data(const Tensor& x) {
  check_input(x);
  Tensor h = x;
  for (auto& t : transforms_) {
    if (auto* an = dynamic_cast<ActNorm*>(t.get())) an->initialize(h);
    h = t->forward(h).output;
  }
  data_initialized_ = true;
}

bool FlowModel::needs_data_init() const noexcept { return !data_initialized_; }

}  // namespace flowlhd::flow
