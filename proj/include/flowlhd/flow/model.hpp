#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "flowlhd/data/image_batch.hpp"
#include "flowlhd/flow/arch.hpp"
#include "flowlhd/flow/dequantization.hpp"
#include "flowlhd/flow/transform.hpp"
#include "flowlhd/numerics/param_store.hpp"
#include "flowlhd/numerics/rng.hpp"

namespace flowlhd::flow {

// Factored parts in transform order, then the final latent.
struct Latent {
  std::vector<Tensor> factored;
  Tensor z;
};

struct EncodeResult {
  Latent latent;
  std::vector<double> log_det;  // includes prior terms of factored parts
};

class FlowModel {
 public:
  FlowModel(ArchSpec arch, Tensor::Shape sample_shape);
  FlowModel(FlowModel&&) noexcept = default;
  FlowModel& operator=(FlowModel&&) noexcept = default;

  const ArchSpec& arch() const noexcept { return arch_; }
  numerics::ParamStore& params() noexcept { return params_; }
  const numerics::ParamStore& params() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.scalar_count(); }

  void add(std::unique_ptr<Transform> t);
  void set_dequantizer(std::unique_ptr<Dequantizer> deq);

  bool is_image_model() const noexcept { return deq_ != nullptr; }
  Dequantizer* dequantizer() noexcept { return deq_.get(); }
  const Tensor::Shape& sample_shape() const noexcept { return shapes_.front(); }
  const Tensor::Shape& latent_shape() const noexcept { return shapes_.back(); }
  std::size_t input_dims() const noexcept;
  std::size_t transform_count() const noexcept { return transforms_.size(); }
  Transform& transform(std::size_t i) { return *transforms_.at(i); }
  // Coupling layers including those inside the dequantizer.
  std::size_t coupling_count() const noexcept;
  std::vector<std::string> summary() const;

  // Continuous-space density. x is N x sample_shape.
  EncodeResult encode(const Tensor& x);
  Tensor decode(const Latent& latent);
  std::vector<double> log_prob(const Tensor& x);
  // Image density lower bound with caller-supplied dequantization noise.
  std::vector<double> log_prob(const data::ImageBatch& x, const Tensor& noise);

  // Accumulates d/dtheta of sum_b coeff[b] * log p(x_b) into params().grad
  // and returns log p per sample.
  std::vector<double> backprop_log_prob(const Tensor& x, std::span<const double> coeff);
  std::vector<double> backprop_log_prob(const data::ImageBatch& x, const Tensor& noise, std::span<const double> coeff);

  Latent sample_latent(std::size_t n, numerics::RngStream& rng) const;
  Tensor sample(std::size_t n, numerics::RngStream& rng);
  data::ImageBatch sample_images(std::size_t n, numerics::RngStream& rng);

  // Data-dependent initialisation of ActNorm layers from a batch.
  void initialize_from_data(const Tensor& x);
  bool needs_data_init() const noexcept;
  bool data_initialized() const noexcept { return data_initialized_; }
  void set_data_initialized(bool v) noexcept { data_initialized_ = v; }

 private:
  void check_input(const Tensor& x) const;
  Tensor backward_chain(const EncodeResult& enc, std::span<const double> coeff);

  ArchSpec arch_;
  numerics::ParamStore params_;
  std::unique_ptr<Dequantizer> deq_;
  std::vector<std::unique_ptr<Transform>> transforms_;
  std::vector<Tensor::Shape> shapes_;           // per-sample shape before transform i; back() is the latent
  std::vector<Tensor::Shape> factored_shapes_;  // per factoring transform
  bool data_initialized_ = true;
};

double prior_log_pdf(std::span<const double> z) noexcept;

}  // namespace flowlhd::flow
