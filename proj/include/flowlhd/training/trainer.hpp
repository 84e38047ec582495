#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flowlhd/data/dataset.hpp"
#include "flowlhd/flow/model.hpp"
#include "json.hpp"

namespace flowlhd::training {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;  // 0 disables clipping
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;  // epochs; 0 disables
  std::filesystem::path checkpoint_dir;
  double validation_fraction = 0.1;

  void validate() const;
  nlohmann::json to_json() const;
  // Starts from `base` and overrides the keys present; unknown keys raise ConfigError.
  static TrainConfig from_json(const nlohmann::json& j, const TrainConfig& base);
  static TrainConfig from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_nll = 0.0;
  double val_nll = 0.0;   // NaN without a validation split
  double seconds = 0.0;
};

struct TrainHistory {
  double initial_val_nll = 0.0;  // before the first update; NaN without a validation split
  std::vector<EpochRecord> epochs;
  std::vector<std::filesystem::path> checkpoints;
  std::size_t steps = 0;
  double max_clipped_grad_norm = 0.0;  // largest post-clip global norm seen
};

// Bits/dim for images, nats per point for vectors.
double nll_from_log_probs(std::span<const double> log_probs, std::size_t dims, bool image);
double nll_loss(flow::FlowModel& model, const numerics::Tensor& points);
double nll_loss(flow::FlowModel& model, const data::ImageBatch& images, const numerics::Tensor& noise);

// Validation/train split: the first round(f * N) entries of the seeded
// permutation are held out. Both lists are returned in ascending order.
struct Split {
  std::vector<std::size_t> train, validation;
};
Split split_indices(std::size_t n, double validation_fraction, std::uint64_t seed);

// Mean NLL over the given samples, evaluated in chunks; image noise is keyed
// by sample id and `noise_seed`.
double evaluate_nll(flow::FlowModel& model, const data::Dataset& data, std::span<const std::size_t> indices,
                    std::size_t chunk, std::uint64_t noise_seed);

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
};

TrainHistory train(flow::FlowModel& model, const data::Dataset& data, const TrainConfig& cfg,
                   const TrainHooks& hooks = {});

// "epoch,train_nll,val_nll,seconds" rows.
std::string history_csv(const TrainHistory& h);

}  // namespace flowlhd::training
