#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowlhd/data/dataset.hpp"
#include "flowlhd/flow/model.hpp"
#include "json.hpp"

namespace flowlhd::metrics {

// Log-likelihoods are total nats per sample throughout.
inline constexpr const char* kLikelihoodUnits = "nats_total_per_sample";

struct LikelihoodTable {
  std::vector<std::string> ids;
  std::vector<double> ll_r;
  std::optional<std::vector<double>> ll_g;

  void validate() const;  // DataError on non-finite entries, duplicate ids or ragged columns
  std::string csv() const;
};

struct MetricResult {
  std::string metric;  // "FLD" | "D-FLD"
  double value = 0.0;
  std::size_t n_real = 0, n_gen = 0;
  double mean_ll_gen = 0.0, mean_ll_real = 0.0;  // under the real-data flow
  std::uint64_t seed = 0;
  std::vector<std::string> checkpoints;
  std::optional<double> mean_abs_diff;  // D-FLD only: m before the log

  nlohmann::json to_json() const;
};

// Per-sample log-likelihood in dataset order. Image noise comes from
// (noise_seed, sample id), so it does not depend on batching.
std::vector<double> evaluate_log_likelihoods(flow::FlowModel& model, const data::Dataset& set, std::uint64_t noise_seed,
                                             std::size_t chunk = 64);

// |L_r(x) - L_g(x)| per sample of `set`, both flows seeing identical noise.
std::vector<double> per_image_distance(flow::FlowModel& flow_r, flow::FlowModel& flow_g, const data::Dataset& set,
                                       std::uint64_t noise_seed);

double dfld_from_distances(std::span<const double> distances);
// FLD from precomputed likelihoods under the real-data flow.
double fld_from_likelihoods(std::span<const double> ll_real, std::span<const double> ll_gen);

struct DfldDetail {
  MetricResult result;
  LikelihoodTable real, gen;
};

DfldDetail dfld_detailed(flow::FlowModel& flow_r, flow::FlowModel& flow_g, const data::Dataset& real,
                         const data::Dataset& gen, std::uint64_t noise_seed);
MetricResult dfld(flow::FlowModel& flow_r, flow::FlowModel& flow_g, const data::Dataset& real, const data::Dataset& gen,
                  std::uint64_t noise_seed);
MetricResult fld(flow::FlowModel& flow_r, const data::Dataset& real, const data::Dataset& gen, std::uint64_t noise_seed);

// ConfigError when the flow cannot evaluate the set (kind or shape differ).
void require_compatible(const flow::FlowModel& model, const data::Dataset& set);

}  // namespace flowlhd::metrics
