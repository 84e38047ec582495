#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "flowlhd/cli/config.hpp"
#include "flowlhd/data/dataset.hpp"
#include "flowlhd/flow/model.hpp"
#include "flowlhd/metrics/metrics.hpp"
#include "flowlhd/training/trainer.hpp"

namespace flowlhd::cli {

struct Context {
  std::ostream& out;
  std::ostream& err;
  // Checkpoint cache for commands that train inside the loop; nullopt disables it.
  std::optional<std::filesystem::path> cache_dir;
  bool verbose = false;
};

// FLOWLHD_CACHE_DIR, when set and non-empty.
std::optional<std::filesystem::path> cache_dir_from_env();

// CSV body plus the trailing "# config_hash=... seed=..." line.
std::string finish_csv(const std::string& body, const RunConfig& cfg);
// Writes to `path`, or to ctx.out when the path is empty.
void emit(Context& ctx, const std::filesystem::path& path, const std::string& text);

// Stable digest of a dataset's ids and contents.
std::string dataset_digest(const data::Dataset& d);

// Trains a fresh model from `seed`, or loads it from the cache when an entry
// for the same (arch, train config, seed, data digest) exists.
flow::FlowModel train_or_load(const flow::ArchSpec& arch, const training::TrainConfig& tc, const data::Dataset& data,
                              Context& ctx, std::string* cache_path = nullptr);

// Independent per-role training seeds derived from the run seed.
std::uint64_t role_seed(std::uint64_t run_seed, std::string_view role);

struct TrainArgs {
  std::filesystem::path data, out, history;
};
training::TrainHistory cmd_train(const RunConfig& cfg, const TrainArgs& args, Context& ctx);

struct FldArgs {
  std::filesystem::path real, gen, ckpt, out;
};
metrics::MetricResult cmd_fld(const RunConfig& cfg, const FldArgs& args, Context& ctx);

struct DfldArgs {
  std::filesystem::path real, gen, ckpt_dir, out;
  bool reuse_gen_ckpt = false;  // N_g is a copy of N_r
};
metrics::MetricResult cmd_dfld(const RunConfig& cfg, const DfldArgs& args, Context& ctx);

struct DistortArgs {
  std::filesystem::path in, out;
  std::string kind;
  double param = 0.0;
};
void cmd_distort(const RunConfig& cfg, const DistortArgs& args, Context& ctx);

struct Demo2dRow {
  double separation = 0.0, dfld = 0.0, mean_abs_diff = 0.0;
};
std::vector<Demo2dRow> cmd_demo2d(const RunConfig& cfg, const std::filesystem::path& out, Context& ctx);

struct SampleEfficiencyArgs {
  std::filesystem::path real, gen, ckpt, out;
};
struct SampleEfficiencyRow {
  std::size_t n = 0;
  double mean_fld = 0.0, std_fld = 0.0;
  bool degenerate = false;  // runs = 1: std reported as 0
};
std::vector<SampleEfficiencyRow> cmd_sample_efficiency(const RunConfig& cfg, const SampleEfficiencyArgs& args,
                                                       Context& ctx);
// Same protocol on precomputed likelihoods under the real-data flow.
std::vector<SampleEfficiencyRow> sample_efficiency(const std::vector<double>& ll_real, const std::vector<double>& ll_gen,
                                                   const std::vector<std::size_t>& sizes, std::size_t runs,
                                                   std::uint64_t seed);

struct MonotonicityArgs {
  std::filesystem::path real, ckpt, out;  // `real` is the held-out evaluation set
};
struct MonotonicityRow {
  double param = 0.0, fld = 0.0, mean_ll_real = 0.0, mean_ll_gen = 0.0;
};
std::vector<MonotonicityRow> cmd_monotonicity(const RunConfig& cfg, const MonotonicityArgs& args, Context& ctx);
// Same protocol on an in-memory set and model.
std::vector<MonotonicityRow> monotonicity(flow::FlowModel& model, const data::Dataset& held_out,
                                          const std::string& kind, const std::vector<double>& grid, std::uint64_t seed);

struct GenDataArgs {
  std::string kind;  // two-moons | gaussian | mixture4 | shapes
  std::size_t n = 1000;
  double noise = 0.1;       // two-moons noise sd
  double separation = 0.0;  // mixture4
  std::size_t size = 16, channels = 3;
  std::size_t levels = 256;  // shapes: intensity levels per channel
  std::size_t jitter = 0;    // shapes: uniform colour offset around each level
  std::filesystem::path out;  // *.tnsr writes a tensor file, anything else a PNG directory (shapes only)
};
void cmd_gen_data(const RunConfig& cfg, const GenDataArgs& args, Context& ctx);

}  // namespace flowlhd::cli
