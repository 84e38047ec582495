#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flowlhd/data/png_io.hpp"
#include "flowlhd/flow/arch.hpp"
#include "flowlhd/training/trainer.hpp"
#include "json.hpp"

namespace flowlhd::cli {

// Architecture by name plus optional overrides of the default widths.
struct ArchConfig {
  std::string name = "flow2d(6)";
  std::optional<std::vector<std::size_t>> hidden;
  std::optional<std::size_t> gated_blocks, dequant_layers, mlp_depth;
  std::optional<bool> variational;
  std::optional<double> clamp;

  // Fills the input geometry from a dataset's per-sample shape ({C,H,W} or {D}).
  flow::ArchSpec resolve(const std::vector<std::size_t>& sample_shape) const;
  nlohmann::json to_json() const;
  static ArchConfig from_json(const nlohmann::json& j);  // a bare string is accepted as the name
};

struct DataConfig {
  std::filesystem::path real, gen;
  bool resize = false;
  std::size_t height = 0, width = 0;

  data::ImageDirOptions image_options() const { return {height, width, resize}; }
};

struct ExperimentConfig {
  std::vector<double> separations{0.0, 0.4, 0.7, 1.0, 1.2, 1.35};
  std::size_t n = 20000;  // points per set in the 2D demo
  std::vector<std::size_t> sizes{25, 50, 100, 200, 500};
  std::size_t runs = 10;
  std::string kind = "gaussian_noise";
  std::vector<double> grid{0.0, 0.01, 0.05, 0.1, 0.2};
};

// One JSON document per run. The top-level seed is the only seed: training,
// dequantization noise and distortion streams are all derived from it.
struct RunConfig {
  std::uint64_t seed = 0;
  ArchConfig arch;
  training::TrainConfig train;
  DataConfig data;
  ExperimentConfig experiment;

  void validate() const;
  nlohmann::json to_json() const;
  // Unknown keys anywhere raise ConfigError.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);

  // Makes data paths absolute against the current directory.
  void resolve_paths();
  // 16 hex digits of FNV-1a over the canonical JSON form.
  std::string hash() const;
};

}  // namespace flowlhd::cli
