#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace flowlhd::flow {

class FlowModel;

// Architecture descriptor. `hidden` lists subnet widths per stage:
//   fld-multiscale: {dequant, pre-squeeze, after 1st squeeze, after split}
//   dfld-simple:    {dequant, main}
//   flow2d:         {mlp}
struct ArchSpec {
  std::string family;             // "fld-multiscale" | "dfld-simple" | "flow2d"
  std::size_t channels = 3, height = 32, width = 32;
  std::size_t dims = 2;           // flow2d input dimensionality
  std::size_t flow_layers = 0;    // flow2d coupling count
  std::vector<std::size_t> hidden;
  std::size_t gated_blocks = 3;
  std::size_t dequant_layers = 4;
  std::size_t mlp_depth = 2;
  bool variational = true;
  double clamp = 2.0;

  std::string name() const;       // "flow2d(4)" for flow2d, else family
  bool is_image() const noexcept { return family != "flow2d"; }
  std::size_t input_dims() const noexcept { return is_image() ? channels * height * width : dims; }
  void validate() const;

  nlohmann::json to_json() const;
  static ArchSpec from_json(const nlohmann::json& j);
  bool operator==(const ArchSpec&) const = default;
};

// Parses "fld-multiscale", "dfld-simple" or "flow2d(k)" and fills the default
// widths. Unknown names raise ConfigError.
ArchSpec parse_arch(std::string_view name, std::size_t channels = 3, std::size_t height = 32, std::size_t width = 32);

std::vector<std::string> known_arch_names();

FlowModel build_model(const ArchSpec& arch, std::uint64_t init_seed = 0);

}  // namespace flowlhd::flow
