#include "flowlhd/cli/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "flowlhd/distortion/distortion.hpp"
#include "flowlhd/errors.hpp"
#include "flowlhd/numerics/rng.hpp"

namespace flowlhd::cli {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

}  // namespace

flow::ArchSpec ArchConfig::resolve(const std::vector<std::size_t>& shape) const {
  flow::ArchSpec a = flow::parse_arch(name);
  if (a.is_image()) {
    if (shape.size() != 3) throw ConfigError("architecture " + name + " needs image data, got points");
    a = flow::parse_arch(name, shape[0], shape[1], shape[2]);
  } else {
    if (shape.size() != 1) throw ConfigError("architecture " + name + " needs point data, got images");
    a.dims = shape[0];
  }
  if (hidden) a.hidden = *hidden;
  if (gated_blocks) a.gated_blocks = *gated_blocks;
  if (dequant_layers) a.dequant_layers = *dequant_layers;
  if (mlp_depth) a.mlp_depth = *mlp_depth;
  if (variational) a.variational = *variational;
  if (clamp) a.clamp = *clamp;
  a.validate();
  return a;
}

json ArchConfig::to_json() const {
  json j{{"name", name}};
  if (hidden) j["hidden"] = *hidden;
  if (gated_blocks) j["gated_blocks"] = *gated_blocks;
  if (dequant_layers) j["dequant_layers"] = *dequant_layers;
  if (mlp_depth) j["mlp_depth"] = *mlp_depth;
  if (variational) j["variational"] = *variational;
  if (clamp) j["clamp"] = *clamp;
  return j;
}

ArchConfig ArchConfig::from_json(const json& j) {
  ArchConfig a;
  if (j.is_string()) {
    a.name = j.get<std::string>();
    return a;
  }
  check_keys(j, {"name", "hidden", "gated_blocks", "dequant_layers", "mlp_depth", "variational", "clamp"}, "arch");
  const std::string w = "arch";
  if (j.contains("name")) a.name = get<std::string>(j, "name", w);
  if (j.contains("hidden")) a.hidden = get<std::vector<std::size_t>>(j, "hidden", w);
  if (j.contains("gated_blocks")) a.gated_blocks = get<std::size_t>(j, "gated_blocks", w);
  if (j.contains("dequant_layers")) a.dequant_layers = get<std::size_t>(j, "dequant_layers", w);
  if (j.contains("mlp_depth")) a.mlp_depth = get<std::size_t>(j, "mlp_depth", w);
  if (j.contains("variational")) a.variational = get<bool>(j, "variational", w);
  if (j.contains("clamp")) a.clamp = get<double>(j, "clamp", w);
  return a;
}

void RunConfig::validate() const {
  flow::parse_arch(arch.name);
  train.validate();
  if (experiment.runs == 0) throw ConfigError("experiment.runs must be >= 1");
  if (experiment.n == 0) throw ConfigError("experiment.n must be >= 1");
  for (std::size_t s : experiment.sizes)
    if (s == 0) throw ConfigError("experiment.sizes entries must be >= 1");
  distortion::parse_kind(experiment.kind);
}

json RunConfig::to_json() const {
  json t = train.to_json();
  t.erase("seed");
  return json{{"seed", seed},
              {"arch", arch.to_json()},
              {"train", t},
              {"data",
               {{"real", data.real.string()},
                {"gen", data.gen.string()},
                {"resize", data.resize},
                {"height", data.height},
                {"width", data.width}}},
              {"experiment",
               {{"separations", experiment.separations},
                {"n", experiment.n},
                {"sizes", experiment.sizes},
                {"runs", experiment.runs},
                {"kind", experiment.kind},
                {"grid", experiment.grid}}}};
}

RunConfig RunConfig::from_json(const json& j) {
  check_keys(j, {"seed", "arch", "train", "data", "experiment"}, "config");
  RunConfig c;
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed", "config");
  if (j.contains("arch")) c.arch = ArchConfig::from_json(j.at("arch"));
  if (j.contains("train")) {
    const json& t = j.at("train");
    if (t.is_object() && t.contains("seed")) throw ConfigError("train.seed is not accepted; set the top-level seed");
    c.train = training::TrainConfig::from_json(t);
  }
  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, {"real", "gen", "resize", "height", "width"}, "data");
    if (d.contains("real")) c.data.real = get<std::string>(d, "real", "data");
    if (d.contains("gen")) c.data.gen = get<std::string>(d, "gen", "data");
    if (d.contains("resize")) c.data.resize = get<bool>(d, "resize", "data");
    if (d.contains("height")) c.data.height = get<std::size_t>(d, "height", "data");
    if (d.contains("width")) c.data.width = get<std::size_t>(d, "width", "data");
  }
  if (j.contains("experiment")) {
    const json& e = j.at("experiment");
    check_keys(e, {"separations", "n", "sizes", "runs", "kind", "grid"}, "experiment");
    const std::string w = "experiment";
    if (e.contains("separations")) c.experiment.separations = get<std::vector<double>>(e, "separations", w);
    if (e.contains("n")) c.experiment.n = get<std::size_t>(e, "n", w);
    if (e.contains("sizes")) c.experiment.sizes = get<std::vector<std::size_t>>(e, "sizes", w);
    if (e.contains("runs")) c.experiment.runs = get<std::size_t>(e, "runs", w);
    if (e.contains("kind")) c.experiment.kind = get<std::string>(e, "kind", w);
    if (e.contains("grid")) c.experiment.grid = get<std::vector<double>>(e, "grid", w);
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void RunConfig::resolve_paths() {
  if (!data.real.empty()) data.real = std::filesystem::absolute(data.real).lexically_normal();
  if (!data.gen.empty()) data.gen = std::filesystem::absolute(data.gen).lexically_normal();
  if (!train.checkpoint_dir.empty()) train.checkpoint_dir = std::filesystem::absolute(train.checkpoint_dir).lexically_normal();
}

std::string RunConfig::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(numerics::fnv1a64(to_json().dump())));
  return buf;
}

}  // namespace flowlhd::cli
