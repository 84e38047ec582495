#include "flowlhd/flow/arch.hpp"

#include <charconv>
#include <set>

#include "flowlhd/errors.hpp"
#include "flowlhd/flow/actnorm.hpp"
#include "flowlhd/flow/coupling.hpp"
#include "flowlhd/flow/model.hpp"
#include "flowlhd/flow/split.hpp"
#include "flowlhd/flow/squeeze.hpp"
#include "flowlhd/numerics/layers.hpp"

namespace flowlhd::flow {

namespace {

std::size_t expected_widths(const std::string& family) {
  if (family == "fld-multiscale") return 4;
  if (family == "dfld-simple") return 2;
  return 1;
}

}  // namespace

std::vector<std::string> known_arch_names() { return {"fld-multiscale", "dfld-simple", "flow2d(k)"}; }

std::string ArchSpec::name() const {
  return family == "flow2d" ? "flow2d(" + std::to_string(flow_layers) + ")" : family;
}

void ArchSpec::validate() const {
  if (family != "fld-multiscale" && family != "dfld-simple" && family != "flow2d")
    throw ConfigError("unknown architecture family '" + family + "'");
  if (hidden.size() != expected_widths(family))
    throw ConfigError(name() + " needs " + std::to_string(expected_widths(family)) + " hidden widths, got " +
                      std::to_string(hidden.size()));
  for (std::size_t h : hidden)
    if (h == 0) throw ConfigError("hidden widths must be positive");
  if (!(clamp > 0.0)) throw ConfigError("clamp must be positive");
  if (is_image()) {
    if (channels == 0 || height == 0 || width == 0) throw ConfigError("image dimensions must be positive");
    if (family == "fld-multiscale" && (height % 4 != 0 || width % 4 != 0))
      throw ConfigError("fld-multiscale needs height and width divisible by 4");
    if (variational && dequant_layers == 0) throw ConfigError("variational dequantization needs at least one layer");
  } else {
    if (dims < 2) throw ConfigError("flow2d needs at least 2 input dimensions");
    if (mlp_depth == 0) throw ConfigError("mlp_depth must be at least 1");
  }
}

nlohmann::json ArchSpec::to_json() const {
  return nlohmann::json{{"family", family},
                        {"channels", channels},
                        {"height", height},
                        {"width", width},
                        {"dims", dims},
                        {"flow_layers", flow_layers},
                        {"hidden", hidden},
                        {"gated_blocks", gated_blocks},
                        {"dequant_layers", dequant_layers},
                        {"mlp_depth", mlp_depth},
                        {"variational", variational},
                        {"clamp", clamp}};
}

ArchSpec ArchSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("architecture descriptor must be a JSON object");
  static const std::set<std::string> keys{"family",       "channels",       "height",    "width",
                                          "dims",         "flow_layers",    "hidden",    "gated_blocks",
                                          "dequant_layers", "mlp_depth",    "variational", "clamp"};
  for (const auto& [k, _] : j.items())
    if (!keys.count(k)) throw ConfigError("unknown architecture key '" + k + "'");
  if (!j.contains("family")) throw ConfigError("architecture descriptor lacks 'family'");
  ArchSpec a;
  try {
    a.family = j.at("family").get<std::string>();
    a = parse_arch(a.family == "flow2d" ? "flow2d(" + std::to_string(j.value("flow_layers", std::size_t{0})) + ")"
                                        : a.family,
                   j.value("channels", a.channels), j.value("height", a.height), j.value("width", a.width));
    a.dims = j.value("dims", a.dims);
    if (j.contains("hidden")) a.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    a.gated_blocks = j.value("gated_blocks", a.gated_blocks);
    a.dequant_layers = j.value("dequant_layers", a.dequant_layers);
    a.mlp_depth = j.value("mlp_depth", a.mlp_depth);
    a.variational = j.value("variational", a.variational);
    a.clamp = j.value("clamp", a.clamp);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad architecture descriptor: ") + e.what());
  }
  a.validate();
  return a;
}

ArchSpec parse_arch(std::string_view name, std::size_t channels, std::size_t height, std::size_t width) {
  ArchSpec a;
  a.channels = channels;
  a.height = height;
  a.width = width;
  if (name == "fld-multiscale") {
    a.family = "fld-multiscale";
    a.hidden = {16, 32, 48, 64};
  } else if (name == "dfld-simple") {
    a.family = "dfld-simple";
    a.hidden = {16, 32};
  } else if (name.starts_with("flow2d(") && name.ends_with(")")) {
    const std::string_view digits = name.substr(7, name.size() - 8);
    std::size_t k = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (digits.empty() || ec != std::errc() || p != digits.data() + digits.size())
      throw ConfigError("bad flow2d layer count in '" + std::string(name) + "'");
    a.family = "flow2d";
    a.flow_layers = k;
    a.hidden = {64};
  } else {
    throw ConfigError("unknown architecture '" + std::string(name) + "'; expected fld-multiscale, dfld-simple or flow2d(k)");
  }
  a.validate();
  return a;
}

FlowModel build_model(const ArchSpec& arch, std::uint64_t init_seed) {
  arch.validate();
  const numerics::RngStream init = numerics::RngStream(init_seed).split("init");
  if (!arch.is_image()) {
    FlowModel m(arch, {arch.dims});
    for (std::size_t l = 0; l < arch.flow_layers; ++l) {
      const std::string p = "flow.layer" + std::to_string(l);
      m.add(std::make_unique<ActNorm>(m.params(), p + ".actnorm", arch.dims));
      auto net = numerics::make_mlp(m.params(), p + ".net", arch.dims, arch.hidden[0], 2 * arch.dims, arch.mlp_depth, init);
      m.add(std::make_unique<CouplingLayer>(coordinate_mask(arch.dims, static_cast<int>(l % 2)), std::move(net),
                                            arch.clamp));
    }
    return m;
  }

  const std::size_t c = arch.channels, h = arch.height, w = arch.width;
  FlowModel m(arch, {c, h, w});
  if (arch.variational)
    m.set_dequantizer(std::make_unique<Dequantizer>(m.params(), "dequant", c, h, w, arch.dequant_layers, arch.hidden[0],
                                                    arch.gated_blocks, init, arch.clamp));
  else
    m.set_dequantizer(std::make_unique<Dequantizer>(c, h, w));

  std::size_t layer = 0;
  auto coupling = [&](bool checker, std::size_t ch, std::size_t hh, std::size_t ww, std::size_t hidden) {
    const std::string p = "flow.layer" + std::to_string(layer);
    const int parity = static_cast<int>(layer % 2);
    auto net = std::make_unique<numerics::GatedConvNet>(m.params(), p + ".net", ch, hidden, 2 * ch, arch.gated_blocks, init);
    Mask mask = checker ? checkerboard_mask(ch, hh, ww, parity) : channel_mask(ch, hh, ww, parity);
    m.add(std::make_unique<CouplingLayer>(std::move(mask), std::move(net), arch.clamp));
    ++layer;
  };

  if (arch.family == "dfld-simple") {
    for (int i = 0; i < 8; ++i) coupling(true, c, h, w, arch.hidden[1]);
    return m;
  }
  for (int i = 0; i < 2; ++i) coupling(true, c, h, w, arch.hidden[1]);
  m.add(std::make_unique<Squeeze>());
  for (int i = 0; i < 2; ++i) coupling(false, 4 * c, h / 2, w / 2, arch.hidden[2]);
  m.add(std::make_unique<Squeeze>());
  m.add(std::make_unique<Split>());
  for (int i = 0; i < 4; ++i) coupling(false, 8 * c, h / 4, w / 4, arch.hidden[3]);
  return m;
}

}  // namespace flowlhd::flow
