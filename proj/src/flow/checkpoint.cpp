#include "flowlhd/flow/checkpoint.hpp"

#include <map>

#include "flowlhd/data/binary_io.hpp"
#include "flowlhd/errors.hpp"

namespace flowlhd::flow {

namespace {

constexpr char kMagic[4] = {'F', 'L', 'D', 'C'};
constexpr const char* kLatentOrder = "factored parts in transform order, then final latent";

struct Block {
  std::string name;
  Tensor::Shape shape;
  std::size_t data_offset;
};

struct Parsed {
  nlohmann::json header;
  std::vector<Block> blocks;
};

Parsed parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("not a checkpoint file (bad magic)", 0);
  if (bytes.size() < 8) throw FormatError("truncated checkpoint version field", 4);
  data::ByteReader r(bytes, bytes.size() >= 12 ? bytes.size() - 4 : bytes.size());
  r.string(4, "magic");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")",
                      4);
  const std::size_t header_len = r.u32("header length");
  const std::size_t header_at = r.offset();
  Parsed p;
  try {
    p.header = nlohmann::json::parse(r.string(header_len, "header"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what(), header_at);
  }
  while (r.remaining() > 0) {
    Block b;
    const std::size_t name_len = r.u32("parameter name length");
    b.name = r.string(name_len, "parameter name");
    const std::uint32_t rank = r.u32("parameter rank");
    if (rank > 8) throw FormatError("implausible rank " + std::to_string(rank) + " for " + b.name, r.offset() - 4);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      b.shape.push_back(r.u64("parameter dims"));
      if (b.shape.back() > (std::size_t{1} << 32)) throw FormatError("implausible dimension for " + b.name, r.offset() - 8);
      count *= b.shape.back();
    }
    b.data_offset = r.offset();
    r.need(count * sizeof(double), "parameter data for " + b.name);
    r.string(count * sizeof(double), "parameter data");
    p.blocks.push_back(std::move(b));
  }
  return p;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const FlowModel& model) {
  data::ByteWriter w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  const nlohmann::json header{{"arch", model.arch().to_json()},
                              {"latent_order", kLatentOrder},
                              {"data_initialized", model.data_initialized()}};
  const std::string h = header.dump();
  w.u32(static_cast<std::uint32_t>(h.size()));
  w.bytes(h);
  model.params().for_each([&](const numerics::Parameter& p) {
    w.u32(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name);
    w.u32(static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) w.u64(d);
    w.raw(p.value.data(), p.value.numel() * sizeof(double));
  });
  w.seal();
  return w.take();
}

FlowModel decode_checkpoint(std::span<const std::uint8_t> bytes, std::optional<std::string_view> expected_arch) {
  Parsed p = parse(bytes);
  data::verify_crc_trailer(bytes, "checkpoint");

  ArchSpec arch;
  try {
    arch = ArchSpec::from_json(p.header.at("arch"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header lacks an architecture: ") + e.what(), 12);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint architecture is invalid: ") + e.what(), 12);
  }
  if (expected_arch && *expected_arch != arch.name())
    throw ArchMismatch("checkpoint holds " + arch.name() + ", expected " + std::string(*expected_arch));

  FlowModel model = build_model(arch);
  if (p.blocks.size() != model.params().size())
    throw FormatError("checkpoint has " + std::to_string(p.blocks.size()) + " parameter blocks, " + arch.name() +
                          " needs " + std::to_string(model.params().size()),
                      12);
  for (const Block& b : p.blocks) {
    numerics::Parameter* param = model.params().find(b.name);
    if (!param) throw FormatError("unexpected parameter " + b.name, b.data_offset);
    if (param->value.shape() != b.shape)
      throw FormatError("parameter " + b.name + " has shape " + numerics::shape_string(b.shape) + ", expected " +
                            numerics::shape_string(param->value.shape()),
                        b.data_offset);
    std::memcpy(param->value.data(), bytes.data() + b.data_offset, param->value.numel() * sizeof(double));
  }
  model.set_data_initialized(p.header.value("data_initialized", true));
  return model;
}

void save_checkpoint(const FlowModel& model, const std::filesystem::path& path) {
  data::write_file_bytes(path, encode_checkpoint(model));
}

FlowModel load_checkpoint(const std::filesystem::path& path, std::optional<std::string_view> expected_arch) {
  const auto bytes = data::read_file_bytes(path);
  try {
    return decode_checkpoint(bytes, expected_arch);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.message(), e.offset());
  }
}

ArchSpec checkpoint_arch(const std::filesystem::path& path) {
  const auto bytes = data::read_file_bytes(path);
  try {
    Parsed p = parse(bytes);
    return ArchSpec::from_json(p.header.at("arch"));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.message(), e.offset());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": checkpoint header lacks an architecture", 12);
  }
}

}  // namespace flowlhd::flow
