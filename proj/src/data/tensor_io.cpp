#include "flowlhd/data/tensor_io.hpp"

#include "flowlhd/data/binary_io.hpp"

namespace flowlhd::data {

namespace {

constexpr char kMagic[4] = {'T', 'N', 'S', 'R'};

std::vector<std::uint8_t> encode(DType dtype, std::span<const std::uint64_t> shape, const void* payload,
                                 std::size_t payload_bytes) {
  ByteWriter w;
  w.raw(kMagic, 4);
  w.u32(kTensorFormatVersion);
  w.u8(static_cast<std::uint8_t>(dtype));
  w.u32(static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) w.u64(d);
  w.raw(payload, payload_bytes);
  w.seal();
  return w.take();
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const numerics::Tensor& t) {
  std::vector<std::uint64_t> shape(t.shape().begin(), t.shape().end());
  return encode(DType::f64, shape, t.data(), t.numel() * sizeof(double));
}

std::vector<std::uint8_t> encode_tensor(const U8Tensor& t) {
  return encode(DType::u8, t.shape, t.values.data(), t.values.size());
}

RawTensor decode_tensor(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, bytes.size());
  const std::string magic = r.string(4, "magic");
  if (magic != std::string(kMagic, 4)) throw FormatError("not a raw tensor file (bad magic)", 0);
  const auto version = r.u32("version");
  if (version != kTensorFormatVersion) {
    throw FormatError("unsupported tensor format version " + std::to_string(version), 4);
  }
  const std::size_t dtype_offset = r.offset();
  const auto dtype = r.u8("dtype");
  if (dtype > 1) throw FormatError("unknown dtype code " + std::to_string(dtype), dtype_offset);
  const auto rank = r.u32("rank");
  if (rank > 16) throw FormatError("implausible tensor rank " + std::to_string(rank), dtype_offset + 1);
  std::vector<std::uint64_t> shape(rank);
  std::uint64_t count = 1;
  for (auto& d : shape) {
    d = r.u64("dims");
    count *= d;
  }
  const std::uint64_t elem = dtype == 0 ? 8 : 1;
  const std::uint64_t expected = r.offset() + count * elem + 4;
  if (expected != bytes.size()) {
    throw FormatError("tensor file size mismatch: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size()),
                      r.offset());
  }
  verify_crc_trailer(bytes, "tensor file");
  if (dtype == 0) {
    numerics::Tensor t(numerics::Tensor::Shape(shape.begin(), shape.end()));
    r.copy(t.data(), count * elem, "payload");
    return t;
  }
  U8Tensor t{shape, std::vector<std::uint8_t>(count)};
  r.copy(t.values.data(), count, "payload");
  return t;
}

void write_tensor_file(const std::filesystem::path& path, const numerics::Tensor& t) {
  write_file_bytes(path, encode_tensor(t));
}

void write_tensor_file(const std::filesystem::path& path, const ImageBatch& images) {
  write_file_bytes(path, encode_tensor(U8Tensor{{images.n, images.c, images.h, images.w}, images.pixels}));
}

RawTensor read_tensor_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.message(), e.offset());
  }
}

numerics::Tensor read_f64_tensor(const std::filesystem::path& path) {
  auto raw = read_tensor_file(path);
  if (auto* t = std::get_if<numerics::Tensor>(&raw)) return std::move(*t);
  throw FormatError(path.string() + ": expected f64 tensor, found u8", 8);
}

ImageBatch read_image_tensor(const std::filesystem::path& path) {
  auto raw = read_tensor_file(path);
  auto* t = std::get_if<U8Tensor>(&raw);
  if (!t) throw FormatError(path.string() + ": expected u8 image tensor, found f64", 8);
  if (t->shape.size() != 4) throw FormatError(path.string() + ": image tensors must be rank 4 (NCHW)", 9);
  ImageBatch b;
  b.n = t->shape[0];
  b.c = t->shape[1];
  b.h = t->shape[2];
  b.w = t->shape[3];
  b.pixels = std::move(t->values);
  return b;
}

}  // namespace flowlhd::data
