#pragma once

#include <filesystem>
#include <variant>

#include "flowlhd/data/image_batch.hpp"
#include "flowlhd/numerics/tensor.hpp"

namespace flowlhd::data {

// Raw tensor file: "TNSR", version u32, dtype u8 (0 = f64, 1 = u8), rank u32,
// rank x u64 dims, row-major little-endian payload, CRC32 trailer.
inline constexpr std::uint32_t kTensorFormatVersion = 1;

enum class DType : std::uint8_t { f64 = 0, u8 = 1 };

struct U8Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<std::uint8_t> values;
};

using RawTensor = std::variant<numerics::Tensor, U8Tensor>;

std::vector<std::uint8_t> encode_tensor(const numerics::Tensor& t);
std::vector<std::uint8_t> encode_tensor(const U8Tensor& t);
RawTensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor_file(const std::filesystem::path& path, const numerics::Tensor& t);
void write_tensor_file(const std::filesystem::path& path, const ImageBatch& images);
RawTensor read_tensor_file(const std::filesystem::path& path);

// Typed readers; FormatError when the stored dtype/rank does not fit.
numerics::Tensor read_f64_tensor(const std::filesystem::path& path);
ImageBatch read_image_tensor(const std::filesystem::path& path);

}  // namespace flowlhd::data
