#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "flowlhd/flow/model.hpp"

namespace flowlhd::flow {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (little-endian): "FLDC", u32 version, u32 header length, header JSON
// {arch, latent_order, data_initialized}, then per parameter: u32 name length,
// name, u32 rank, u64 dims, f64 data; finally CRC32 of all preceding bytes.
std::vector<std::uint8_t> encode_checkpoint(const FlowModel& model);
// `expected_arch` (e.g. "flow2d(4)") raises ArchMismatch when the stored
// architecture name differs.
FlowModel decode_checkpoint(std::span<const std::uint8_t> bytes, std::optional<std::string_view> expected_arch = {});

void save_checkpoint(const FlowModel& model, const std::filesystem::path& path);
FlowModel load_checkpoint(const std::filesystem::path& path, std::optional<std::string_view> expected_arch = {});
ArchSpec checkpoint_arch(const std::filesystem::path& path);

}  // namespace flowlhd::flow
