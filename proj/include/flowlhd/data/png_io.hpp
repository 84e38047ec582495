#pragma once

#include <filesystem>

#include "flowlhd/data/dataset.hpp"

namespace flowlhd::data {

struct ImageDirOptions {
  std::size_t height = 0;  // 0: take the size of the first file
  std::size_t width = 0;
  bool resize = false;     // bilinear-resize mismatched files instead of failing
};

// Decodes every *.png in `dir` (sorted by filename) to 3-channel NCHW. Ids are
// the filenames.
Dataset load_image_dir(const std::filesystem::path& dir, const ImageDirOptions& options = {});

// Writes one PNG per image, named by id (".png" appended when missing).
void write_image_dir(const std::filesystem::path& dir, const Dataset& images);

// Single-file helpers; pixels are HWC, 8-bit, 1 or 3 channels.
struct DecodedPng {
  std::size_t height = 0, width = 0;
  std::vector<std::uint8_t> rgb;  // HWC, 3 channels
};
DecodedPng read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, std::size_t height, std::size_t width, std::size_t channels,
               std::span<const std::uint8_t> hwc);

// Loads either an image directory or a raw tensor file (u8 NCHW images or
// f64 N x D points).
Dataset load_dataset(const std::filesystem::path& path, const ImageDirOptions& options = {});

}  // namespace flowlhd::data
