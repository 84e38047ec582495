#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowlhd/errors.hpp"

namespace flowlhd::data {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept;

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
// Writes to a sibling temp file and renames, so readers never see a torn file.
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void bytes(std::string_view s) { raw(s.data(), s.size()); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  // Appends CRC32 of everything written so far.
  void seal() { u32(crc32(buf_)); }
  const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }
  std::vector<std::uint8_t> take() noexcept { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked little-endian cursor; every failure reports the offset.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::size_t limit) : bytes_(bytes), limit_(limit) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return limit_ - pos_; }

  void need(std::size_t n, std::string_view what) const {
    if (n > remaining()) {
      throw FormatError("truncated " + std::string(what) + ": need " + std::to_string(n) + " bytes, " +
                            std::to_string(remaining()) + " available",
                        pos_);
    }
  }
  std::uint8_t u8(std::string_view what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(std::string_view what) {
    std::uint32_t v;
    copy(&v, sizeof v, what);
    return v;
  }
  std::uint64_t u64(std::string_view what) {
    std::uint64_t v;
    copy(&v, sizeof v, what);
    return v;
  }
  std::string string(std::size_t n, std::string_view what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void copy(void* dst, std::size_t n, std::string_view what) {
    need(n, what);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

// Checks the trailing CRC32 over bytes[0, size-4).
void verify_crc_trailer(std::span<const std::uint8_t> bytes, std::string_view what);

}  // namespace flowlhd::data
