#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace flowlhd::numerics {

// Philox4x32-10 block function (Salmon et al. counter-based generator).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

std::uint64_t fnv1a64(std::string_view text) noexcept;
std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Counter-based random stream. Output depends only on (seed, stream id,
// position), so child streams created with split() are reproducible no matter
// when or in which order they are created.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t position() const noexcept { return position_; }

  RngStream split(std::uint64_t tag) const noexcept;
  RngStream split(std::string_view tag) const noexcept { return split(fnv1a64(tag)); }

  std::uint64_t next_u64() noexcept;
  // [0, 1) with 53 random bits.
  double uniform() noexcept;
  // (0, 1), never exactly 0 or 1.
  double uniform_open() noexcept;
  double normal() noexcept;
  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;
  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;  // index of the next 128-bit block
  std::uint64_t buffered_ = 0;
  bool has_buffered_ = false;
};

}  // namespace flowlhd::numerics
