#include <set>
#include <chrono>
#include <cmath>

#include "doctest.h"
#include "flowlhd/data/binary_io.hpp"
#include "flowlhd/data/dataset.hpp"
#include "flowlhd/data/png_io.hpp"
#include "flowlhd/data/synthetic.hpp"
#include "flowlhd/data/tensor_io.hpp"
#include "flowlhd/errors.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace flowlhd;
using namespace flowlhd::data;
using numerics::RngStream;
using numerics::Tensor;

namespace {

void write_rgb_png(const std::filesystem::path& p, std::size_t h, std::size_t w, std::uint8_t base) {
  std::vector<std::uint8_t> px(h * w * 3);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(base + i % 7);
  write_png(p, h, w, 3, px);
}

struct Moments {
  double mean[2] = {0, 0};
  double cov[2][2] = {{0, 0}, {0, 0}};
};

Moments moments(const Tensor& pts) {
  Moments m;
  const std::size_t n = pts.dim(0);
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < 2; ++a) m.mean[a] += pts[i * 2 + a] / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        m.cov[a][b] += (pts[i * 2 + a] - m.mean[a]) * (pts[i * 2 + b] - m.mean[b]) / static_cast<double>(n - 1);
  return m;
}

}  // namespace

TEST_CASE("load_image_dir reads sorted PNGs as NCHW") {
  oracle::TempDir dir("png");
  write_rgb_png(dir / "c.png", 32, 32, 30);
  write_rgb_png(dir / "a.png", 32, 32, 10);
  write_rgb_png(dir / "b.png", 32, 32, 20);
  const Dataset ds = load_image_dir(dir.path(), {32, 32, false});
  REQUIRE(ds.size() == 3);
  CHECK(ds.ids() == std::vector<std::string>{"a.png", "b.png", "c.png"});
  CHECK(ds.images().c == 3);
  CHECK(ds.images().h == 32);
  // HWC pixel (0,0) channel 1 is base + 1; image "b" has base 20.
  CHECK(ds.images().at(1, 1, 0, 0) == 21);
  CHECK(ds.images().at(1, 0, 0, 1) == 20 + 3 % 7);
}

TEST_CASE("grayscale PNGs are expanded to three channels") {
  oracle::TempDir dir("gray");
  std::vector<std::uint8_t> px(4 * 4, 77);
  write_png(dir / "g.png", 4, 4, 1, px);
  const Dataset ds = load_image_dir(dir.path());
  CHECK(ds.images().c == 3);
  for (auto p : ds.images().pixels) CHECK(p == 77);
}

TEST_CASE("load_image_dir negative cases") {
  oracle::TempDir dir("neg");
  CHECK_THROWS_AS(load_image_dir(dir.path()), DataError);
  const auto missing = dir / "nope";
  try {
    load_image_dir(missing);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(missing.string()) != std::string::npos);
  }
  write_rgb_png(dir / "big.png", 32, 32, 0);
  write_rgb_png(dir / "small.png", 16, 16, 0);
  try {
    load_image_dir(dir.path(), {32, 32, false});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("small.png") != std::string::npos);
    CHECK(std::string(e.what()).find("big.png") == std::string::npos);
  }
  const Dataset resized = load_image_dir(dir.path(), {32, 32, true});
  CHECK(resized.size() == 2);
  CHECK(resized.images().h == 32);
}

TEST_CASE("write_image_dir round-trips pixels") {
  oracle::TempDir dir("rt");
  ImageBatch b = gen_shapes(4, 3, 8, 8, RngStream(3));
  const Dataset ds = Dataset::from_images(b);
  write_image_dir(dir.path(), ds);
  const Dataset back = load_image_dir(dir.path());
  CHECK(back.images() == ds.images());
  CHECK(back.ids().front() == "000000.png");
}

TEST_CASE("raw tensor round-trip is bit-exact") {
  oracle::TempDir dir("tn");
  RngStream rng(1);
  Tensor t = oracle::random_tensor({3, 4, 5}, rng);
  t[0] = -0.0;
  t[1] = 1e-310;
  write_tensor_file(dir / "t.tnsr", t);
  const Tensor back = read_f64_tensor(dir / "t.tnsr");
  CHECK(back.identical(t));
  const ImageBatch img = gen_shapes(2, 3, 6, 6, RngStream(2));
  write_tensor_file(dir / "i.tnsr", img);
  CHECK(read_image_tensor(dir / "i.tnsr") == img);
  CHECK_THROWS_AS(read_image_tensor(dir / "t.tnsr"), FormatError);
  CHECK_THROWS_AS(read_f64_tensor(dir / "i.tnsr"), FormatError);
}

TEST_CASE("raw tensor corruption is rejected") {
  RngStream rng(9);
  const Tensor t = oracle::random_tensor({10, 2}, rng);
  const auto bytes = encode_tensor(t);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 17);
  try {
    decode_tensor(truncated);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("expected " + std::to_string(bytes.size())) != std::string::npos);
    CHECK(msg.find("got " + std::to_string(truncated.size())) != std::string::npos);
  }

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_tensor(bad_magic), FormatError);

  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_AS(decode_tensor(bad_version), FormatError);

  auto bad_dtype = bytes;
  bad_dtype[8] = 7;
  CHECK_THROWS_AS(decode_tensor(bad_dtype), FormatError);

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  try {
    decode_tensor(flipped);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("checksum") != std::string::npos);
  }
}

TEST_CASE("raw tensor with 1e7 elements round-trips quickly") {
  oracle::TempDir dir("big");
  Tensor t({10'000'000});
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<double>(i) * 0.5;
  const auto t0 = std::chrono::steady_clock::now();
  write_tensor_file(dir / "big.tnsr", t);
  const Tensor back = read_f64_tensor(dir / "big.tnsr");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(back.identical(t));
  CHECK(secs < 2.0);
}

TEST_CASE("crc32 check value") {
  const std::string s = "123456789";
  CHECK(crc32({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}) == 0xCBF43926u);
}

TEST_CASE("dataset ids are sorted and unique") {
  Tensor pts({3, 2}, std::vector<double>{3, 3, 1, 1, 2, 2});
  const Dataset ds = Dataset::from_points({"c", "a", "b"}, pts);
  CHECK(ds.ids() == std::vector<std::string>{"a", "b", "c"});
  CHECK(ds.points()[0] == 1.0);
  CHECK(ds.points()[4] == 3.0);
  CHECK_THROWS_AS(Dataset::from_points({"a", "a", "b"}, pts), DataError);
  const auto o1 = ds.shuffled_order(RngStream(4));
  const auto o2 = ds.shuffled_order(RngStream(4));
  CHECK(o1 == o2);
}

TEST_CASE("reference gaussian moments") {
  const Tensor pts = gen_reference_gaussian(100'000, RngStream(10));
  const Moments m = moments(pts);
  CHECK(std::abs(m.mean[0]) < 0.02);
  CHECK(std::abs(m.mean[1]) < 0.02);
  CHECK(std::abs(m.cov[0][0] - 1) < 0.02);
  CHECK(std::abs(m.cov[1][1] - 1) < 0.02);
  CHECK(std::abs(m.cov[0][1]) < 0.02);
  CHECK(gen_reference_gaussian(50, RngStream(10)).identical(gen_reference_gaussian(50, RngStream(10))));
}

TEST_CASE("mixture4 keeps mean and covariance fixed") {
  const RngStream rng(11);
  CHECK(gen_mixture4(1000, 0.0, rng).identical(gen_reference_gaussian(1000, rng)));
  for (double s : {0.4, 0.7, 1.0, 1.2, 1.35, 1.4}) {
    const Moments m = moments(gen_mixture4(100'000, s, rng.split(static_cast<std::uint64_t>(s * 100))));
    INFO("s = ", s);
    CHECK(std::abs(m.mean[0]) < 0.03);
    CHECK(std::abs(m.mean[1]) < 0.03);
    CHECK(std::abs(m.cov[0][0] - 1) < 0.03);
    CHECK(std::abs(m.cov[1][1] - 1) < 0.03);
    CHECK(std::abs(m.cov[0][1]) < 0.03);
    // within + between = (1 - s^2/2) + s^2/2
    Mixture4Spec spec{s};
    double between = 0;
    for (const auto& mu : spec.means()) between += mu[0] * mu[0] / 4.0;
    CHECK(spec.component_variance() + between == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK_NOTHROW(gen_mixture4(10, 1.4, rng));
  CHECK_THROWS_AS(gen_mixture4(10, 1.42, rng), ConfigError);
  CHECK_THROWS_AS(gen_mixture4(10, -0.1, rng), ConfigError);
}

TEST_CASE("two moons construction") {
  const Tensor clean = gen_two_moons(1001, 0.0, RngStream(12));
  for (std::size_t i = 0; i < 1001; ++i) {
    const double x = clean[i * 2], y = clean[i * 2 + 1];
    if (i < 501) {
      CHECK(std::abs(std::hypot(x, y) - 1.0) < 1e-12);
      CHECK(y >= -1e-12);
    } else {
      CHECK(std::abs(std::hypot(x - 1.0, y - 0.5) - 1.0) < 1e-12);
      CHECK(y <= 0.5 + 1e-12);
    }
  }
  const Tensor noisy = gen_two_moons(100'000, 0.1, RngStream(13));
  std::size_t inside = 0;
  for (std::size_t i = 0; i < 100'000; ++i) {
    const double x = noisy[i * 2], y = noisy[i * 2 + 1];
    inside += (x >= -1.5 && x <= 2.5 && y >= -1.0 && y <= 1.5) ? 1 : 0;
  }
  CHECK(static_cast<double>(inside) / 100'000.0 >= 0.999);
  CHECK(noisy.identical(gen_two_moons(100'000, 0.1, RngStream(13))));
}

TEST_CASE("gen_shapes is per-image deterministic") {
  const ImageBatch a = gen_shapes(5, 3, 16, 16, RngStream(14));
  const ImageBatch b = gen_shapes(8, 3, 16, 16, RngStream(14));
  for (std::size_t i = 0; i < 5; ++i) CHECK(std::equal(a.image(i).begin(), a.image(i).end(), b.image(i).begin()));
}

TEST_CASE("gen_shapes intensity levels") {
  const ImageBatch two = gen_shapes(50, 3, 12, 12, RngStream(15), 2);
  std::set<int> seen(two.pixels.begin(), two.pixels.end());
  CHECK(seen == std::set<int>{0, 255});
  const ImageBatch five = gen_shapes(50, 3, 12, 12, RngStream(15), 5);
  const std::set<int> allowed{0, 63, 127, 191, 255};  // floor(k * 255 / 4)
  std::set<int> seen5(five.pixels.begin(), five.pixels.end());
  CHECK(seen5 == allowed);
  CHECK(gen_shapes(3, 3, 8, 8, RngStream(16), 256).pixels == gen_shapes(3, 3, 8, 8, RngStream(16)).pixels);
  CHECK_THROWS_AS(gen_shapes(1, 3, 8, 8, RngStream(1), 1), ConfigError);
  CHECK_THROWS_AS(gen_shapes(1, 3, 8, 8, RngStream(1), 257), ConfigError);

  // Jitter reflects at the ends: level 0 spreads over [0, j], level 255 over [255 - j, 255].
  const ImageBatch jit = gen_shapes(200, 3, 8, 8, RngStream(17), 2, 10);
  std::set<int> low, high;
  for (auto p : jit.pixels) {
    CHECK((p <= 10 || p >= 245));
    (p <= 10 ? low : high).insert(p);
  }
  CHECK(low.size() == 11);
  CHECK(high.size() == 11);
  CHECK(gen_shapes(3, 3, 8, 8, RngStream(16), 2, 0).pixels == gen_shapes(3, 3, 8, 8, RngStream(16), 2).pixels);
  CHECK_THROWS_AS(gen_shapes(1, 3, 8, 8, RngStream(1), 2, 256), ConfigError);
}
