#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "flowlhd/cli/app.hpp"
#include "flowlhd/cli/commands.hpp"
#include "flowlhd/cli/config.hpp"
#include "flowlhd/data/binary_io.hpp"
#include "flowlhd/data/png_io.hpp"
#include "flowlhd/data/tensor_io.hpp"
#include "flowlhd/errors.hpp"
#include "json.hpp"
#include "support/temp_dir.hpp"

using namespace flowlhd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

// Rows of a CSV without its header and trailing comment.
std::vector<std::vector<double>> csv_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> r;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  return rows;
}

// Small image setup shared by the image-command tests: a PNG directory of
// 8x8 shapes and a briefly trained dfld-simple checkpoint.
struct ImageFixture {
  oracle::TempDir dir{"cli_img"};
  fs::path real, ckpt, config;

  ImageFixture() {
    real = dir / "real";
    ckpt = dir / "model.fldc";
    config = dir / "cfg.json";
    write_text(config, R"J({"arch":{"name":"dfld-simple","hidden":[4,8],"gated_blocks":1,"dequant_layers":2},
                         "train":{"epochs":30,"batch_size":16}})J");
    // Two-level palette: the flow learns quickly that intermediate intensities never occur.
    REQUIRE(invoke({"gen-data", "--kind", "shapes", "--levels", "2", "--n", "384", "--size", "8", "--out", real.string(),
                    "--seed", "4"})
                .code == 0);
    REQUIRE(invoke({"train", "--data", real.string(), "--config", config.string(), "--out", ckpt.string(), "--seed", "1"})
                .code == 0);
  }

  fs::path distorted(const std::string& kind, double p) {
    const fs::path out = dir / (kind + std::to_string(p));
    REQUIRE(invoke({"distort", "--in", real.string(), "--out", out.string(), "--kind", kind, "--param", std::to_string(p),
                 "--seed", "9"})
                .code == 0);
    return out;
  }
};

ImageFixture& image_fixture() {
  static ImageFixture f;
  return f;
}

}  // namespace

TEST_CASE("run config rejects unknown keys and round-trips") {
  CHECK_THROWS_AS(cli::RunConfig::from_json(json::parse(R"J({"sed": 1})J")), ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from_json(json::parse(R"J({"train": {"epoch": 1}})J")), ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from_json(json::parse(R"J({"arch": {"name": "x", "hid": [1]}})J")), ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from_json(json::parse(R"J({"experiment": {"kind": "jpeg"}})J")), ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from_json(json::parse(R"J({"train": {"seed": 3}})J")), ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from_json(json::parse(R"J({"seed": "three"})J")), ConfigError);

  const json j = json::parse(R"J({"seed": 5, "arch": {"name": "flow2d(3)", "hidden": [8]},
                                 "train": {"epochs": 2}, "experiment": {"runs": 4, "grid": [0, 0.5]}})J");
  const cli::RunConfig c = cli::RunConfig::from_json(j);
  CHECK(c.seed == 5);
  CHECK(c.train.epochs == 2);
  CHECK(c.experiment.runs == 4);
  const cli::RunConfig back = cli::RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());
  cli::RunConfig other = c;
  other.seed = 6;
  CHECK(other.hash() != c.hash());
  CHECK(c.hash().size() == 16);
}

TEST_CASE("usage errors exit 2") {
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"bogus"}).code == 2);
  CHECK(invoke({"train", "--out", "x"}).code == 2);
  CHECK(invoke({"--help"}).code == 0);
  oracle::TempDir d("cli_cfg");
  write_text(d / "bad.json", R"J({"unknown": 1})J");
  const Result r = invoke({"demo2d", "--config", (d / "bad.json").string(), "--separations", "0"});
  CHECK(r.code == 2);
  CHECK(r.err.find("unknown") != std::string::npos);
}

TEST_CASE("train on two moons writes a checkpoint and one history row per epoch") {
  oracle::TempDir d("cli_train");
  const auto moons = (d / "moons.tnsr").string();
  REQUIRE(invoke({"gen-data", "--kind", "two-moons", "--n", "1500", "--out", moons, "--seed", "2"}).code == 0);
  const auto ck1 = d / "a.fldc", ck2 = d / "b.fldc";
  for (const auto& ck : {ck1, ck2}) {
    const Result r = invoke({"train", "--data", moons, "--arch", "flow2d(4)", "--epochs", "4", "--out", ck.string(),
                          "--seed", "11", "--history", (ck.string() + ".csv")});
    REQUIRE(r.code == 0);
  }
  CHECK(fs::exists(ck1));
  CHECK(data::read_file_bytes(ck1) == data::read_file_bytes(ck2));
  const std::string hist = slurp(ck1.string() + ".csv");
  CHECK(csv_rows(hist).size() == 4);
  CHECK(hist.rfind("epoch,train_nll,val_nll,seconds\n", 0) == 0);
  CHECK(hist.find("\n# config_hash=") != std::string::npos);
  CHECK(hist.find(" seed=11\n") != std::string::npos);

  const Result missing = invoke({"train", "--data", (d / "no_such_dir").string(), "--arch", "flow2d(4)", "--out",
                              (d / "x.fldc").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("no_such_dir") != std::string::npos);
}

TEST_CASE("fld command: identity, noise ordering and resolution mismatch") {
  ImageFixture& f = image_fixture();
  const Result same = invoke({"fld", "--real", f.real.string(), "--gen", f.real.string(), "--ckpt", f.ckpt.string()});
  REQUIRE(same.code == 0);
  const json j = json::parse(same.out);
  CHECK(j["value"].get<double>() == 1.0);
  CHECK(j["metric"] == "FLD");
  CHECK(j["n_real"] == 384);
  CHECK(j["checkpoints"].size() == 1);

  const auto lo = f.distorted("gaussian_noise", 0.05), hi = f.distorted("gaussian_noise", 0.2);
  const double v_lo = json::parse(invoke({"fld", "--real", f.real.string(), "--gen", lo.string(), "--ckpt", f.ckpt.string()}).out)["value"];
  const double v_hi = json::parse(invoke({"fld", "--real", f.real.string(), "--gen", hi.string(), "--ckpt", f.ckpt.string()}).out)["value"];
  CHECK(v_hi > v_lo);
  CHECK(v_lo > 1.0);

  const fs::path big = f.dir / "big";
  REQUIRE(invoke({"gen-data", "--kind", "shapes", "--n", "4", "--size", "16", "--out", big.string()}).code == 0);
  const Result mm = invoke({"fld", "--real", big.string(), "--gen", big.string(), "--ckpt", f.ckpt.string()});
  CHECK(mm.code == 2);
  CHECK(mm.err.find("expects") != std::string::npos);
  std::ostringstream o, e;
  cli::Context ctx{o, e, std::nullopt};
  const cli::RunConfig cfg;
  const cli::FldArgs args{big, big, f.ckpt, {}};
  CHECK_THROWS_AS(cli::cmd_fld(cfg, args, ctx), ArchMismatch);
}

TEST_CASE("distort command: identity and salt-pepper rate on a million pixels") {
  oracle::TempDir d("cli_distort");
  const auto in = (d / "in.tnsr").string();
  // 625 images of 40 x 40 = 10^6 pixel locations; salt-pepper draws once per location.
  REQUIRE(invoke({"gen-data", "--kind", "shapes", "--n", "625", "--size", "40", "--out", in}).code == 0);
  const auto out0 = (d / "n0.tnsr").string();
  REQUIRE(invoke({"distort", "--in", in, "--out", out0, "--kind", "gaussian_noise", "--param", "0", "--seed", "3"}).code == 0);
  const auto a = data::read_image_tensor(in), b = data::read_image_tensor(out0);
  CHECK(a.pixels == b.pixels);

  const auto sp = (d / "sp.tnsr").string();
  REQUIRE(invoke({"distort", "--in", in, "--out", sp, "--kind", "salt_pepper", "--param", "0.01", "--seed", "3"}).code == 0);
  const auto c = data::read_image_tensor(sp);
  const std::size_t locations = c.n * c.h * c.w;
  REQUIRE(locations == 1000000);
  std::size_t altered = 0;
  for (std::size_t i = 0; i < c.n; ++i)
    for (std::size_t y = 0; y < c.h; ++y)
      for (std::size_t x = 0; x < c.w; ++x) {
        bool diff = false;
        for (std::size_t ch = 0; ch < c.c; ++ch) diff |= c.at(i, ch, y, x) != a.at(i, ch, y, x);
        altered += diff;
      }
  const double frac = double(altered) / double(locations);
  CHECK(frac >= 0.008);
  CHECK(frac <= 0.012);

  const Result bad = invoke({"distort", "--in", in, "--out", sp, "--kind", "posterize", "--param", "1"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("gaussian_noise, gaussian_blur, salt_pepper") != std::string::npos);
  CHECK(invoke({"distort", "--in", in, "--out", sp, "--kind", "salt_pepper", "--param", "2"}).code == 2);
}

TEST_CASE("distort mirrors a PNG directory") {
  ImageFixture& f = image_fixture();
  const fs::path out = f.distorted("gaussian_blur", 1.0);
  const data::Dataset a = data::load_dataset(f.real), b = data::load_dataset(out);
  CHECK(a.ids() == b.ids());
  CHECK(a.images().pixels != b.images().pixels);
}

TEST_CASE("dfld command: self distance, shared checkpoint and tiny sets") {
  oracle::TempDir d("cli_dfld");
  const auto pts = (d / "pts.tnsr").string();
  REQUIRE(invoke({"gen-data", "--kind", "two-moons", "--n", "2000", "--out", pts, "--seed", "5"}).code == 0);
  write_text(d / "cfg.json", R"J({"arch":{"name":"flow2d(4)","hidden":[32]},
                                 "train":{"epochs":30,"batch_size":128,"learning_rate":3e-4}})J");
  const auto cfg = (d / "cfg.json").string();

  const Result self = invoke({"dfld", "--real", pts, "--gen", pts, "--config", cfg, "--ckpt-dir", (d / "ck").string()});
  REQUIRE(self.code == 0);
  const json js = json::parse(self.out);
  CHECK(js["value"].get<double>() > 0.0);
  CHECK(js["value"].get<double>() < 0.2);
  REQUIRE(js["checkpoints"].size() == 2);
  CHECK(fs::exists(js["checkpoints"][0].get<std::string>()));
  CHECK(fs::exists(js["checkpoints"][1].get<std::string>()));

  const Result reuse = invoke({"dfld", "--real", pts, "--gen", pts, "--config", cfg, "--reuse-gen-ckpt", "--ckpt-dir",
                            (d / "ck2").string()});
  REQUIRE(reuse.code == 0);
  CHECK(json::parse(reuse.out)["value"].get<double>() == 0.0);

  const auto tiny = (d / "tiny.tnsr").string();
  REQUIRE(invoke({"gen-data", "--kind", "two-moons", "--n", "20", "--out", tiny}).code == 0);
  const Result small = invoke({"dfld", "--real", pts, "--gen", tiny, "--config", cfg, "--ckpt-dir", (d / "ck3").string()});
  CHECK(small.code == 2);
  CHECK(small.err.find("batch_size") != std::string::npos);
}

TEST_CASE("dfld reuses cached checkpoints keyed by config") {
  oracle::TempDir d("cli_cache");
  const auto pts = (d / "pts.tnsr").string();
  REQUIRE(invoke({"gen-data", "--kind", "gaussian", "--n", "600", "--out", pts}).code == 0);
  const std::vector<std::string> base{"dfld", "--real", pts, "--gen", pts, "--arch", "flow2d(2)", "--epochs", "2",
                                      "--cache-dir", (d / "cache").string(), "--ckpt-dir", (d / "ck").string()};
  const Result first = invoke(base);
  REQUIRE(first.code == 0);
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(d / "cache")) ++entries;
  CHECK(entries == 2);
  const auto stamp = fs::last_write_time(fs::directory_iterator(d / "cache")->path());
  const Result second = invoke(base);
  REQUIRE(second.code == 0);
  CHECK(json::parse(second.out)["value"] == json::parse(first.out)["value"]);
  CHECK(fs::last_write_time(fs::directory_iterator(d / "cache")->path()) == stamp);
  auto changed = base;
  changed[8] = "3";
  REQUIRE(invoke(changed).code == 0);
  entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(d / "cache")) ++entries;
  CHECK(entries == 4);
}

TEST_CASE("demo2d command: baseline row and separation range") {
  oracle::TempDir d("cli_demo");
  const auto out = (d / "demo.csv").string();
  const Result r = invoke({"demo2d", "--separations", "0", "--n", "4000", "--arch", "flow2d(4)", "--lr", "3e-4",
                        "--epochs", "20", "--batch-size", "128", "--seed", "3", "--out", out});
  REQUIRE(r.code == 0);
  const std::string text = slurp(out);
  const auto rows = csv_rows(text);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0][0] == 0.0);
  CHECK(rows[0][1] >= 0.0);
  CHECK(rows[0][1] < 0.2);
  CHECK(text.rfind("separation,dfld,mean_abs_diff\n", 0) == 0);
  CHECK(text.find("# config_hash=") != std::string::npos);

  const Result bad = invoke({"demo2d", "--separations", "0,1.5", "--n", "100"});
  CHECK(bad.code == 2);
}

TEST_CASE("sample-efficiency command: degenerate runs and oversize requests") {
  ImageFixture& f = image_fixture();
  const auto g = f.distorted("gaussian_noise", 0.1);
  const auto out = (f.dir / "se.csv").string();
  const Result r = invoke({"sample-efficiency", "--real", f.real.string(), "--gen", g.string(), "--ckpt", f.ckpt.string(),
                        "--sizes", "10,50", "--runs", "1", "--out", out});
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(slurp(out));
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row[2] == 0.0);
    CHECK(row[3] == 1.0);
  }
  const Result many = invoke({"sample-efficiency", "--real", f.real.string(), "--gen", g.string(), "--ckpt",
                           f.ckpt.string(), "--sizes", "10,50,384", "--runs", "5"});
  REQUIRE(many.code == 0);
  const auto mrows = csv_rows(many.out);
  REQUIRE(mrows.size() == 3);
  CHECK(mrows[0][2] > 0.0);
  CHECK(mrows[2][2] < 1e-12);  // n = set size: every subsample is the full set
  CHECK(mrows[2][3] == 0.0);

  const Result over = invoke({"sample-efficiency", "--real", f.real.string(), "--gen", g.string(), "--ckpt",
                           f.ckpt.string(), "--sizes", "400"});
  CHECK(over.code == 2);
}

TEST_CASE("sample efficiency on synthetic likelihoods shrinks with n") {
  numerics::RngStream rng(4);
  std::vector<double> lr(2000), lg(2000);
  for (auto& v : lr) v = -100.0 + 10.0 * rng.normal();
  for (auto& v : lg) v = -120.0 + 10.0 * rng.normal();
  const auto rows = cli::sample_efficiency(lr, lg, {25, 100, 400}, 50, 1);
  CHECK(rows[0].mean_fld == doctest::Approx(1.2).epsilon(0.02));
  CHECK(rows[1].std_fld < rows[0].std_fld);
  CHECK(rows[2].std_fld < rows[1].std_fld);
  // Expected spread of a ratio of two means of 25 draws with sd 10.
  const double expect25 = std::sqrt(std::pow(10.0 / 100.0, 2) / 25 + std::pow(1.2 * 10.0 / 100.0, 2) / 25);
  CHECK(rows[0].std_fld == doctest::Approx(expect25).epsilon(0.3));
}

TEST_CASE("monotonicity command: baseline row and noise ordering") {
  ImageFixture& f = image_fixture();
  const auto out = (f.dir / "mono.csv").string();
  const Result base = invoke({"monotonicity", "--real", f.real.string(), "--ckpt", f.ckpt.string(), "--kind",
                           "gaussian_noise", "--grid", "0", "--out", out});
  REQUIRE(base.code == 0);
  const auto rows = csv_rows(slurp(out));
  REQUIRE(rows.size() == 1);
  CHECK(std::isfinite(rows[0][1]));
  CHECK(rows[0][1] == 1.0);

  const Result noise = invoke({"monotonicity", "--real", f.real.string(), "--ckpt", f.ckpt.string(), "--kind",
                            "gaussian_noise", "--grid", "0,0.05,0.2,0.5"});
  REQUIRE(noise.code == 0);
  const auto nrows = csv_rows(noise.out);
  REQUIRE(nrows.size() == 4);
  for (std::size_t i = 1; i < nrows.size(); ++i) CHECK(nrows[i][1] > nrows[i - 1][1]);
  CHECK(invoke({"monotonicity", "--real", f.real.string(), "--ckpt", f.ckpt.string(), "--kind", "gaussian_noise",
             "--grid", "0,1.5"})
            .code == 2);
}

TEST_CASE("commands are idempotent: identical CSV bytes on rerun") {
  ImageFixture& f = image_fixture();
  const auto a = (f.dir / "m1.csv").string(), b = (f.dir / "m2.csv").string();
  for (const auto& out : {a, b})
    REQUIRE(invoke({"monotonicity", "--real", f.real.string(), "--ckpt", f.ckpt.string(), "--kind", "salt_pepper",
                 "--grid", "0.01,0.1", "--seed", "4", "--out", out})
                .code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(!slurp(a).empty());
}
