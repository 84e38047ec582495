// Acceptance checks. Prints one PASS/FAIL line per criterion; exit code 0 only
// when every selected criterion passes. Arguments select criteria by number.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "flowlhd/cli/app.hpp"
#include "flowlhd/cli/commands.hpp"
#include "flowlhd/data/binary_io.hpp"
#include "flowlhd/data/synthetic.hpp"
#include "flowlhd/data/tensor_io.hpp"
#include "flowlhd/distortion/distortion.hpp"
#include "flowlhd/errors.hpp"
#include "flowlhd/flow/arch.hpp"
#include "flowlhd/flow/checkpoint.hpp"
#include "flowlhd/metrics/metrics.hpp"
#include "flowlhd/numerics/module.hpp"
#include "support/flow_fixtures.hpp"
#include "support/gradient_suite.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace flowlhd;
using numerics::RngStream;
using numerics::Tensor;

namespace {

// Pinned tolerances and sizes.
constexpr double kLogDetRelTol = 1e-4;
constexpr int kLogDetCases = 50;
constexpr double kRoundTripTol = 1e-5;
constexpr int kRoundTripBatches = 100;
constexpr int kGradDraws = 10;
constexpr double kGradStep = 1e-4;
constexpr double kGradRelTol = 1e-3;
constexpr double kSelfDistanceMax = 0.2;
constexpr int kRandomPairs = 100;
constexpr double kParamsLo = 1.0e6, kParamsHi = 3.0e6;
constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int prec = 6) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

std::string join(const std::vector<double>& v, int prec = 4) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + num(v[i], prec);
  return out;
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

bool nondecreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] >= v[i - 1])) return false;
  return true;
}

Outcome likelihood_exactness() {
  double worst = 0.0;
  RngStream rng = RngStream(kSeed).split("c1");
  for (int k = 0; k < kLogDetCases; ++k) {
    RngStream r = rng.split(static_cast<std::uint64_t>(k));
    flow::ArchSpec a;
    if (k % 5 == 4) {
      // Image flows with at most 8 input dimensions.
      a = flow::parse_arch("dfld-simple", k % 2 ? 2 : 1, 2, k % 2 ? 2 : 4);
      a.hidden = {3, 4};
      a.gated_blocks = 1;
    } else {
      a = flow::parse_arch("flow2d(" + std::to_string(1 + k % 4) + ")");
      a.dims = 2 + static_cast<std::size_t>(k) % 7;
      a.hidden = {8};
      a.mlp_depth = 1 + static_cast<std::size_t>(k) % 2;
    }
    flow::FlowModel m = flow::build_model(a, r.split("init").next_u64());
    RngStream pr = r.split("params");
    oracle::randomize_params(m.params(), pr, 0.3);
    RngStream xr = r.split("x");
    std::vector<std::size_t> shape = m.sample_shape();
    shape.insert(shape.begin(), 1);
    const Tensor x = oracle::random_tensor(shape, xr, m.is_image_model() ? 0.3 : 1.0);
    const std::vector<double> xv(x.values().begin(), x.values().end());
    const double analytic = m.encode(x).log_det[0];
    const auto f = [&](const std::vector<double>& v) { return oracle::flat_forward(m, v); };
    const double numeric = oracle::log_abs_det(oracle::numeric_jacobian(f, xv, 1e-5));
    worst = std::max(worst, oracle::rel_err(analytic, numeric));
  }
  return {worst < kLogDetRelTol, std::to_string(kLogDetCases) + " models, max rel err " + num(worst, 3)};
}

Outcome invertibility() {
  double worst_by_arch[3] = {0, 0, 0};
  const char* names[3] = {"dfld-simple", "fld-multiscale", "flow2d(6)"};
  RngStream rng = RngStream(kSeed).split("c2");
  for (int ai = 0; ai < 3; ++ai) {
    flow::ArchSpec a = ai < 2 ? flow::parse_arch(names[ai], 3, 16, 16) : flow::parse_arch(names[ai]);
    flow::FlowModel m = flow::build_model(a, 10 + ai);
    RngStream pr = rng.split(names[ai]).split("params");
    oracle::randomize_params(m.params(), pr, 0.05);
    for (int b = ai; b < kRoundTripBatches; b += 3) {
      RngStream xr = rng.split(names[ai]).split(static_cast<std::uint64_t>(b));
      std::vector<std::size_t> shape = m.sample_shape();
      shape.insert(shape.begin(), 4);
      Tensor x = oracle::random_tensor(shape, xr, 0.3);
      if (m.is_image_model())
        for (std::size_t i = 0; i < x.numel(); ++i) x[i] = std::clamp(0.5 + x[i], 0.0, 1.0);
      const Tensor back = m.decode(m.encode(x).latent);
      double e = 0.0;
      for (std::size_t i = 0; i < x.numel(); ++i) e = std::max(e, std::abs(back[i] - x[i]));
      worst_by_arch[ai] = std::max(worst_by_arch[ai], e);
    }
  }
  const double worst = std::max({worst_by_arch[0], worst_by_arch[1], worst_by_arch[2]});
  return {worst < kRoundTripTol, std::to_string(kRoundTripBatches) + " batches, max err " + names[0] + " " +
                                     num(worst_by_arch[0], 3) + ", " + names[1] + " " + num(worst_by_arch[1], 3) +
                                     ", " + names[2] + " " + num(worst_by_arch[2], 3)};
}

Outcome gradients() {
  const auto reports = oracle::run_gradient_suite(kGradDraws, kSeed, kGradStep);
  double worst = 0.0;
  std::string worst_block;
  std::set<std::string> covered;
  for (const auto& r : reports) {
    covered.insert(r.block);
    const double e = std::max(r.max_param_rel_err, r.max_input_rel_err);
    if (e >= worst) {
      worst = e;
      worst_block = r.block;
    }
  }
  std::size_t missing = 0;
  for (const auto& b : numerics::block_registry()) missing += covered.count(std::string(b.name)) ? 0 : 1;
  return {worst < kGradRelTol && missing == 0,
          std::to_string(covered.size()) + " blocks x " + std::to_string(kGradDraws) + " draws, max rel err " +
              num(worst, 3) + " (" + worst_block + ")" + (missing ? ", " + std::to_string(missing) + " uncovered" : "")};
}

cli::RunConfig demo_config() {
  cli::RunConfig cfg;
  cfg.seed = kSeed;
  cfg.arch.name = "flow2d(4)";
  cfg.arch.hidden = std::vector<std::size_t>{8};
  cfg.train.epochs = 80;
  cfg.train.batch_size = 1000;
  cfg.train.learning_rate = 1e-4;
  cfg.experiment.separations = {0.0, 0.4, 0.7, 1.0, 1.2, 1.35};
  cfg.experiment.n = 20000;
  return cfg;
}

Outcome demo2d_trend() {
  std::ostringstream out, err;
  cli::Context ctx{out, err, std::nullopt, false};
  const auto rows = cli::cmd_demo2d(demo_config(), {}, ctx);
  std::vector<double> d;
  for (const auto& r : rows) d.push_back(r.dfld);
  const bool ok = strictly_increasing(d) && d.front() < kSelfDistanceMax;
  return {ok, "D-FLD over s = 0..1.35: " + join(d)};
}

data::Dataset random_points(std::size_t n, RngStream rng, double shift) {
  Tensor t = oracle::random_tensor({n, 2}, rng);
  for (std::size_t i = 0; i < t.numel(); i += 2) t[i] += shift;
  return data::Dataset::from_points(std::move(t));
}

Outcome metric_identities() {
  RngStream rng = RngStream(kSeed).split("c5");
  // FLD(R, R) on points and images.
  flow::FlowModel pm = flow::build_model(flow::parse_arch("flow2d(3)"), 5);
  RngStream pr = rng.split("pm");
  oracle::randomize_params(pm.params(), pr, 0.2);
  const data::Dataset pts = random_points(300, rng.split("pts"), 0.0);
  const double fld_pts = metrics::fld(pm, pts, pts, kSeed).value;

  flow::ArchSpec ia = flow::parse_arch("dfld-simple", 3, 8, 8);
  ia.hidden = {4, 4};
  ia.gated_blocks = 1;
  flow::FlowModel im = flow::build_model(ia, 6);
  RngStream ir = rng.split("im");
  oracle::randomize_params(im.params(), ir, 0.05);
  const data::Dataset imgs = data::Dataset::from_images(data::gen_shapes(64, 3, 8, 8, rng.split("imgs")));
  const double fld_img = metrics::fld(im, imgs, imgs, kSeed).value;

  // Shared checkpoint: N_g is decoded from N_r's bytes.
  flow::FlowModel copy = flow::decode_checkpoint(flow::encode_checkpoint(pm));
  const data::Dataset other = random_points(300, rng.split("other"), 0.7);
  const double shared = metrics::dfld(pm, copy, pts, other, kSeed).value;
  flow::FlowModel icopy = flow::decode_checkpoint(flow::encode_checkpoint(im));
  const double shared_img = metrics::dfld(im, icopy, imgs, imgs, kSeed).value;

  double min_pair = INFINITY;
  for (int k = 0; k < kRandomPairs; ++k) {
    RngStream r = rng.split("pairs").split(static_cast<std::uint64_t>(k));
    flow::ArchSpec a = flow::parse_arch("flow2d(" + std::to_string(1 + k % 3) + ")");
    a.hidden = {8};
    flow::FlowModel fr = flow::build_model(a, r.split("r").next_u64());
    flow::FlowModel fg = flow::build_model(a, r.split("g").next_u64());
    RngStream rr = r.split("pr"), rg = r.split("pg");
    oracle::randomize_params(fr.params(), rr, 0.3);
    oracle::randomize_params(fg.params(), rg, 0.3);
    const double v = metrics::dfld(fr, fg, random_points(50, r.split("R"), 0.0),
                                   random_points(50, r.split("G"), r.uniform()), kSeed)
                         .value;
    min_pair = std::min(min_pair, v);
  }
  const bool ok = fld_pts == 1.0 && fld_img == 1.0 && shared == 0.0 && shared_img == 0.0 && min_pair >= 0.0;
  return {ok, "FLD(R,R) points " + num(fld_pts, 17) + " images " + num(fld_img, 17) + "; shared D-FLD " +
                  num(shared, 17) + " / " + num(shared_img, 17) + "; min D-FLD over " + std::to_string(kRandomPairs) +
                  " pairs " + num(min_pair, 4)};
}

// Criterion 6 trains the model that criterion 7 reuses.
struct ImageRun {
  std::optional<flow::FlowModel> model;
  data::Dataset held_out;
  training::TrainHistory history;
};

constexpr std::size_t kTrainImages = 2000, kHeldOut = 500, kImageSize = 16;

ImageRun& image_run() {
  static ImageRun run = [] {
    ImageRun r;
    // Each channel near 0 or near 255: eight colour clusters, each 8 levels wide.
    const data::Dataset all = data::Dataset::from_images(data::gen_shapes(
        kTrainImages + kHeldOut, 3, kImageSize, kImageSize, RngStream(kSeed).split("c6-shapes"), 2, 8));
    std::vector<std::size_t> tr(kTrainImages), ho(kHeldOut);
    for (std::size_t i = 0; i < kTrainImages; ++i) tr[i] = i;
    for (std::size_t i = 0; i < kHeldOut; ++i) ho[i] = kTrainImages + i;
    const data::Dataset train_set = all.subset(tr);
    r.held_out = all.subset(ho);

    flow::ArchSpec a = flow::parse_arch("dfld-simple", 3, kImageSize, kImageSize);
    a.hidden = {8, 16};
    a.gated_blocks = 1;
    training::TrainConfig tc;
    tc.epochs = 20;
    tc.batch_size = 16;
    tc.learning_rate = 1e-3;
    tc.validation_fraction = 0.0;
    tc.seed = kSeed;
    r.model.emplace(flow::build_model(a, tc.seed));
    r.history = training::train(*r.model, train_set, tc);
    return r;
  }();
  return run;
}

Outcome monotone_fld() {
  ImageRun& run = image_run();
  struct Grid {
    const char* kind;
    std::vector<double> params;
    bool strict;
  };
  const std::vector<Grid> grids{{"gaussian_noise", {0.01, 0.05, 0.1, 0.2, 0.4}, true},
                                {"gaussian_blur", {0, 0.25, 0.5, 1, 2}, false},
                                {"salt_pepper", {0.01, 0.05, 0.1, 0.2}, false}};
  bool ok = true;
  std::string detail;
  for (const auto& g : grids) {
    std::vector<double> v;
    for (const auto& row : cli::monotonicity(*run.model, run.held_out, g.kind, g.params, kSeed)) v.push_back(row.fld);
    const bool good = g.strict ? strictly_increasing(v) : nondecreasing(v);
    ok = ok && good;
    detail += std::string(detail.empty() ? "" : "; ") + g.kind + " " + join(v) + (good ? "" : " (violated)");
  }
  return {ok, detail};
}

double window_mean(const std::vector<double>& v, std::size_t i, std::size_t w) {
  double s = 0.0;
  for (std::size_t k = i; k < i + w; ++k) s += v[k];
  return s / static_cast<double>(w);
}

// Training example, reported alongside criterion 6.
Outcome smoothed_loss() {
  const auto& h = image_run().history;
  std::vector<double> loss;
  for (const auto& e : h.epochs) loss.push_back(e.train_nll);
  constexpr std::size_t w = 5;
  std::vector<double> smooth;
  for (std::size_t i = 0; i + w <= loss.size(); ++i) smooth.push_back(window_mean(loss, i, w));
  bool ok = !smooth.empty();
  for (std::size_t i = 1; i < smooth.size(); ++i) ok = ok && smooth[i] <= smooth[i - 1];
  return {ok, "window-5 mean train bpd " + join(smooth, 4)};
}

Outcome sample_efficiency() {
  ImageRun& run = image_run();
  const std::vector<std::size_t> sizes{25, 50, 100, 200, 500};
  distortion::DistortionSpec spec{distortion::DistortionKind::gaussian_noise, 0.1, kSeed};
  const data::Dataset gen = data::Dataset::from_images(run.held_out.ids(), distortion::apply(run.held_out.images(), spec));
  const auto ll_r = metrics::evaluate_log_likelihoods(*run.model, run.held_out, kSeed);
  const auto ll_g = metrics::evaluate_log_likelihoods(*run.model, gen, kSeed);
  const auto rows = cli::sample_efficiency(ll_r, ll_g, sizes, 10, kSeed);
  std::vector<double> sd;
  for (const auto& r : rows) sd.push_back(r.std_fld);
  bool ok = sd[3] < 0.5 * sd[0];
  for (std::size_t i = 1; i < sd.size(); ++i) ok = ok && sd[i] <= sd[i - 1];
  return {ok, "std over n = 25..500: " + join(sd, 3) + "; std(200)/std(25) = " + num(sd[3] / sd[0], 3)};
}

Outcome parameter_budget() {
  const flow::FlowModel m = flow::build_model(flow::parse_arch("fld-multiscale", 3, 32, 32), 0);
  const double n = static_cast<double>(m.parameter_count());
  return {n >= kParamsLo && n <= kParamsHi, "fld-multiscale at 3x32x32 has " + std::to_string(m.parameter_count()) +
                                                " parameters"};
}

std::string run_cli(const std::vector<std::string>& args, int* code) {
  std::ostringstream out, err;
  *code = cli::run(args, out, err);
  return out.str();
}

std::string read_all(const std::filesystem::path& p) {
  const auto bytes = data::read_file_bytes(p);
  return std::string(bytes.begin(), bytes.end());
}

template <class F>
bool rejects_format(F&& f) {
  try {
    f();
  } catch (const FormatError&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

Outcome determinism_and_formats() {
  oracle::TempDir dir("acceptance");
  std::vector<std::string> failures;
  int code = 0;
  const std::string moons = (dir / "moons.tnsr").string(), shapes = (dir / "shapes.tnsr").string();
  run_cli({"gen-data", "--kind", "two-moons", "--n", "600", "--seed", "3", "--out", moons}, &code);
  if (code != 0) failures.push_back("gen-data two-moons");
  run_cli({"gen-data", "--kind", "shapes", "--n", "96", "--size", "8", "--levels", "2", "--seed", "4", "--out", shapes},
          &code);
  if (code != 0) failures.push_back("gen-data shapes");

  // Checkpoints: same config and seed, trained twice.
  const std::string img_cfg = (dir / "img.json").string();
  {
    std::ofstream(img_cfg) << R"J({"arch":{"name":"dfld-simple","hidden":[4,4],"gated_blocks":1,"dequant_layers":2},
                                  "train":{"epochs":2,"batch_size":16}})J";
  }
  for (const auto& [name, data, cfg] :
       std::vector<std::tuple<std::string, std::string, std::string>>{{"points", moons, ""}, {"images", shapes, img_cfg}}) {
    std::vector<std::string> base{"train", "--seed", "9", "--data", data, "--epochs", "3"};
    if (!cfg.empty()) base = {"train", "--config", cfg, "--seed", "9", "--data", data};
    auto a = base, b = base;
    a.insert(a.end(), {"--out", (dir / (name + "_a.fldc")).string()});
    b.insert(b.end(), {"--out", (dir / (name + "_b.fldc")).string()});
    int ca = 0, cb = 0;
    run_cli(a, &ca);
    run_cli(b, &cb);
    if (ca != 0 || cb != 0 || read_all(dir / (name + "_a.fldc")) != read_all(dir / (name + "_b.fldc")))
      failures.push_back(name + " checkpoints differ");
  }

  // Experiment CSVs.
  const std::string ckpt = (dir / "images_a.fldc").string();
  const std::vector<std::vector<std::string>> csv_cmds{
      {"monotonicity", "--seed", "5", "--ckpt", ckpt, "--real", shapes, "--kind", "salt_pepper", "--grid", "0,0.05,0.2"},
      {"sample-efficiency", "--seed", "5", "--ckpt", ckpt, "--real", shapes, "--gen", shapes, "--sizes", "10,40",
       "--runs", "4"},
      {"demo2d", "--seed", "5", "--arch", "flow2d(2)", "--epochs", "2", "--n", "500", "--separations", "0,1"}};
  for (const auto& cmd : csv_cmds) {
    int c1 = 0, c2 = 0;
    const std::string first = run_cli(cmd, &c1), second = run_cli(cmd, &c2);
    if (c1 != 0 || c2 != 0 || first.empty() || first != second) failures.push_back(cmd[0] + " csv differs");
  }

  // Round trips.
  flow::FlowModel m = flow::load_checkpoint(ckpt);
  const auto bytes = flow::encode_checkpoint(m);
  if (flow::encode_checkpoint(flow::decode_checkpoint(bytes)) != bytes) failures.push_back("checkpoint re-encode");
  RngStream rng(17);
  const Tensor t = oracle::random_tensor({7, 3, 5}, rng);
  if (!std::get<Tensor>(data::decode_tensor(data::encode_tensor(t))).identical(t)) failures.push_back("f64 tensor");
  const data::ImageBatch imgs = data::read_image_tensor(shapes);
  data::write_tensor_file(dir / "copy.tnsr", imgs);
  if (data::read_image_tensor(dir / "copy.tnsr").pixels != imgs.pixels) failures.push_back("u8 tensor");

  // Corruption: a flipped payload byte and a truncation, for both formats.
  const auto tbytes = data::encode_tensor(t);
  for (const auto* src : {&bytes, &tbytes}) {
    auto flipped = *src;
    flipped[flipped.size() / 2] ^= 0x5a;
    auto truncated = *src;
    truncated.resize(truncated.size() - 3);
    for (const auto* bad : {&flipped, &truncated}) {
      const bool ok = src == &bytes ? rejects_format([&] { flow::decode_checkpoint(*bad); })
                                    : rejects_format([&] { data::decode_tensor(*bad); });
      if (!ok) failures.push_back(std::string(src == &bytes ? "checkpoint" : "tensor") + " corruption accepted");
    }
  }
  std::string detail = failures.empty() ? "checkpoints, 3 CSVs, round-trips and corruption checks" : "";
  for (const auto& f : failures) detail += (detail.empty() ? "" : "; ") + f;
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> all{
      {1, "likelihood exactness", likelihood_exactness},
      {2, "invertibility", invertibility},
      {3, "gradient correctness", gradients},
      {4, "2D separation trend", demo2d_trend},
      {5, "metric identities", metric_identities},
      {6, "distortion monotonicity", monotone_fld},
      {7, "sample efficiency", sample_efficiency},
      {8, "parameter budget", parameter_budget},
      {9, "determinism and formats", determinism_and_formats},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  bool all_pass = true;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all_pass = all_pass && o.pass;
    std::printf("criterion %d %-24s %s  %s  [%.1f s]\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    if (c.id == 6) {
      Outcome s;
      try {
        s = smoothed_loss();
      } catch (const std::exception& e) {
        s = {false, e.what()};
      }
      std::printf("  note: training loss example %s  %s\n", s.pass ? "holds" : "does not hold", s.detail.c_str());
    }
  }
  return all_pass ? 0 : 1;
}
