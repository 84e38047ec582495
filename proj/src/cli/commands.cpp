#include "flowlhd/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "flowlhd/data/png_io.hpp"
#include "flowlhd/data/synthetic.hpp"
#include "flowlhd/data/tensor_io.hpp"
#include "flowlhd/distortion/distortion.hpp"
#include "flowlhd/errors.hpp"
#include "flowlhd/flow/checkpoint.hpp"
#include "flowlhd/numerics/rng.hpp"

namespace flowlhd::cli {

namespace fs = std::filesystem;
using numerics::RngStream;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

data::Dataset load(const fs::path& path, const RunConfig& cfg, const char* role) {
  if (path.empty()) throw ConfigError(std::string("no ") + role + " data path given");
  if (!fs::exists(path)) throw DataError(std::string(role) + " data path not found: " + path.string());
  return data::load_dataset(path, cfg.data.image_options());
}

void require_same_input(const data::Dataset& a, const data::Dataset& b) {
  if (a.is_image() != b.is_image() || a.sample_shape() != b.sample_shape())
    throw ConfigError("real set holds " + numerics::shape_string(a.sample_shape()) + " samples but generated set holds " +
                      numerics::shape_string(b.sample_shape()));
}

// The checkpointed architecture must match the data it is asked to score.
void require_arch_fits(const flow::FlowModel& m, const data::Dataset& d, const fs::path& ckpt) {
  if (d.empty()) return;
  if (m.is_image_model() != d.is_image() || m.sample_shape() != d.sample_shape())
    throw ArchMismatch("checkpoint " + ckpt.string() + " (" + m.arch().name() + ") expects " +
                       numerics::shape_string(m.sample_shape()) + " inputs but the data holds " +
                       numerics::shape_string(d.sample_shape()));
}

training::TrainHooks progress(Context& ctx, const std::string& tag) {
  training::TrainHooks h;
  if (ctx.verbose)
    h.on_epoch = [&ctx, tag](const training::EpochRecord& r) {
      ctx.err << "[" << tag << "] epoch " << r.epoch << " train_nll " << r.train_nll << " val_nll " << r.val_nll
              << " (" << r.seconds << " s)\n";
    };
  return h;
}

double mean_of(const std::vector<double>& v, const std::vector<std::size_t>& idx, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += v[idx[i]];
  return acc / static_cast<double>(n);
}

}  // namespace

std::optional<fs::path> cache_dir_from_env() {
  const char* v = std::getenv("FLOWLHD_CACHE_DIR");
  if (v == nullptr || *v == '\0') return std::nullopt;
  return fs::path(v);
}

std::string finish_csv(const std::string& body, const RunConfig& cfg) {
  return body + "# config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed) + "\n";
}

void emit(Context& ctx, const fs::path& path, const std::string& text) {
  if (path.empty()) {
    ctx.out << text;
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

std::string dataset_digest(const data::Dataset& d) {
  std::uint64_t h = numerics::splitmix64(d.is_image() ? 1 : 2);
  const auto mix = [&h](std::string_view bytes) { h = numerics::splitmix64(h ^ numerics::fnv1a64(bytes)); };
  mix(numerics::shape_string(d.sample_shape()));
  for (const auto& id : d.ids()) mix(id);
  if (d.is_image()) {
    const auto& px = d.images().pixels;
    mix(std::string_view(reinterpret_cast<const char*>(px.data()), px.size()));
  } else {
    const auto v = d.points().values();
    mix(std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double)));
  }
  return hex64(h);
}

std::uint64_t role_seed(std::uint64_t run_seed, std::string_view role) {
  return numerics::splitmix64(run_seed ^ numerics::fnv1a64(role));
}

flow::FlowModel train_or_load(const flow::ArchSpec& arch, const training::TrainConfig& tc, const data::Dataset& data,
                              Context& ctx, std::string* cache_path) {
  fs::path entry;
  if (ctx.cache_dir) {
    const nlohmann::json key{{"arch", arch.to_json()}, {"train", tc.to_json()}, {"data", dataset_digest(data)}};
    entry = *ctx.cache_dir / (hex64(numerics::fnv1a64(key.dump())) + ".fldc");
    if (fs::exists(entry)) {
      flow::FlowModel m = flow::load_checkpoint(entry, arch.name());
      if (m.arch() == arch) {
        if (ctx.verbose) ctx.err << "[cache] hit " << entry.string() << "\n";
        if (cache_path) *cache_path = entry.string();
        return m;
      }
    }
  }
  flow::FlowModel m = flow::build_model(arch, tc.seed);
  training::train(m, data, tc, progress(ctx, arch.name()));
  if (!entry.empty()) {
    fs::create_directories(entry.parent_path());
    flow::save_checkpoint(m, entry);
    if (cache_path) *cache_path = entry.string();
  }
  return m;
}

training::TrainHistory cmd_train(const RunConfig& cfg, const TrainArgs& args, Context& ctx) {
  if (args.out.empty()) throw ConfigError("train needs --out");
  const data::Dataset d = load(args.data.empty() ? cfg.data.real : args.data, cfg, "training");
  const flow::ArchSpec arch = cfg.arch.resolve(d.sample_shape());
  training::TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  flow::FlowModel m = flow::build_model(arch, tc.seed);
  training::TrainHistory h = training::train(m, d, tc, progress(ctx, "train"));
  if (args.out.has_parent_path()) fs::create_directories(args.out.parent_path());
  flow::save_checkpoint(m, args.out);
  fs::path hist = args.history;
  if (hist.empty()) hist = fs::path(args.out.string() + ".history.csv");
  emit(ctx, hist, finish_csv(training::history_csv(h), cfg));
  return h;
}

metrics::MetricResult cmd_fld(const RunConfig& cfg, const FldArgs& args, Context& ctx) {
  if (args.ckpt.empty()) throw ConfigError("fld needs --ckpt");
  flow::FlowModel m = flow::load_checkpoint(args.ckpt);
  const data::Dataset real = load(args.real.empty() ? cfg.data.real : args.real, cfg, "real");
  const data::Dataset gen = load(args.gen.empty() ? cfg.data.gen : args.gen, cfg, "generated");
  require_arch_fits(m, real, args.ckpt);
  require_arch_fits(m, gen, args.ckpt);
  metrics::MetricResult r = metrics::fld(m, real, gen, cfg.seed);
  r.checkpoints = {fs::absolute(args.ckpt).lexically_normal().string()};
  nlohmann::json j = r.to_json();
  j["config_hash"] = cfg.hash();
  emit(ctx, args.out, j.dump(2) + "\n");
  return r;
}

metrics::MetricResult cmd_dfld(const RunConfig& cfg, const DfldArgs& args, Context& ctx) {
  const data::Dataset real = load(args.real.empty() ? cfg.data.real : args.real, cfg, "real");
  const data::Dataset gen = load(args.gen.empty() ? cfg.data.gen : args.gen, cfg, "generated");
  require_same_input(real, gen);
  const flow::ArchSpec arch = cfg.arch.resolve(real.sample_shape());
  training::TrainConfig tr = cfg.train;
  tr.validation_fraction = 0.0;  // both flows train on everything they are evaluated on
  training::TrainConfig tg = tr;
  tr.seed = role_seed(cfg.seed, "flow_r");
  tg.seed = role_seed(cfg.seed, "flow_g");
  // Size checks up front so a tiny set fails before the first model trains.
  for (const data::Dataset* d : {&real, &gen})
    if (d->size() < tr.batch_size)
      throw DataError(std::string(d == &real ? "real" : "generated") + " set has " + std::to_string(d->size()) +
                      " samples, fewer than batch_size " + std::to_string(tr.batch_size));

  flow::FlowModel flow_r = train_or_load(arch, tr, real, ctx);
  flow::FlowModel flow_g =
      args.reuse_gen_ckpt ? flow::decode_checkpoint(flow::encode_checkpoint(flow_r)) : train_or_load(arch, tg, gen, ctx);

  const fs::path dir = args.ckpt_dir.empty() ? fs::path("dfld_checkpoints") : args.ckpt_dir;
  fs::create_directories(dir);
  const fs::path pr = fs::absolute(dir / "flow_r.fldc").lexically_normal();
  const fs::path pg = fs::absolute(dir / (args.reuse_gen_ckpt ? "flow_r.fldc" : "flow_g.fldc")).lexically_normal();
  flow::save_checkpoint(flow_r, pr);
  if (!args.reuse_gen_ckpt) flow::save_checkpoint(flow_g, pg);

  metrics::MetricResult r = metrics::dfld(flow_r, flow_g, real, gen, cfg.seed);
  r.checkpoints = {pr.string(), pg.string()};
  nlohmann::json j = r.to_json();
  j["config_hash"] = cfg.hash();
  emit(ctx, args.out, j.dump(2) + "\n");
  return r;
}

void cmd_distort(const RunConfig& cfg, const DistortArgs& args, Context&) {
  if (args.out.empty()) throw ConfigError("distort needs --out");
  distortion::DistortionSpec spec{distortion::parse_kind(args.kind.empty() ? cfg.experiment.kind : args.kind),
                                  args.param, cfg.seed};
  spec.validate();
  const data::Dataset in = load(args.in.empty() ? cfg.data.real : args.in, cfg, "input");
  if (!in.is_image()) throw DataError("distort needs images, " + args.in.string() + " holds points");
  const data::Dataset out = data::Dataset::from_images(in.ids(), distortion::apply(in.images(), spec));
  if (fs::is_directory(args.in.empty() ? cfg.data.real : args.in)) {
    data::write_image_dir(args.out, out);
  } else {
    if (args.out.has_parent_path()) fs::create_directories(args.out.parent_path());
    data::write_tensor_file(args.out, out.images());
  }
}

std::vector<Demo2dRow> cmd_demo2d(const RunConfig& cfg, const fs::path& out, Context& ctx) {
  const auto& seps = cfg.experiment.separations;
  if (seps.empty()) throw ConfigError("demo2d needs at least one separation");
  for (double s : seps) data::Mixture4Spec{s}.validate();
  const flow::ArchSpec arch = cfg.arch.resolve({2});

  // One data stream for every cell: R is shared and each mixture reuses its normal draws.
  const RngStream data_rng = RngStream(cfg.seed).split("demo2d-data");
  const data::Dataset real = data::Dataset::from_points(data::gen_reference_gaussian(cfg.experiment.n, data_rng));
  training::TrainConfig tr = cfg.train;
  tr.validation_fraction = 0.0;
  training::TrainConfig tg = tr;
  tr.seed = role_seed(cfg.seed, "flow_r");
  tg.seed = role_seed(cfg.seed, "flow_g");
  flow::FlowModel flow_r = train_or_load(arch, tr, real, ctx);

  std::vector<Demo2dRow> rows;
  std::string csv = "separation,dfld,mean_abs_diff\n";
  for (double s : seps) {
    const data::Dataset gen = data::Dataset::from_points(data::gen_mixture4(cfg.experiment.n, s, data_rng));
    flow::FlowModel flow_g = train_or_load(arch, tg, gen, ctx);
    const metrics::MetricResult r = metrics::dfld(flow_r, flow_g, real, gen, cfg.seed);
    rows.push_back({s, r.value, r.mean_abs_diff.value_or(0.0)});
    csv += fmt(s) + "," + fmt(r.value) + "," + fmt(rows.back().mean_abs_diff) + "\n";
    if (ctx.verbose) ctx.err << "[demo2d] s=" << s << " dfld=" << r.value << "\n";
  }
  emit(ctx, out, finish_csv(csv, cfg));
  return rows;
}

std::vector<SampleEfficiencyRow> sample_efficiency(const std::vector<double>& ll_real, const std::vector<double>& ll_gen,
                                                   const std::vector<std::size_t>& sizes, std::size_t runs,
                                                   std::uint64_t seed) {
  if (runs == 0) throw ConfigError("runs must be >= 1");
  for (std::size_t n : sizes)
    if (n == 0 || n > ll_real.size() || n > ll_gen.size())
      throw DataError("subsample size " + std::to_string(n) + " exceeds the set sizes (" +
                      std::to_string(ll_real.size()) + " real, " + std::to_string(ll_gen.size()) + " generated)");
  // Run r uses one permutation per set; every size takes a prefix, so subsamples are nested.
  const RngStream root = RngStream(seed).split("subsample");
  std::vector<std::vector<std::size_t>> pr(runs), pg(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    pr[r] = root.split(r).split("real").permutation(ll_real.size());
    pg[r] = root.split(r).split("gen").permutation(ll_gen.size());
  }
  std::vector<SampleEfficiencyRow> rows;
  for (std::size_t n : sizes) {
    std::vector<double> v(runs);
    for (std::size_t r = 0; r < runs; ++r) {
      const double mr = mean_of(ll_real, pr[r], n), mg = mean_of(ll_gen, pg[r], n);
      if (!(mr < 0.0) || !(mg < 0.0)) throw DomainError("FLD undefined: non-negative mean log-likelihood in subsample");
      v[r] = mg / mr;
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(runs);
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    SampleEfficiencyRow row{n, mean, runs > 1 ? std::sqrt(ss / static_cast<double>(runs - 1)) : 0.0, runs == 1};
    rows.push_back(row);
  }
  return rows;
}

std::vector<SampleEfficiencyRow> cmd_sample_efficiency(const RunConfig& cfg, const SampleEfficiencyArgs& args,
                                                       Context& ctx) {
  if (args.ckpt.empty()) throw ConfigError("sample-efficiency needs --ckpt");
  flow::FlowModel m = flow::load_checkpoint(args.ckpt);
  const data::Dataset real = load(args.real.empty() ? cfg.data.real : args.real, cfg, "real");
  const data::Dataset gen = load(args.gen.empty() ? cfg.data.gen : args.gen, cfg, "generated");
  require_arch_fits(m, real, args.ckpt);
  require_arch_fits(m, gen, args.ckpt);
  for (std::size_t n : cfg.experiment.sizes)
    if (n > real.size() || n > gen.size())
      throw DataError("subsample size " + std::to_string(n) + " exceeds the set sizes (" + std::to_string(real.size()) +
                      " real, " + std::to_string(gen.size()) + " generated)");
  // Noise is keyed by sample id, so scoring every sample once gives the same
  // values as re-scoring each subsample.
  const auto lr = metrics::evaluate_log_likelihoods(m, real, cfg.seed);
  const auto lg = metrics::evaluate_log_likelihoods(m, gen, cfg.seed);
  const auto rows = sample_efficiency(lr, lg, cfg.experiment.sizes, cfg.experiment.runs, cfg.seed);
  std::string csv = "n,mean_fld,std_fld,degenerate\n";
  for (const auto& r : rows)
    csv += std::to_string(r.n) + "," + fmt(r.mean_fld) + "," + fmt(r.std_fld) + "," + (r.degenerate ? "1" : "0") + "\n";
  emit(ctx, args.out, finish_csv(csv, cfg));
  return rows;
}

std::vector<MonotonicityRow> monotonicity(flow::FlowModel& model, const data::Dataset& held_out,
                                          const std::string& kind, const std::vector<double>& grid,
                                          std::uint64_t seed) {
  if (!held_out.is_image()) throw DataError("monotonicity needs an image set");
  const distortion::DistortionKind k = distortion::parse_kind(kind);
  for (double p : grid) distortion::DistortionSpec{k, p, seed}.validate();
  const auto lr = metrics::evaluate_log_likelihoods(model, held_out, seed);
  std::vector<MonotonicityRow> rows;
  for (double p : grid) {
    const distortion::DistortionSpec spec{k, p, seed};
    const data::Dataset gen = data::Dataset::from_images(held_out.ids(), distortion::apply(held_out.images(), spec));
    const auto lg = metrics::evaluate_log_likelihoods(model, gen, seed);
    double mr = 0.0, mg = 0.0;
    for (double v : lr) mr += v;
    for (double v : lg) mg += v;
    rows.push_back({p, metrics::fld_from_likelihoods(lr, lg), mr / static_cast<double>(lr.size()),
                    mg / static_cast<double>(lg.size())});
  }
  return rows;
}

std::vector<MonotonicityRow> cmd_monotonicity(const RunConfig& cfg, const MonotonicityArgs& args, Context& ctx) {
  if (args.ckpt.empty()) throw ConfigError("monotonicity needs --ckpt");
  flow::FlowModel m = flow::load_checkpoint(args.ckpt);
  const data::Dataset held = load(args.real.empty() ? cfg.data.real : args.real, cfg, "held-out");
  require_arch_fits(m, held, args.ckpt);
  const auto rows = monotonicity(m, held, cfg.experiment.kind, cfg.experiment.grid, cfg.seed);
  std::string csv = "param,fld,mean_ll_real,mean_ll_gen\n";
  for (const auto& r : rows)
    csv += fmt(r.param) + "," + fmt(r.fld) + "," + fmt(r.mean_ll_real) + "," + fmt(r.mean_ll_gen) + "\n";
  emit(ctx, args.out, finish_csv(csv, cfg));
  return rows;
}

void cmd_gen_data(const RunConfig& cfg, const GenDataArgs& args, Context&) {
  if (args.out.empty()) throw ConfigError("gen-data needs --out");
  const RngStream rng = RngStream(cfg.seed).split("gen-data").split(args.kind);
  const bool tensor_out = args.out.extension() == ".tnsr";
  if (args.out.has_parent_path()) fs::create_directories(args.out.parent_path());
  if (args.kind == "shapes") {
    data::ImageBatch b = data::gen_shapes(args.n, args.channels, args.size, args.size, rng, args.levels, args.jitter);
    if (tensor_out) {
      data::write_tensor_file(args.out, b);
    } else {
      if (args.channels != 3) throw ConfigError("PNG output needs 3 channels");
      data::write_image_dir(args.out, data::Dataset::from_images(std::move(b)));
    }
    return;
  }
  if (!tensor_out) throw ConfigError("point sets are written as .tnsr files");
  numerics::Tensor pts;
  if (args.kind == "two-moons")
    pts = data::gen_two_moons(args.n, args.noise, rng);
  else if (args.kind == "gaussian")
    pts = data::gen_reference_gaussian(args.n, rng);
  else if (args.kind == "mixture4")
    pts = data::gen_mixture4(args.n, args.separation, rng);
  else
    throw ConfigError("unknown data kind '" + args.kind + "'; valid kinds: two-moons, gaussian, mixture4, shapes");
  data::write_tensor_file(args.out, pts);
}

}  // namespace flowlhd::cli
