#include "flowlhd/cli/app.hpp"

#include <functional>
#include <optional>

#include "CLI11.hpp"
#include "flowlhd/cli/commands.hpp"
#include "flowlhd/errors.hpp"
#include "flowlhd/flow/arch.hpp"

namespace flowlhd::cli {

namespace {

// Flags shared by every subcommand; only flags that were given override the config file.
struct Common {
  std::string config, cache_dir, arch;
  std::uint64_t seed = 0;
  std::size_t epochs = 0, batch_size = 0;
  double lr = 0.0;
  bool verbose = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Run seed");
    app->add_option("--arch", arch, "Architecture name");
    app->add_option("--epochs", epochs, "Training epochs");
    app->add_option("--batch-size", batch_size, "Training batch size");
    app->add_option("--lr", lr, "Adam learning rate");
    app->add_option("--cache-dir", cache_dir, "Checkpoint cache (default: $FLOWLHD_CACHE_DIR)");
    app->add_flag("-v,--verbose", verbose, "Progress on stderr");
  }

  RunConfig build(const CLI::App& used) const {
    RunConfig c = config.empty() ? RunConfig{} : RunConfig::load(config);
    const auto given = [&](const char* flag) { return used.get_option(flag)->count() > 0; };
    if (given("--seed")) c.seed = seed;
    if (given("--arch")) c.arch.name = arch;
    if (given("--epochs")) c.train.epochs = epochs;
    if (given("--batch-size")) c.train.batch_size = batch_size;
    if (given("--lr")) c.train.learning_rate = lr;
    return c;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flow-likelihood metrics for generative models", "flowlhd"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common common;
  std::function<void(RunConfig&, Context&)> action;

  auto finish = [&](RunConfig& cfg) {
    cfg.resolve_paths();
    cfg.validate();
  };

  // train
  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a flow on a data set");
  common.attach(train);
  train->add_option("--data", ta.data, "Image directory or tensor file")->required();
  train->add_option("--out", ta.out, "Checkpoint path")->required();
  train->add_option("--history", ta.history, "History CSV (default: <out>.history.csv)");
  train->callback([&] {
    action = [&](RunConfig& cfg, Context& ctx) {
      cfg.data.real = ta.data;
      finish(cfg);
      cmd_train(cfg, ta, ctx);
    };
  });

  // fld
  FldArgs fa;
  auto* fld = app.add_subcommand("fld", "FLD of a generated set under a trained flow");
  common.attach(fld);
  fld->add_option("--real", fa.real)->required();
  fld->add_option("--gen", fa.gen)->required();
  fld->add_option("--ckpt", fa.ckpt)->required();
  fld->add_option("--out", fa.out, "JSON path (default: stdout)");
  fld->callback([&] {
    action = [&](RunConfig& cfg, Context& ctx) {
      cfg.data.real = fa.real;
      cfg.data.gen = fa.gen;
      finish(cfg);
      cmd_fld(cfg, fa, ctx);
    };
  });

  // dfld
  DfldArgs da;
  auto* dfld = app.add_subcommand("dfld", "Train flows on both sets and compute D-FLD");
  common.attach(dfld);
  dfld->add_option("--real", da.real)->required();
  dfld->add_option("--gen", da.gen)->required();
  dfld->add_option("--ckpt-dir", da.ckpt_dir, "Where N_r and N_g are written (default: dfld_checkpoints)");
  dfld->add_flag("--reuse-gen-ckpt", da.reuse_gen_ckpt, "Use a copy of N_r as N_g");
  dfld->add_option("--out", da.out, "JSON path (default: stdout)");
  dfld->callback([&] {
    action = [&](RunConfig& cfg, Context& ctx) {
      cfg.data.real = da.real;
      cfg.data.gen = da.gen;
      finish(cfg);
      cmd_dfld(cfg, da, ctx);
    };
  });

  // distort
  DistortArgs xa;
  auto* distort = app.add_subcommand("distort", "Apply a distortion to an image set");
  common.attach(distort);
  distort->add_option("--in", xa.in)->required();
  distort->add_option("--out", xa.out)->required();
  distort->add_option("--kind", xa.kind)->required();
  distort->add_option("--param", xa.param)->required();
  distort->callback([&] {
    action = [&](RunConfig& cfg, Context& ctx) {
      cfg.data.real = xa.in;
      finish(cfg);
      cmd_distort(cfg, xa, ctx);
    };
  });

  // demo2d
  std::vector<double> seps;
  std::size_t demo_n = 0;
  std::string demo_out;
  auto* demo = app.add_subcommand("demo2d", "D-FLD on Gaussian vs four-component mixtures");
  common.attach(demo);
  auto* seps_opt = demo->add_option("--separations", seps, "Comma-separated separations")->delimiter(',');
  auto* n_opt = demo->add_option("--n", demo_n, "Points per set");
  demo->add_option("--out", demo_out, "CSV path (default: stdout)");
  demo->callback([&] {
    action = [&](RunConfig& cfg, Context& ctx) {
      if (*seps_opt) cfg.experiment.separations = seps;
      if (*n_opt) cfg.experiment.n = demo_n;
      finish(cfg);
      cmd_demo2d(cfg, demo_out, ctx);
    };
  });

  // sample-efficiency
  SampleEfficiencyArgs sa;
  std::vector<std::size_t> sizes;
  std::size_t runs = 0;
  auto* se = app.add_subcommand("sample-efficiency", "Spread of FLD over random subsamples");
  common.attach(se);
  se->add_option("--real", sa.real)->required();
  se->add_option("--gen", sa.gen)->required();
  se->add_option("--ckpt", sa.ckpt)->required();
  auto* sizes_opt = se->add_option("--sizes", sizes, "Comma-separated subsample sizes")->delimiter(',');
  auto* runs_opt = se->add_option("--runs", runs, "Subsamples per size");
  se->add_option("--out", sa.out, "CSV path (default: stdout)");
  se->callback([&] {
    action = [&](RunConfig& cfg, Context& ctx) {
      cfg.data.real = sa.real;
      cfg.data.gen = sa.gen;
      if (*sizes_opt) cfg.experiment.sizes = sizes;
      if (*runs_opt) cfg.experiment.runs = runs;
      finish(cfg);
      cmd_sample_efficiency(cfg, sa, ctx);
    };
  });

  // monotonicity
  MonotonicityArgs ma;
  std::string kind;
  std::vector<double> grid;
  auto* mono = app.add_subcommand("monotonicity", "FLD across a distortion grid on a held-out set");
  common.attach(mono);
  mono->add_option("--real", ma.real, "Held-out real images")->required();
  mono->add_option("--ckpt", ma.ckpt)->required();
  auto* kind_opt = mono->add_option("--kind", kind);
  auto* grid_opt = mono->add_option("--grid", grid, "Comma-separated parameter grid")->delimiter(',');
  mono->add_option("--out", ma.out, "CSV path (default: stdout)");
  mono->callback([&] {
    action = [&](RunConfig& cfg, Context& ctx) {
      cfg.data.real = ma.real;
      if (*kind_opt) cfg.experiment.kind = kind;
      if (*grid_opt) cfg.experiment.grid = grid;
      finish(cfg);
      cmd_monotonicity(cfg, ma, ctx);
    };
  });

  // gen-data
  GenDataArgs ga;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic data set");
  common.attach(gen);
  gen->add_option("--kind", ga.kind, "two-moons | gaussian | mixture4 | shapes")->required();
  gen->add_option("--n", ga.n);
  gen->add_option("--noise", ga.noise, "two-moons noise sd");
  gen->add_option("--separation", ga.separation, "mixture4 separation");
  gen->add_option("--size", ga.size, "shapes: image height and width");
  gen->add_option("--channels", ga.channels, "shapes: channels");
  gen->add_option("--levels", ga.levels, "shapes: intensity levels per channel (2-256)");
  gen->add_option("--jitter", ga.jitter, "shapes: max colour offset around each level");
  gen->add_option("--out", ga.out, "*.tnsr file or PNG directory")->required();
  gen->callback([&] {
    action = [&](RunConfig& cfg, Context& ctx) {
      finish(cfg);
      cmd_gen_data(cfg, ga, ctx);
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (app.get_subcommands().empty()) err << app.help();
    return 2;
  }

  try {
    RunConfig cfg = common.build(*app.get_subcommands().front());
    Context ctx{out, err, common.cache_dir.empty() ? cache_dir_from_env() : std::optional(std::filesystem::path(common.cache_dir)),
                common.verbose};
    action(cfg, ctx);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace flowlhd::cli
