#include "flowlhd/training/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>

#include "flowlhd/errors.hpp"
#include "flowlhd/flow/checkpoint.hpp"
#include "flowlhd/training/adam.hpp"

namespace flowlhd::training {

using numerics::RngStream;
using numerics::Tensor;

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("adam eps must be positive");
  if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm must be non-negative");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation_fraction must lie in [0, 1)");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"beta1", beta1},
          {"beta2", beta2},
          {"eps", eps},
          {"clip_norm", clip_norm},
          {"seed", seed},
          {"checkpoint_every", checkpoint_every},
          {"checkpoint_dir", checkpoint_dir.string()},
          {"validation_fraction", validation_fraction}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, const TrainConfig& base) {
  if (!j.is_object()) throw ConfigError("train section must be a JSON object");
  static const std::set<std::string> keys{"epochs", "batch_size", "learning_rate",    "beta1",
                                          "beta2",  "eps",        "clip_norm",        "seed",
                                          "checkpoint_every",     "checkpoint_dir",   "validation_fraction"};
  for (const auto& [k, _] : j.items())
    if (!keys.count(k)) throw ConfigError("unknown train key '" + k + "'");
  TrainConfig c = base;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.eps = j.value("eps", c.eps);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.seed = j.value("seed", c.seed);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    if (j.contains("checkpoint_dir")) c.checkpoint_dir = j.at("checkpoint_dir").get<std::string>();
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad train section: ") + e.what());
  }
  c.validate();
  return c;
}

double nll_from_log_probs(std::span<const double> log_probs, std::size_t dims, bool image) {
  if (log_probs.empty()) throw DataError("nll of an empty batch");
  double acc = 0.0;
  for (double lp : log_probs) acc += -lp;
  acc /= static_cast<double>(log_probs.size());
  if (image) acc /= static_cast<double>(dims) * std::log(2.0);
  if (!std::isfinite(acc)) throw NumericsError("non-finite loss");
  return acc;
}

double nll_loss(flow::FlowModel& model, const Tensor& points) {
  return nll_from_log_probs(model.log_prob(points), model.input_dims(), false);
}

double nll_loss(flow::FlowModel& model, const data::ImageBatch& images, const Tensor& noise) {
  return nll_from_log_probs(model.log_prob(images, noise), model.input_dims(), true);
}

Split split_indices(std::size_t n, double validation_fraction, std::uint64_t seed) {
  const auto perm = RngStream(seed).split("validation").permutation(n);
  const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  Split s;
  std::vector<bool> held(n, false);
  for (std::size_t i = 0; i < n_val && i < n; ++i) held[perm[i]] = true;
  for (std::size_t i = 0; i < n; ++i) (held[i] ? s.validation : s.train).push_back(i);
  return s;
}

namespace {

void check_match(const flow::FlowModel& model, const data::Dataset& data) {
  if (model.is_image_model() != data.is_image())
    throw ConfigError("model " + model.arch().name() + (model.is_image_model() ? " needs images" : " needs points") +
                      " but the dataset holds " + (data.is_image() ? "images" : "points"));
  if (data.sample_shape() != model.sample_shape())
    throw ConfigError("dataset samples are " + numerics::shape_string(data.sample_shape()) + " but model " +
                      model.arch().name() + " expects " + numerics::shape_string(model.sample_shape()));
}

// log p for the chosen samples; with coeff, also accumulates gradients.
std::vector<double> run_batch(flow::FlowModel& model, const data::Dataset& data, std::span<const std::size_t> idx,
                              const Tensor* noise, const std::vector<double>* coeff) {
  if (data.is_image()) {
    const data::ImageBatch x = data.images().select(idx);
    return coeff ? model.backprop_log_prob(x, *noise, *coeff) : model.log_prob(x, *noise);
  }
  const Tensor x = data.point_rows(idx);
  return coeff ? model.backprop_log_prob(x, *coeff) : model.log_prob(x);
}

Tensor id_noise(const flow::FlowModel& model, const data::Dataset& data, std::span<const std::size_t> idx,
                std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(idx.size());
  for (std::size_t i : idx) ids.push_back(data.ids()[i]);
  return flow::dequant_noise_for_ids(ids, model.sample_shape(), seed);
}

std::string last_good(flow::FlowModel& model, const TrainConfig& cfg) {
  if (cfg.checkpoint_dir.empty()) return "none (no checkpoint_dir configured)";
  std::filesystem::create_directories(cfg.checkpoint_dir);
  const auto path = cfg.checkpoint_dir / "last_good.fldc";
  flow::save_checkpoint(model, path);
  return path.string();
}

}  // namespace

double evaluate_nll(flow::FlowModel& model, const data::Dataset& data, std::span<const std::size_t> indices,
                    std::size_t chunk, std::uint64_t noise_seed) {
  if (indices.empty()) return std::nan("");
  check_match(model, data);
  double total = 0.0;
  for (std::size_t start = 0; start < indices.size(); start += chunk) {
    const auto part = indices.subspan(start, std::min(chunk, indices.size() - start));
    std::vector<double> lp;
    if (data.is_image()) {
      const Tensor noise = id_noise(model, data, part, noise_seed);
      lp = run_batch(model, data, part, &noise, nullptr);
    } else {
      lp = run_batch(model, data, part, nullptr, nullptr);
    }
    total += nll_from_log_probs(lp, model.input_dims(), data.is_image()) * static_cast<double>(part.size());
  }
  return total / static_cast<double>(indices.size());
}

TrainHistory train(flow::FlowModel& model, const data::Dataset& data, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  if (data.empty()) throw DataError("training set is empty");
  if (data.size() < cfg.batch_size)
    throw DataError("training set has " + std::to_string(data.size()) + " samples, fewer than batch_size " +
                    std::to_string(cfg.batch_size));
  check_match(model, data);

  const Split split = split_indices(data.size(), cfg.validation_fraction, cfg.seed);
  if (split.train.empty()) throw DataError("validation split leaves no training samples");
  const RngStream root = RngStream(cfg.seed).split("train");
  const std::uint64_t val_noise_seed = root.split("val-noise").next_u64();

  TrainHistory hist;
  if (cfg.epochs == 0) {
    hist.initial_val_nll = std::nan("");
    return hist;
  }

  if (model.needs_data_init()) {
    const auto order = RngStream(root.split("shuffle").split(std::uint64_t{1})).permutation(split.train.size());
    std::vector<std::size_t> first;
    for (std::size_t i = 0; i < std::min(cfg.batch_size, order.size()); ++i) first.push_back(split.train[order[i]]);
    model.initialize_from_data(data.point_rows(first));
  }
  hist.initial_val_nll = evaluate_nll(model, data, split.validation, cfg.batch_size, val_noise_seed);

  Adam opt(model.params(), AdamHyper{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps});
  const double norm_scale = data.is_image() ? static_cast<double>(model.input_dims()) * std::log(2.0) : 1.0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto order = RngStream(root.split("shuffle").split(epoch)).permutation(split.train.size());
    RngStream noise_rng = root.split("noise").split(epoch);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, order.size() - start);
      std::vector<std::size_t> idx(b);
      for (std::size_t i = 0; i < b; ++i) idx[i] = split.train[order[start + i]];
      const std::vector<double> coeff(b, -1.0 / (static_cast<double>(b) * norm_scale));

      model.params().zero_grad();
      std::vector<double> lp;
      try {
        Tensor noise;
        if (data.is_image()) noise = flow::dequant_noise(b, model.sample_shape(), noise_rng);
        lp = run_batch(model, data, idx, &noise, &coeff);
      } catch (const NumericsError& e) {
        throw NumericsError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + " step " +
                            std::to_string(hist.steps + 1) + "; last good checkpoint: " + last_good(model, cfg));
      }
      double loss = 0.0;
      for (std::size_t i = 0; i < b; ++i) loss += -lp[i] / norm_scale;
      const double grad_norm = model.params().grad_norm();
      if (!std::isfinite(loss) || !std::isfinite(grad_norm))
        throw NumericsError("non-finite loss at epoch " + std::to_string(epoch) + " step " +
                            std::to_string(hist.steps + 1) + "; last good checkpoint: " + last_good(model, cfg));
      if (cfg.clip_norm > 0.0) clip_grad_norm(model.params(), cfg.clip_norm);
      hist.max_clipped_grad_norm = std::max(hist.max_clipped_grad_norm, model.params().grad_norm());
      opt.step();
      ++hist.steps;
      loss_sum += loss;
      seen += b;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_nll = loss_sum / static_cast<double>(seen);
    rec.val_nll = evaluate_nll(model, data, split.validation, cfg.batch_size, val_noise_seed);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    hist.epochs.push_back(rec);
    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() && epoch % cfg.checkpoint_every == 0) {
      std::filesystem::create_directories(cfg.checkpoint_dir);
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%04zu.fldc", epoch);
      flow::save_checkpoint(model, cfg.checkpoint_dir / name);
      hist.checkpoints.push_back(cfg.checkpoint_dir / name);
    }
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  return hist;
}

std::string history_csv(const TrainHistory& h) {
  std::string out = "epoch,train_nll,val_nll,seconds\n";
  char line[160];
  for (const auto& r : h.epochs) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.3f\n", r.epoch, r.train_nll, r.val_nll, r.seconds);
    out += line;
  }
  return out;
}

}  // namespace flowlhd::training
