#include "flowlhd/metrics/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "flowlhd/errors.hpp"

namespace flowlhd::metrics {

void LikelihoodTable::validate() const {
  if (ll_r.size() != ids.size() || (ll_g && ll_g->size() != ids.size()))
    throw DataError("likelihood table columns have different lengths");
  if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size())
    throw DataError("likelihood table has duplicate ids");
  for (double v : ll_r)
    if (!std::isfinite(v)) throw DataError("non-finite log-likelihood in table");
  if (ll_g)
    for (double v : *ll_g)
      if (!std::isfinite(v)) throw DataError("non-finite log-likelihood in table");
}

std::string LikelihoodTable::csv() const {
  std::string out = ll_g ? "id,ll_r,ll_g\n" : "id,ll_r\n";
  char buf[96];
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += ids[i];
    std::snprintf(buf, sizeof buf, ",%.17g", ll_r[i]);
    out += buf;
    if (ll_g) {
      std::snprintf(buf, sizeof buf, ",%.17g", (*ll_g)[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

nlohmann::json MetricResult::to_json() const {
  nlohmann::json j{{"metric", metric},
                   {"value", value},
                   {"n_real", n_real},
                   {"n_gen", n_gen},
                   {"mean_ll_gen", mean_ll_gen},
                   {"mean_ll_real", mean_ll_real},
                   {"seed", seed},
                   {"checkpoints", checkpoints},
                   {"ll_units", kLikelihoodUnits}};
  if (mean_abs_diff) j["mean_abs_diff"] = *mean_abs_diff;
  return j;
}

void require_compatible(const flow::FlowModel& model, const data::Dataset& set) {
  if (set.empty()) return;
  if (model.is_image_model() != set.is_image() || model.sample_shape() != set.sample_shape())
    throw ConfigError("flow " + model.arch().name() + " expects " + numerics::shape_string(model.sample_shape()) +
                      (model.is_image_model() ? " images" : " points") + ", set holds " +
                      numerics::shape_string(set.sample_shape()) + (set.is_image() ? " images" : " points"));
}

std::vector<double> evaluate_log_likelihoods(flow::FlowModel& model, const data::Dataset& set, std::uint64_t noise_seed,
                                             std::size_t chunk) {
  require_compatible(model, set);
  std::vector<double> out;
  out.reserve(set.size());
  for (std::size_t start = 0; start < set.size(); start += chunk) {
    const std::size_t n = std::min(chunk, set.size() - start);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = start + i;
    std::vector<double> lp;
    if (set.is_image()) {
      const std::span<const std::string> ids(set.ids().data() + start, n);
      lp = model.log_prob(set.images().select(idx), flow::dequant_noise_for_ids(ids, model.sample_shape(), noise_seed));
    } else {
      lp = model.log_prob(set.point_rows(idx));
    }
    for (double v : lp) {
      if (!std::isfinite(v)) throw NumericsError("non-finite log-likelihood during evaluation");
      out.push_back(v);
    }
  }
  return out;
}

std::vector<double> per_image_distance(flow::FlowModel& flow_r, flow::FlowModel& flow_g, const data::Dataset& set,
                                       std::uint64_t noise_seed) {
  if (flow_r.is_image_model() != flow_g.is_image_model() || flow_r.sample_shape() != flow_g.sample_shape())
    throw ConfigError("flows " + flow_r.arch().name() + " and " + flow_g.arch().name() + " take different inputs");
  const auto a = evaluate_log_likelihoods(flow_r, set, noise_seed);
  const auto b = evaluate_log_likelihoods(flow_g, set, noise_seed);
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::abs(a[i] - b[i]);
  return d;
}

double dfld_from_distances(std::span<const double> distances) {
  if (distances.empty()) throw DataError("D-FLD needs at least one sample");
  double acc = 0.0;
  for (double d : distances) acc += d;
  return std::log2(1.0 + acc / static_cast<double>(distances.size()));
}

namespace {

double mean(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

}  // namespace

double fld_from_likelihoods(std::span<const double> ll_real, std::span<const double> ll_gen) {
  if (ll_real.empty() || ll_gen.empty()) throw DataError("FLD needs nonempty real and generated sets");
  const double mr = mean(ll_real), mg = mean(ll_gen);
  if (!(mr < 0.0) || !(mg < 0.0))
    throw DomainError("FLD is undefined for non-negative mean log-likelihood (real " + std::to_string(mr) +
                      ", generated " + std::to_string(mg) + "); use D-FLD for continuous data");
  return mg / mr;
}

DfldDetail dfld_detailed(flow::FlowModel& flow_r, flow::FlowModel& flow_g, const data::Dataset& real,
                         const data::Dataset& gen, std::uint64_t noise_seed) {
  if (real.empty() && gen.empty()) throw DataError("D-FLD needs at least one real or generated sample");
  DfldDetail out;
  out.real = {real.ids(), evaluate_log_likelihoods(flow_r, real, noise_seed),
              evaluate_log_likelihoods(flow_g, real, noise_seed)};
  out.gen = {gen.ids(), evaluate_log_likelihoods(flow_r, gen, noise_seed),
             evaluate_log_likelihoods(flow_g, gen, noise_seed)};
  std::vector<double> d;
  for (const LikelihoodTable* t : {&out.real, &out.gen})
    for (std::size_t i = 0; i < t->ids.size(); ++i) d.push_back(std::abs(t->ll_r[i] - (*t->ll_g)[i]));
  MetricResult& r = out.result;
  r.metric = "D-FLD";
  r.value = dfld_from_distances(d);
  double acc = 0.0;
  for (double x : d) acc += x;
  r.mean_abs_diff = acc / static_cast<double>(d.size());
  r.n_real = real.size();
  r.n_gen = gen.size();
  r.mean_ll_real = real.empty() ? std::nan("") : mean(out.real.ll_r);
  r.mean_ll_gen = gen.empty() ? std::nan("") : mean(out.gen.ll_r);
  r.seed = noise_seed;
  return out;
}

MetricResult dfld(flow::FlowModel& flow_r, flow::FlowModel& flow_g, const data::Dataset& real, const data::Dataset& gen,
                  std::uint64_t noise_seed) {
  return dfld_detailed(flow_r, flow_g, real, gen, noise_seed).result;
}

MetricResult fld(flow::FlowModel& flow_r, const data::Dataset& real, const data::Dataset& gen, std::uint64_t noise_seed) {
  if (real.empty() || gen.empty()) throw DataError("FLD needs nonempty real and generated sets");
  const auto lr = evaluate_log_likelihoods(flow_r, real, noise_seed);
  const auto lg = evaluate_log_likelihoods(flow_r, gen, noise_seed);
  MetricResult r;
  r.metric = "FLD";
  r.value = fld_from_likelihoods(lr, lg);
  r.n_real = real.size();
  r.n_gen = gen.size();
  r.mean_ll_real = mean(lr);
  r.mean_ll_gen = mean(lg);
  r.seed = noise_seed;
  return r;
}

}  // namespace flowlhd::metrics
