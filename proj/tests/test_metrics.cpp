#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "flowlhd/data/synthetic.hpp"
#include "flowlhd/distortion/distortion.hpp"
#include "flowlhd/errors.hpp"
#include "flowlhd/flow/arch.hpp"
#include "flowlhd/flow/checkpoint.hpp"
#include "flowlhd/metrics/metrics.hpp"
#include "support/flow_fixtures.hpp"
#include "support/oracles.hpp"

using namespace flowlhd;
using namespace flowlhd::metrics;
using data::Dataset;
using flow::FlowModel;
using numerics::RngStream;
using numerics::Tensor;

namespace {

FlowModel tiny_image_flow(std::uint64_t seed) {
  auto a = flow::parse_arch("dfld-simple", 1, 4, 4);
  a.hidden = {3, 3};
  a.gated_blocks = 1;
  a.dequant_layers = 2;
  FlowModel m = flow::build_model(a, seed);
  RngStream rng(seed + 100);
  oracle::randomize_params(m.params(), rng, 0.05);
  return m;
}

FlowModel random_2d_flow(std::uint64_t seed) {
  auto a = flow::parse_arch("flow2d(3)");
  a.hidden = {8};
  FlowModel m = flow::build_model(a, seed);
  RngStream rng(seed + 7);
  oracle::randomize_params(m.params(), rng, 0.2);
  return m;
}

Dataset image_set(std::size_t n, std::uint64_t seed) {
  return Dataset::from_images(data::gen_shapes(n, 1, 4, 4, RngStream(seed)));
}

Dataset point_set(std::size_t n, std::uint64_t seed) {
  return Dataset::from_points(data::gen_two_moons(n, 0.1, RngStream(seed)));
}

double oracle_log_prob(FlowModel& m, const std::vector<double>& x) {
  const auto f = [&](const std::vector<double>& v) { return oracle::flat_forward(m, v); };
  return oracle::normal_log_pdf_sum(f(x)) + oracle::log_abs_det(oracle::numeric_jacobian(f, x, 1e-5));
}

}  // namespace

TEST_CASE("FLD arithmetic and error cases") {
  const std::vector<double> real{-2000.0, -1900.0, -2100.0};
  const std::vector<double> gen{-2400.0, -2400.0};
  CHECK(fld_from_likelihoods(real, gen) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(fld_from_likelihoods(real, real) == 1.0);
  CHECK_THROWS_AS(fld_from_likelihoods(std::vector<double>{1.0, 2.0}, gen), DomainError);
  CHECK_THROWS_AS(fld_from_likelihoods(real, std::vector<double>{0.0}), DomainError);
  CHECK_THROWS_AS(fld_from_likelihoods({}, gen), DataError);
  CHECK_THROWS_AS(fld_from_likelihoods(real, {}), DataError);
}

TEST_CASE("D-FLD arithmetic") {
  CHECK(dfld_from_distances(std::vector<double>{0.0, 0.0}) == 0.0);
  CHECK(dfld_from_distances(std::vector<double>{1.0}) == 1.0);
  CHECK(dfld_from_distances(std::vector<double>{2.0, 4.0}) == 2.0);
  CHECK_THROWS_AS(dfld_from_distances({}), DataError);
}

TEST_CASE("FLD of a set against itself is exactly one") {
  FlowModel m = tiny_image_flow(1);
  const Dataset r = image_set(12, 3);
  const MetricResult res = fld(m, r, r, 99);
  CHECK(res.value == 1.0);
  CHECK(res.mean_ll_real < 0.0);
  CHECK(res.n_real == 12);
  CHECK(res.metric == "FLD");
  CHECK_THROWS_AS(fld(m, r, Dataset::from_images(data::ImageBatch(0, 1, 4, 4)), 1), DataError);
}

TEST_CASE("D-FLD is zero for a flow against its own checkpoint") {
  FlowModel a = tiny_image_flow(2);
  FlowModel b = flow::decode_checkpoint(flow::encode_checkpoint(a));
  const Dataset r = image_set(6, 4), g = image_set(5, 5);
  for (double d : per_image_distance(a, b, r, 17)) CHECK(d == 0.0);
  const MetricResult res = dfld(a, b, r, g, 17);
  CHECK(res.value == 0.0);
  CHECK(res.n_real + res.n_gen == 11);
}

TEST_CASE("D-FLD is symmetric, nonnegative and order independent") {
  FlowModel a = random_2d_flow(3), b = random_2d_flow(4);
  const Dataset r = point_set(40, 1), g = point_set(30, 2);
  const double ab = dfld(a, b, r, g, 0).value;
  const double ba = dfld(b, a, r, g, 0).value;
  CHECK(ab > 0.0);
  CHECK(ab == doctest::Approx(ba).epsilon(1e-15));

  // Reordering the input rows leaves the metric unchanged because sets are id-sorted.
  std::vector<std::string> ids(r.ids().rbegin(), r.ids().rend());
  std::vector<std::size_t> rev(r.size());
  for (std::size_t i = 0; i < rev.size(); ++i) rev[i] = r.size() - 1 - i;
  const Dataset r_rev = Dataset::from_points(ids, r.point_rows(rev));
  CHECK(dfld(a, b, r_rev, g, 0).value == ab);
}

TEST_CASE("FLD is invariant to the file order") {
  FlowModel m = tiny_image_flow(5);
  const Dataset r = image_set(10, 6);
  data::ImageBatch g_imgs = distortion::apply(r.images(), {distortion::DistortionKind::gaussian_noise, 0.3, 1});
  const Dataset g = Dataset::from_images(r.ids(), g_imgs);
  std::vector<std::size_t> perm = RngStream(8).permutation(r.size());
  std::vector<std::string> pid;
  for (auto i : perm) pid.push_back(r.ids()[i]);
  const Dataset g_perm = Dataset::from_images(pid, g_imgs.select(perm));
  const double v = fld(m, r, g, 4).value;
  CHECK(fld(m, r, g_perm, 4).value == v);
  CHECK(v != 1.0);
}

TEST_CASE("per-sample distance matches a brute-force Jacobian oracle on 2D points") {
  FlowModel a = random_2d_flow(11), b = random_2d_flow(12);
  const Dataset x = point_set(15, 9);
  const auto d = per_image_distance(a, b, x, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto row = x.points().sample(i);
    const std::vector<double> xi(row.begin(), row.end());
    const double expect = std::abs(oracle_log_prob(a, xi) - oracle_log_prob(b, xi));
    CHECK(oracle::rel_err(d[i], expect) < 1e-4);
  }
}

TEST_CASE("per-sample distance of a known likelihood gap") {
  // Two single-actnorm flows at x = 0: L_r = -log(2 pi), L_g = L_r + 2 l.
  auto arch = flow::parse_arch("flow2d(1)");
  arch.hidden = {4};
  FlowModel r = flow::build_model(arch, 1), g = flow::build_model(arch, 1);
  auto& ls = g.params().get("flow.layer0.actnorm.log_scale");
  for (std::size_t i = 0; i < ls.value.numel(); ++i) ls.value[i] = 1.25;
  const Dataset x = Dataset::from_points(Tensor({1, 2}));
  const auto lr = evaluate_log_likelihoods(r, x, 0), lg = evaluate_log_likelihoods(g, x, 0);
  CHECK(lr[0] == doctest::Approx(-std::log(2.0 * M_PI)));
  CHECK(lg[0] - lr[0] == doctest::Approx(2.5));
  CHECK(per_image_distance(r, g, x, 0)[0] == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("mismatched inputs raise ConfigError") {
  FlowModel img = tiny_image_flow(1), pts = random_2d_flow(1);
  const Dataset p = point_set(4, 1);
  CHECK_THROWS_AS(per_image_distance(img, pts, p, 0), ConfigError);
  CHECK_THROWS_AS(evaluate_log_likelihoods(img, p, 0), ConfigError);
  CHECK_THROWS_AS(fld(img, Dataset::from_images(data::gen_shapes(3, 3, 4, 4, RngStream(1))), image_set(3, 1), 0),
                  ConfigError);
}

TEST_CASE("image likelihoods do not depend on evaluation chunking") {
  FlowModel m = tiny_image_flow(7);
  const Dataset r = image_set(9, 2);
  const auto a = evaluate_log_likelihoods(m, r, 5, 64);
  const auto b = evaluate_log_likelihoods(m, r, 5, 2);
  CHECK(a == b);
  const auto c = evaluate_log_likelihoods(m, r, 6, 64);
  CHECK(a != c);
  for (double v : a) CHECK(v < 0.0);
}

TEST_CASE("result metadata and likelihood tables") {
  FlowModel a = random_2d_flow(3), b = random_2d_flow(4);
  const Dataset r = point_set(5, 1), g = point_set(4, 2);
  const DfldDetail det = dfld_detailed(a, b, r, g, 3);
  det.real.validate();
  det.gen.validate();
  CHECK(det.real.csv().rfind("id,ll_r,ll_g\n", 0) == 0);
  const auto j = det.result.to_json();
  for (const char* key : {"metric", "value", "n_real", "n_gen", "mean_ll_gen", "mean_ll_real", "seed", "checkpoints"})
    CHECK(j.contains(key));
  CHECK(j["ll_units"] == kLikelihoodUnits);
  REQUIRE(det.result.mean_abs_diff.has_value());
  CHECK(det.result.value == doctest::Approx(std::log2(1.0 + *det.result.mean_abs_diff)).epsilon(1e-15));

  LikelihoodTable bad{{"a", "a"}, {-1.0, -2.0}, std::nullopt};
  CHECK_THROWS_AS(bad.validate(), DataError);
  LikelihoodTable nan_table{{"a"}, {NAN}, std::nullopt};
  CHECK_THROWS_AS(nan_table.validate(), DataError);
  CHECK_THROWS_AS(dfld(a, b, Dataset::from_points(Tensor({0, 2})), Dataset::from_points(Tensor({0, 2})), 0), DataError);
}
