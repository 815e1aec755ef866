#include "dualrate/error.hpp"
#include "dualrate/experiment_harness.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>

using namespace dualrate;
using Catch::Approx;

namespace {

ExperimentConfig small(const std::string& signal, int b) {
  ExperimentConfig cfg;
  cfg.signal = signal;
  cfg.replications = b;
  return cfg;
}

}  // namespace

TEST_CASE("ise trivial cases") {
  const long n = 10001;
  Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(n, 0.0, 3.0).array().sin();
  CHECK(ise(g, g, 0.01, {0.0, 100.0}) == 0.0);
  Eigen::VectorXd shifted = g.array() + 0.3;
  CHECK(ise(shifted, g, 0.01, {22.0, 26.0}) == Approx(0.09 * 4.0).margin(1e-10));
  CHECK(ise(shifted, g, 0.01, {0.0, 100.0}) == Approx(9.0).margin(1e-10));
  CHECK_THROWS_AS(ise(shifted, g, 0.01, {90.0, 101.0}), Error);
  CHECK_THROWS_AS(ise(shifted, g, 0.01, {10.005, 20.0}), Error);
}

TEST_CASE("config derived quantities") {
  ExperimentConfig cfg;
  CHECK(cfg.cells() == 10000);
  CHECK(cfg.calibration_cells() == 500);
  CHECK(cfg.resolved_constant_depth() == cfg.rate.q1);
  const auto w = cfg.resolved_windows(make_signal("g3"));
  REQUIRE(w.size() == 4);
  CHECK(w[1].lo == 49.0);
  cfg.windows = {{10.0, 12.0}};
  CHECK(cfg.resolved_windows(make_signal("g3")).size() == 1);
}

TEST_CASE("config validation names the key") {
  auto expect_key = [](ExperimentConfig cfg, const std::string& key) {
    try {
      cfg.validate();
      FAIL("expected a validation error for " << key);
    } catch (const Error& e) {
      CHECK(e.category() == ErrorCategory::validation);
      CHECK(std::string(e.what()).rfind(key + ":", 0) == 0);
    }
  };
  ExperimentConfig cfg;
  cfg.replications = 0;
  expect_key(cfg, "B");
  cfg = {};
  cfg.calibration_fraction = 0.6;
  expect_key(cfg, "calibration_fraction");
  cfg = {};
  cfg.calibration_fraction = 0.001;
  expect_key(cfg, "calibration_fraction");
  cfg = {};
  cfg.windows = {{95.0, 105.0}};
  expect_key(cfg, "windows");
  cfg = {};
  cfg.rate.ell = 1;
  expect_key(cfg, "ell");
}

TEST_CASE("noiseless base sinusoid stays low and is recovered") {
  auto cfg = small("base", 1);
  cfg.noise.sigma = 0.0;
  cfg.threshold_sigma = 0.15;
  const auto ctx = StudyContext::make(cfg);
  const auto r = run_replication(ctx, 0, SamplingMode::dual);
  CHECK(r.upswitches == 0);
  CHECK(r.sigma_hat == 0.15);
  // At the low rate the held datum lags g by half a period d = ell xi on
  // average, so the interior error is about g' d / 2 and the ISE over [10, 90]
  // is close to (d^2 / 4) int g'^2.
  const auto kept = run_replication(ctx, 0, SamplingMode::dual, 0, true);
  const double d = cfg.rate.ell * cfg.rate.xi;
  const double w = 0.06 * 3.14159265358979323846;
  double slope2 = 0.0;
  for (double t = 10.0; t < 90.0; t += 0.001) slope2 += std::pow(2.4 * w * std::cos(w * t), 2) * 0.001;
  const double predicted = d * d / 4.0 * slope2;
  CHECK(ise(kept.paths->ghat, kept.paths->g, 0.01, {10.0, 90.0}) == Approx(predicted).epsilon(0.15));
  // the whole interval adds the two boundary stretches on top
  CHECK(r.ise_full < 0.0105);
}

TEST_CASE("replications are deterministic and keep their paths on request") {
  const auto ctx = StudyContext::make(small("g1", 1));
  const auto a = run_replication(ctx, 3, SamplingMode::dual, 0, true);
  const auto b = run_replication(ctx, 3, SamplingMode::dual);
  CHECK(a.ise_full == b.ise_full);
  CHECK(a.samples == b.samples);
  REQUIRE(a.paths);
  CHECK(a.paths->t.size() == 10001);
  CHECK(a.paths->trace);
  long observed = 0;
  for (Eigen::Index m = 0; m < a.paths->y.size(); ++m) observed += std::isfinite(a.paths->y[m]) ? 1 : 0;
  CHECK(observed == a.samples);
  CHECK(a.samples <= 10001);
  // calibration prefix at the high rate
  for (Eigen::Index m = 0; m < 500; ++m) CHECK(std::isfinite(a.paths->y[m]));

  const auto c = run_replication(ctx, 4, SamplingMode::dual);
  CHECK(c.ise_full != a.ise_full);
}

TEST_CASE("constant mode spends the given budget") {
  const auto ctx = StudyContext::make(small("g2", 1));
  const auto r = run_replication(ctx, 0, SamplingMode::constant, 2500, true);
  CHECK(r.samples == 2500);
  CHECK(r.upswitches == 0);
  CHECK_THROWS_AS(run_replication(ctx, 0, SamplingMode::constant, 100), Error);
}

TEST_CASE("summaries") {
  const auto m = summarize({1.0, 2.0, 4.0, 5.0});
  CHECK(m.mise == 3.0);
  CHECK(m.mc_stderr == Approx(std::sqrt(10.0 / 3.0 / 4.0)));
  CHECK(summarize({7.0}).mc_stderr == 0.0);

  std::vector<ReplicationResult> rs(4);
  const double ise_values[] = {0.5, 0.1, 0.3, 0.3};
  for (std::uint32_t i = 0; i < 4; ++i) {
    rs[i].replication = i;
    rs[i].ise_full = ise_values[i];
  }
  // sorted: 0.1 (1), 0.3 (2), 0.3 (3), 0.5 (0); lower median is index 2
  CHECK(median_index(rs) == 2);
  CHECK_THROWS_AS(median_index({}), Error);
}

TEST_CASE("single replication study equals the replication") {
  const auto s = run_study(small("g1", 1), 1);
  const auto ctx = StudyContext::make(small("g1", 1));
  const auto r = run_replication(ctx, 0, SamplingMode::dual);
  CHECK(s.dual_full.mise == r.ise_full);
  CHECK(s.dual_pooled.mise == r.ise_pooled);
  CHECK(s.median_replication == 0);
  CHECK(s.mean_samples == static_cast<double>(r.samples));
}

TEST_CASE("budget matching and thread independence") {
  const auto one = run_study(small("g3", 4), 1);
  const auto three = run_study(small("g3", 4), 3);
  REQUIRE(one.dual.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::labs(one.dual[i].samples - one.constant[i].samples) <= 1);
    CHECK(one.dual[i].ise_full == three.dual[i].ise_full);
    CHECK(one.constant[i].ise_full == three.constant[i].ise_full);
  }
  CHECK(one.dual_full.mise == three.dual_full.mise);
  CHECK(one.constant_pooled.mise == three.constant_pooled.mise);
  CHECK(one.dual_windows.size() == 4);
}
