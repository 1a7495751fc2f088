#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "mlocrisk/errors.hpp"
#include "mlocrisk/experiments.hpp"
#include "oracles.hpp"

using namespace mlocrisk;

TEST_CASE("closed-form toy minimizer matches the oracle") {
  for (double eta : {1.0, 2.0, 8.0, 128.0}) {
    CHECK(toy_mean_variance_minimizer(eta, 0, 1, 2, 0.1) == doctest::Approx(oracle::toy_h_star(eta)).epsilon(1e-12));
  }
  CHECK(oracle::toy_h_star(128.0) == doctest::Approx(0.039358708).epsilon(1e-7));
  CHECK(oracle::toy_h_star(1.0) == doctest::Approx(1.6366).epsilon(1e-4));
}

TEST_CASE("toy with zero iterations keeps the initial pair") {
  auto cfg = default_config(ExperimentKind::Toy);
  cfg.iterations = 0;
  cfg.trials = 3;
  cfg.etas = {1.0, 4.0};
  const auto r = run_toy(cfg);
  REQUIRE(r.mean_h.size() == 2);
  CHECK(r.mean_h[0] == std::vector<double>{0.5});
  CHECK(r.mean_theta[1] == std::vector<double>{0.5});
}

TEST_CASE("toy short run is reproducible and orders h by eta") {
  auto cfg = default_config(ExperimentKind::Toy);
  cfg.iterations = 3000;
  cfg.trials = 8;
  cfg.etas = {1.0, 32.0};
  const auto a = run_toy(cfg), b = run_toy(cfg);
  CHECK(a.final_h == b.final_h);
  CHECK(a.mean_final_h(0) > a.mean_final_h(1));
  CHECK(a.mean_h[0].size() == 3001);
}

TEST_CASE("noiseless regression recovers the line for every sigma") {
  auto cfg = default_config(ExperimentKind::Linreg);
  cfg.noise_laws = {"none"};
  cfg.trials = 4;
  cfg.iterations = 20000;
  const auto r = run_linreg(cfg);
  for (std::size_t s = 0; s < r.settings.size(); ++s) {
    CAPTURE(r.settings[s].label);
    CHECK(std::abs(r.mean_and_se(0, s, 0).first - 1.0) <= 1e-2);
    CHECK(std::abs(r.mean_and_se(0, s, 1).first - 1.0) <= 1e-2);
  }
}

TEST_CASE("classification on separable blobs") {
  auto cfg = default_config(ExperimentKind::Classify);
  cfg.trials = 3;
  const auto r = run_classify(cfg);
  REQUIRE(r.settings.front().erm);
  for (std::size_t s = 0; s < r.settings.size(); ++s) {
    CAPTURE(r.settings[s].label);
    CHECK(r.mean_error(s, cfg.epochs) <= 0.02);
    CHECK(r.errors[s][0].size() == cfg.epochs + 1);
  }
  const auto m = r.metrics();
  // Histogram counts sum to the test size in every run.
  const auto& hist = m.tables.at("histograms");
  long long total = 0;
  for (const auto& row : hist.rows) total += std::get<long long>(row[5]);
  CHECK(total == static_cast<long long>(r.test_size * r.trials * r.settings.size()));
}

TEST_CASE("zero epochs gives the error of the initialization") {
  auto cfg = default_config(ExperimentKind::Classify);
  cfg.trials = 10;
  cfg.epochs = 0;
  cfg.data.blobs.classes = 4;
  cfg.data.blobs.dims = 4;
  const auto r = run_classify(cfg);
  std::vector<double> e;
  for (const auto& t : r.errors[0]) e.push_back(t[0]);
  const double m = std::accumulate(e.begin(), e.end(), 0.0) / e.size();
  double ss = 0.0;
  for (double x : e) ss += (x - m) * (x - m);
  const double se = std::sqrt(ss / (e.size() - 1) / e.size());
  CHECK(std::abs(m - 0.75) <= 3 * std::max(se, 0.5 / std::sqrt(static_cast<double>(r.test_size))));
}

TEST_CASE("risk curve at sigma = inf equals the mean-variance formula") {
  auto cfg = default_config(ExperimentKind::Classify);
  cfg.trials = 2;
  cfg.epochs = 2;
  cfg.sigmas = {2.0};
  cfg.include_erm = false;
  const auto trained = run_classify(cfg);
  const auto curve = risk_curve_from(trained, {kInf});
  REQUIRE(curve.risk.size() == 1);
  REQUIRE(curve.risk[0].size() == 1);
  double ref = 0.0;
  for (const auto& losses : trained.test_losses[0]) ref += mean_variance_closed_form(Sample(losses), 1.0);
  ref /= trained.test_losses[0].size();
  CHECK(std::abs(curve.risk[0][0] - ref) <= 1e-10);
}

TEST_CASE("loss histogram") {
  const std::vector<double> v{0.0, 0.5, 1.0, 1.0, 0.26};
  const auto h = loss_histogram(v, 4);
  CHECK(h.edges.front() == 0.0);
  CHECK(h.edges.back() == 1.0);
  CHECK(h.counts == std::vector<long long>{1, 1, 1, 2});
}

TEST_CASE("config validation names fields") {
  auto cfg = default_config(ExperimentKind::Linreg);
  cfg.sigmas.clear();
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("sigmas"), ConfigError);
  cfg = default_config(ExperimentKind::Toy);
  cfg.etas = {0.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = default_config(ExperimentKind::Classify);
  cfg.trials = 0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("trials"), ConfigError);
}
