#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mlocrisk/errors.hpp"
#include "mlocrisk/risk_eval.hpp"
#include "oracles.hpp"

using namespace mlocrisk;

namespace {

struct Instance {
  std::vector<double> z, w;
  double sigma, eta;
};

Instance random_instance(std::mt19937_64& rng, std::size_t max_n) {
  std::uniform_int_distribution<std::size_t> size(1, max_n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Instance inst;
  const std::size_t n = size(rng);
  const double scale = std::exp(2.0 * normal(rng));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    inst.z.push_back(scale * normal(rng) + 3.0 * normal(rng));
    inst.w.push_back(0.05 + unif(rng));
    total += inst.w.back();
  }
  for (double& v : inst.w) v /= total;
  const double pick = unif(rng);
  if (pick < 0.15) {
    inst.sigma = 0.0;
    inst.eta = 1.0 + 0.05 + 4.0 * unif(rng);
  } else if (pick < 0.3) {
    inst.sigma = kInf;
    inst.eta = 0.05 + 4.0 * unif(rng);
  } else {
    inst.sigma = std::exp(3.0 * normal(rng));
    inst.eta = 2.0 * inst.sigma / std::numbers::pi * (1.05 + 3.0 * unif(rng));
  }
  return inst;
}

}  // namespace

TEST_CASE("sample validation") {
  CHECK_THROWS_AS(Sample({}), std::invalid_argument);
  CHECK_THROWS_AS(Sample({1.0, std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(Sample({1.0, 2.0}, {0.5}), std::invalid_argument);
  CHECK_THROWS_AS(Sample({1.0, 2.0}, {0.5, -0.1}), std::invalid_argument);
  CHECK_THROWS_AS(Sample({1.0, 3.0}, {1.0, 3.0}), std::invalid_argument);
  const Sample s({1.0, 3.0}, {0.25, 0.75});
  CHECK(Sample(std::vector<double>(300001, 1.0)).mean() == doctest::Approx(1.0));
  CHECK(s.mean() == doctest::Approx(2.5));
  CHECK(s.variance() == doctest::Approx(0.75));
}

TEST_CASE("mean-variance closed form at sigma = inf") {
  CHECK(risk_empirical(Sample({0.0, 2.0}), RiskParams::make(kInf, 1.0)) == doctest::Approx(1.75));
  CHECK(risk_empirical(Sample({3.0, 3.0, 3.0}), RiskParams::make(kInf, 1.0)) == doctest::Approx(2.75));
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    auto inst = random_instance(rng, 50);
    const double eta = 0.1 + inst.eta;
    const Sample s(inst.z, inst.w);
    const double closed = mean_variance_closed_form(s, eta);
    CHECK(risk_empirical(s, RiskParams::make(kInf, eta)) == doctest::Approx(closed).epsilon(1e-12));
    // Closed form written out independently.
    double m = 0.0, v = 0.0;
    for (std::size_t k = 0; k < inst.z.size(); ++k) m += inst.w[k] * inst.z[k];
    for (std::size_t k = 0; k < inst.z.size(); ++k) v += inst.w[k] * (inst.z[k] - m) * (inst.z[k] - m);
    CHECK(closed == doctest::Approx(m + eta * v - 0.25 / eta).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("theta solver agrees with a brute-force oracle") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 300; ++i) {
    const auto inst = random_instance(rng, 8);
    const Sample s(inst.z, inst.w);
    const auto params = RiskParams::make(inst.sigma, inst.eta);
    const auto sol = solve_theta(s, params);
    const double ref = oracle::risk_brute(inst.z, inst.w, inst.sigma, inst.eta);
    CAPTURE(inst.sigma);
    CAPTURE(inst.eta);
    CHECK(sol.risk_value <= ref + 1e-6 * std::max(1.0, std::abs(ref)));
    CHECK(sol.risk_value == doctest::Approx(ref).epsilon(1e-6).scale(1.0));
    CHECK(sol.risk_value == doctest::Approx(oracle::joint_risk(inst.z, inst.w, sol.theta_star, inst.sigma, inst.eta)));
    if (std::isfinite(inst.sigma) && inst.sigma > 0.0) {
      CHECK(sol.residual <= 1e-10 * std::max(1.0, inst.sigma / inst.eta));
    }
  }
}

TEST_CASE("median mode picks the lower quantile") {
  // eta = 2: level (1 - 1/2)/2 = 1/4
  const Sample s({4.0, 1.0, 3.0, 2.0});
  const auto sol = solve_theta(s, RiskParams::make(0.0, 2.0));
  CHECK(sol.theta_star == 1.0);
  CHECK(sol.risk_value == doctest::Approx(oracle::joint_risk({1, 2, 3, 4}, {0.25, 0.25, 0.25, 0.25}, 1.0, 0.0, 2.0)));
}

TEST_CASE("joint risk slope matches finite differences") {
  const Sample s({0.3, -1.0, 2.5, 7.0});
  for (double sigma : {0.5, 2.0, kInf}) {
    const auto p = RiskParams::with_default_eta(sigma);
    for (double t : {-3.0, 0.1, 1.7}) {
      const double h = 1e-6;
      const double fd = (joint_risk(s, t + h, p) - joint_risk(s, t - h, p)) / (2 * h);
      CHECK(joint_risk_theta_slope(s, t, p) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("translation equivariance") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 5.0);
  for (int i = 0; i < 300; ++i) {
    const auto inst = random_instance(rng, 30);
    const Sample s(inst.z, inst.w);
    const auto p = RiskParams::make(inst.sigma, inst.eta);
    const double c = normal(rng);
    const double lhs = risk_empirical(s.shifted(c), p);
    const double rhs = risk_empirical(s, p) + c;
    CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("m-location recovers mean and median in symmetric cases") {
  CHECK(m_location(Sample({-1.0, 0.0, 4.0, 1.0, -4.0}), 1.0) == doctest::Approx(0.0).scale(1.0));
  CHECK(m_location(Sample({2.0, 2.0}), 0.3) == doctest::Approx(2.0));
  // Large sigma approaches the mean.
  const Sample skew({0.0, 0.0, 0.0, 10.0});
  CHECK(m_location(skew, 1e5) == doctest::Approx(skew.mean()).epsilon(1e-6));
  CHECK_THROWS(m_location(skew, 0.0));
}

TEST_CASE("non-monotone witness") {
  const auto pair = build_nonmonotone_pair(0.0, 2.0, 0.5, 0.05, 1.0);
  CHECK(pair.lower.max() <= pair.upper.min());
  CHECK(pair.lower_risk == doctest::Approx(3.70).epsilon(1e-12));
  CHECK(pair.upper_risk == doctest::Approx(2.45).epsilon(1e-12));
  CHECK(pair.lower_risk > pair.upper_risk);
  // Independent evaluation of both risks.
  const auto mv = [](const Sample& s) { return s.mean() + s.variance() - 0.25; };
  CHECK(mv(pair.lower) == doctest::Approx(pair.lower_risk));
  CHECK(mv(pair.upper) == doctest::Approx(pair.upper_risk));

  CHECK_THROWS_AS(build_nonmonotone_pair(0.0, 0.5, 2.0, 0.05, 1.0), InvalidWitness);
  CHECK_THROWS_AS(build_nonmonotone_pair(0.0, 1.0, 0.5, 2.0, 1.0), InvalidWitness);
}
