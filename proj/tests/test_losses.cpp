#include <doctest.h>

#include <cmath>
#include <random>

#include "mlocrisk/losses.hpp"
#include "oracles.hpp"

using namespace mlocrisk;

namespace {

void check_gradient(LossKind kind, const ModelShape& shape, const std::vector<double>& x, double label,
                    std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> params(shape.parameter_count());
  for (double& p : params) p = normal(rng);
  const Example ex{x, label};
  std::vector<double> grad(params.size());
  evaluate_loss(kind, shape, params, ex, grad);
  std::vector<double> scratch(params.size());
  auto f = [&](const std::vector<double>& p) { return evaluate_loss(kind, shape, p, ex, scratch); };
  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK(grad[i] == doctest::Approx(oracle::central_diff(f, params, i, 1e-6)).epsilon(1e-6).scale(1.0));
  }
}

}  // namespace

TEST_CASE("squared loss value and gradient") {
  const ModelShape shape{2, 1, true};
  LinearModel m{shape, {1.0, -2.0, 0.5}};
  const std::vector<double> x{3.0, 1.0};
  const auto r = squared_loss(m, Example{x, 2.0});
  // prediction 3 - 2 + 0.5 = 1.5, residual -0.5
  CHECK(r.value == doctest::Approx(0.25));
  CHECK(r.grad[0] == doctest::Approx(2 * -0.5 * 3.0));
  CHECK(r.grad[2] == doctest::Approx(-1.0));
}

TEST_CASE("absolute and hinge kinks use the zero subgradient") {
  const ModelShape shape{1, 1, false};
  const std::vector<double> x{2.0};
  LinearModel m{shape, {1.0}};
  auto a = absolute_loss(m, Example{x, 2.0});
  CHECK(a.value == 0.0);
  CHECK(a.grad[0] == 0.0);
  auto h = hinge_loss(LinearModel{shape, {0.5}}, Example{x, 1.0});
  CHECK(h.value == 0.0);
  CHECK(h.grad[0] == 0.0);
  auto h2 = hinge_loss(LinearModel{shape, {0.25}}, Example{x, 1.0});
  CHECK(h2.value == doctest::Approx(0.5));
  CHECK(h2.grad[0] == doctest::Approx(-2.0));
}

TEST_CASE("logistic loss is stable and matches a direct formula") {
  const ModelShape shape{2, 3, true};
  std::vector<double> p(shape.parameter_count(), 0.0);
  const std::vector<double> x{0.3, -0.7};
  const auto r = evaluate_loss(LossKind::Logistic, LinearModel{shape, p}, Example{x, 1.0});
  CHECK(r.value == doctest::Approx(std::log(3.0)));

  // Margin 50 in favour of the label: loss is about 2 e^-50.
  std::vector<double> q(shape.parameter_count(), 0.0);
  q[shape.model_dimension() + 0] = 50.0;
  const auto good = evaluate_loss(LossKind::Logistic, LinearModel{shape, q}, Example{x, 0.0});
  CHECK(good.value > 0.0);
  CHECK(good.value == doctest::Approx(2 * std::exp(-50.0)).epsilon(1e-10));
  const auto bad = evaluate_loss(LossKind::Logistic, LinearModel{shape, q}, Example{x, 2.0});
  CHECK(bad.value == doctest::Approx(50.0 + std::log1p(std::exp(-50.0) * 2)).epsilon(1e-12));
}

TEST_CASE("loss gradients match central differences") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x{normal(rng), normal(rng), normal(rng)};
    check_gradient(LossKind::Squared, ModelShape{3, 1, true}, x, normal(rng), rng);
    check_gradient(LossKind::Logistic, ModelShape{3, 4, true}, x, static_cast<double>(i % 4), rng);
    check_gradient(LossKind::Logistic, ModelShape{3, 2, false}, x, static_cast<double>(i % 2), rng);
  }
}

TEST_CASE("zero-one error") {
  const ModelShape shape{1, 3, false};
  const std::vector<double> p{0.0, 1.0, -1.0};
  const std::vector<double> x{2.0};
  CHECK(zero_one_error(shape, p, Example{x, 1.0}) == 0.0);
  CHECK(zero_one_error(shape, p, Example{x, 2.0}) == 1.0);
}

TEST_CASE("loss kind names") {
  for (auto k : {LossKind::Squared, LossKind::Absolute, LossKind::Hinge, LossKind::Logistic}) {
    CHECK(parse_loss_kind(loss_kind_name(k)) == k);
  }
  CHECK_THROWS(parse_loss_kind("huber"));
}
