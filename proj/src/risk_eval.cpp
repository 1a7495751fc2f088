#include "mlocrisk/risk_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mlocrisk/errors.hpp"

namespace mlocrisk {

namespace {

constexpr int kMaxNewtonIterations = 200;
constexpr double kHalfPi = std::numbers::pi / 2.0;

std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
}

struct AtanRoot {
  double theta;
  double residual;
  int iterations;
};

// Solves E atan((Z - theta)/sigma) = target for target in [0, pi/2). The left
// side is continuous and strictly decreasing in theta.
AtanRoot solve_atan_equation(const Sample& sample, double sigma, double target, double tol) {
  const auto z = sample.values();
  const auto w = sample.weights();
  const double reach = sigma * std::tan(std::min(target, kHalfPi - 1e-9));
  double lo = sample.min() - reach;
  double hi = sample.max();
  double theta = std::clamp(sample.mean() - reach, lo, hi);

  for (int it = 1; it <= kMaxNewtonIterations; ++it) {
    double phi = -target;
    double slope = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double r = (z[i] - theta) / sigma;
      phi += w[i] * std::atan(r);
      slope -= w[i] / (1.0 + r * r);
    }
    slope /= sigma;
    if (std::abs(phi) <= tol) return {theta, std::abs(phi), it};
    if (phi > 0.0) {
      lo = theta;
    } else {
      hi = theta;
    }
    double next = slope < 0.0 ? theta - phi / slope : lo;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    theta = next;
  }
  throw NonConvergence("theta solver did not reach tolerance " + std::to_string(tol) + " in " +
                       std::to_string(kMaxNewtonIterations) + " iterations (sigma=" +
                       format_sigma(sigma) + ")");
}

// Smallest minimizer of theta + eta * E|Z - theta|. The right-slope at an atom
// z_(k) is 1 - eta * (1 - 2 F(z_(k))), non-negative once F(z_(k)) >= (1 - 1/eta)/2.
double median_mode_theta(const Sample& sample, double eta) {
  const auto z = sample.values();
  const auto w = sample.weights();
  std::vector<std::size_t> order(z.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z[a] < z[b]; });
  const double level = 0.5 * (1.0 - 1.0 / eta);
  double cumulative = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    cumulative += w[order[k]];
    const bool last_of_tie = k + 1 == order.size() || z[order[k + 1]] != z[order[k]];
    if (last_of_tie && cumulative >= level - 1e-12) return z[order[k]];
  }
  return z[order.back()];
}

}  // namespace

Sample::Sample(std::vector<double> values) : Sample(values, uniform_weights(values.size())) {}

Sample::Sample(std::vector<double> values, std::vector<double> weights)
    : values_(std::move(values)), weights_(std::move(weights)) {
  if (values_.empty()) throw std::invalid_argument("Sample: at least one value required");
  if (weights_.size() != values_.size()) {
    throw std::invalid_argument("Sample: weights and values differ in length");
  }
  // Compensated sum, so long uniform samples do not trip the tolerance through rounding alone.
  double total = 0.0, carry = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw std::invalid_argument("Sample: non-finite value");
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i])) {
      throw std::invalid_argument("Sample: weights must be finite and non-negative");
    }
    const double t = total + weights_[i];
    carry += std::abs(total) >= weights_[i] ? (total - t) + weights_[i] : (weights_[i] - t) + total;
    total = t;
  }
  if (std::abs(total + carry - 1.0) > 1e-12) throw std::invalid_argument("Sample: weights must sum to 1");
}

double Sample::mean() const noexcept {
  double m = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) m += weights_[i] * values_[i];
  return m;
}

double Sample::variance() const noexcept {
  const double m = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double d = values_[i] - m;
    v += weights_[i] * d * d;
  }
  return v;
}

double Sample::min() const noexcept { return *std::min_element(values_.begin(), values_.end()); }
double Sample::max() const noexcept { return *std::max_element(values_.begin(), values_.end()); }

Sample Sample::shifted(double offset) const {
  std::vector<double> moved(values_);
  for (double& v : moved) v += offset;
  return Sample(std::move(moved), weights_);
}

double joint_risk(const Sample& sample, double theta, const RiskParams& params) {
  const auto z = sample.values();
  const auto w = sample.weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) acc += w[i] * dev_sigma(z[i] - theta, params);
  return theta + params.eta() * acc;
}

double joint_risk_theta_slope(const Sample& sample, double theta, const RiskParams& params) {
  const auto z = sample.values();
  const auto w = sample.weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) acc += w[i] * dev_sigma_prime(z[i] - theta, params);
  return 1.0 - params.eta() * acc;
}

ThetaSolution solve_theta(const Sample& sample, const RiskParams& params) {
  ThetaSolution out;
  switch (params.mode()) {
    case SigmaMode::Mean:
      out.theta_star = sample.mean() - 0.5 / params.eta();
      out.residual = std::abs(joint_risk_theta_slope(sample, out.theta_star, params));
      break;
    case SigmaMode::Median:
      out.theta_star = median_mode_theta(sample, params.eta());
      out.residual = 0.0;
      break;
    case SigmaMode::Interpolate: {
      const double target = params.sigma() / params.eta();
      const auto root =
          solve_atan_equation(sample, params.sigma(), target, 1e-10 * std::max(1.0, target));
      out.theta_star = root.theta;
      out.residual = root.residual;
      out.iterations = root.iterations;
      break;
    }
  }
  out.risk_value = joint_risk(sample, out.theta_star, params);
  return out;
}

double risk_empirical(const Sample& sample, const RiskParams& params) {
  return solve_theta(sample, params).risk_value;
}

double mean_variance_closed_form(const Sample& sample, double eta) {
  if (!(eta > 0.0)) throw InvalidParams("mean_variance_closed_form: eta must be > 0");
  return sample.mean() + eta * sample.variance() - 0.25 / eta;
}

double m_location(const Sample& sample, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidParams("m_location: sigma must be finite and positive");
  }
  return solve_atan_equation(sample, sigma, 0.0, 1e-12).theta;
}

NonmonotonePair build_nonmonotone_pair(double c1, double w1, double w2, double epsilon, double eta) {
  if (!(w1 > 0.0) || !(w2 > 0.0) || !(epsilon > 0.0) || !(eta > 0.0)) {
    throw InvalidWitness("widths, epsilon and eta must be positive");
  }
  if (!(epsilon < w1 * w1) || !(epsilon < w2 * w2)) {
    throw InvalidWitness("epsilon must be below both squared widths");
  }
  const double v1 = w1 * w1 - epsilon;
  const double v2 = w2 * w2 - epsilon;
  // eta (v1 - v2) > w1 + w2 is the reversal condition for the mean-variance risk.
  if (!(eta * (v1 - v2) > w1 + w2)) {
    throw InvalidWitness("risk reversal condition eta*(v1 - v2) > w1 + w2 fails");
  }
  const double c2 = c1 + w1 + w2;
  const double seam = c1 + w1;  // shared atom: top of Z1, bottom of Z2
  const double tail1 = v1 / (2.0 * w1 * w1);
  const double tail2 = v2 / (2.0 * w2 * w2);
  Sample lower({c1 - w1, c1, seam}, {tail1, 1.0 - 2.0 * tail1, tail1});
  Sample upper({seam, c2, c2 + w2}, {tail2, 1.0 - 2.0 * tail2, tail2});
  const auto params = RiskParams::make(kInf, eta);
  NonmonotonePair pair{lower, upper, risk_empirical(lower, params), risk_empirical(upper, params)};
  if (!(pair.lower.max() <= pair.upper.min())) throw InvalidWitness("support separation fails");
  if (!(pair.lower_risk > pair.upper_risk)) throw InvalidWitness("risk reversal not realized");
  return pair;
}

}  // namespace mlocrisk
