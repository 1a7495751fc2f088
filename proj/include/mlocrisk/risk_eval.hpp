#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mlocrisk/riskfn.hpp"

namespace mlocrisk {

/// Finite realized losses with probability weights (uniform unless given).
class Sample {
 public:
  explicit Sample(std::vector<double> values);
  Sample(std::vector<double> values, std::vector<double> weights);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> weights() const noexcept { return weights_; }

  double mean() const noexcept;
  /// Weighted population variance.
  double variance() const noexcept;
  double min() const noexcept;
  double max() const noexcept;

  Sample shifted(double offset) const;

 private:
  std::vector<double> values_;
  std::vector<double> weights_;
};

struct ThetaSolution {
  double theta_star = 0.0;
  double risk_value = 0.0;
  int iterations = 0;
  /// First-order condition residual at theta_star (0 for the median mode).
  double residual = 0.0;
};

/// theta + eta * E dev_sigma(Z - theta).
double joint_risk(const Sample& sample, double theta, const RiskParams& params);

/// Derivative of joint_risk in theta: 1 - eta * E dev_sigma'(Z - theta).
double joint_risk_theta_slope(const Sample& sample, double theta, const RiskParams& params);

/**
 * Minimizes joint_risk over theta.
 *
 * sigma == inf uses the closed form mean - 1/(2 eta). sigma == 0 returns the
 * smallest minimizer, the lower (1 - 1/eta)/2 quantile. Otherwise solves
 * E atan((Z - theta)/sigma) = sigma/eta by Newton's method with a bisection
 * fallback, to tolerance 1e-10 * max(1, sigma/eta).
 *
 * Throws NonConvergence after 200 iterations.
 */
ThetaSolution solve_theta(const Sample& sample, const RiskParams& params);

double risk_empirical(const Sample& sample, const RiskParams& params);

/// mean + eta * popvar - 1/(4 eta).
double mean_variance_closed_form(const Sample& sample, double eta);

/// Root of E atan((Z - theta)/sigma) = 0, for 0 < sigma < inf.
double m_location(const Sample& sample, double sigma);

struct NonmonotonePair {
  Sample lower;   // Z1
  Sample upper;   // Z2, with max(Z1) <= min(Z2)
  double lower_risk = 0.0;
  double upper_risk = 0.0;
};

/**
 * Three-point laws Z1 <= Z2 with R_inf(Z1) > R_inf(Z2).
 *
 * Atoms are {c - w, c, c + w} with weights v/(2w^2), 1 - v/w^2, v/(2w^2),
 * v = w^2 - epsilon, and c2 = c1 + w1 + w2. Throws InvalidWitness when the
 * inputs do not produce a strict risk reversal.
 */
NonmonotonePair build_nonmonotone_pair(double c1, double w1, double w2, double epsilon, double eta);

}  // namespace mlocrisk
