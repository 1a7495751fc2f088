#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mlocrisk/data.hpp"
#include "mlocrisk/losses.hpp"
#include "mlocrisk/optimizer.hpp"
#include "mlocrisk/riskfn.hpp"

namespace mlocrisk {

/**
 * Weak-convexity constant of the joint risk for a lambda-smooth loss:
 * (1 + eta * pi / (2 sigma)) * max(1, lambda) for finite positive sigma,
 * (1 + eta) * max(1, lambda) for sigma = 0. Throws Unsupported for sigma = inf.
 */
double gamma_for(const RiskParams& params, double lambda_smooth);

/// Smoothness constant of a linear-model loss over the rows of `data`.
/// Squared: 2 max||x||^2; logistic: max||x||^2 / 2 (x includes the intercept 1).
double loss_smoothness(LossKind loss, const Dataset& data, const ModelShape& shape);

struct EnvelopeConfig {
  double beta = 0.5;
  double gamma = 1.0;
  double tolerance = 1e-9;
  std::size_t max_iterations = 200000;

  /// Throws InvalidParams unless beta, gamma > 0 and beta * gamma < 1.
  void validate() const;
};

/// Deterministic objective over joint states: value and one (sub)gradient.
struct JointObjective {
  std::function<double(const JointState&)> value;
  std::function<Feedback(const JointState&)> gradient;
};

/// Full-data joint risk theta + eta * mean dev_sigma(loss_i(h) - theta).
JointObjective empirical_objective(const Dataset& data, const ModelShape& shape,
                                   const RiskParams& params, LossKind loss);

/**
 * argmin over y in `set` of f(y) + ||x - y||^2 / (2 beta), by projected
 * gradient with backtracking. Stops when the gradient mapping of the
 * surrogate has norm <= cfg.tolerance; throws NonConvergence otherwise.
 */
JointState prox_point(const JointObjective& objective, const JointState& x,
                      const EnvelopeConfig& cfg, const ProjectionSet& set = IdentitySet{});

/// (x - prox(x)) / beta, flattened as (h..., theta).
std::vector<double> envelope_grad(const JointObjective& objective, const JointState& x,
                                  const EnvelopeConfig& cfg,
                                  const ProjectionSet& set = IdentitySet{});

/// (1 / (1 - beta gamma)) * (delta0 + gamma kappa^2 sum(alpha^2) / 2) / sum(alpha).
double theorem1_bound(double delta0, double gamma, double kappa_sq, double beta,
                      std::span<const double> alphas);

/// sqrt(2 gamma kappa^2 delta0 / n).
double remark3_bound(double gamma, double kappa_sq, double delta0, std::size_t n);

/// Risk of a point mass at 0; a lower bound of the joint risk whenever all losses are >= 0.
double nonnegative_loss_risk_floor(const RiskParams& params);

/// sup ||G||^2 of minibatch feedback over states in `box` (finite sigma only).
double feedback_norm_sq_bound(const Dataset& data, const ModelShape& shape, LossKind loss,
                              const RiskParams& params, const BoxSet& box);

struct Theorem1Problem {
  Dataset data;
  ModelShape shape;
  LossKind loss = LossKind::Squared;
  RiskParams params = RiskParams::with_default_eta(1.0);
  JointState initial;
  ProjectionSet set = IdentitySet{};
  std::size_t batch_size = 1;
  double kappa_sq = 0.0;  // upper bound on E||G_t||^2
  double delta0 = 0.0;    // upper bound on the initialization gap
};

struct StationarityReport {
  double env_grad_norm_sq_mean = 0.0;
  double theorem_bound = 0.0;
  double remark3_bound = 0.0;
  std::size_t trials = 0;
  std::size_t iterations = 0;
  std::vector<double> per_trial;
  double gamma = 0.0;
  double beta = 0.0;
  double alpha = 0.0;
  double kappa_sq = 0.0;
  double kappa_sq_estimate = 0.0;  // 2 * max ||G_t||^2 observed, informational only
  double delta0 = 0.0;
  std::string kappa_source = "config";
  std::string objective = "empirical joint risk on the training sample";

  bool within_theorem_bound() const noexcept { return env_grad_norm_sq_mean <= theorem_bound; }
  bool within_remark3_bound() const noexcept { return env_grad_norm_sq_mean <= remark3_bound; }
};

/**
 * Runs the randomized-output method `trials` times with the constant step
 * sqrt(delta0 / (n gamma kappa^2)) and reports the mean squared norm of the
 * envelope gradient at the returned points against the theoretical bounds.
 */
StationarityReport check_theorem1(const Theorem1Problem& problem, std::size_t n,
                                  std::size_t trials, const EnvelopeConfig& cfg, std::uint64_t seed);

struct ProbeReport {
  std::size_t triples = 0;
  std::size_t violations = 0;
  double worst_slack = -kInf;  // max over triples of lhs - rhs
};

/**
 * Samples (x, x', alpha) with x, x' uniform in the ball of `radius` around
 * `center` and counts violations of
 *   f(a x + (1-a) x') <= a f(x) + (1-a) f(x') + gamma a (1-a) ||x - x'||^2 / 2
 * beyond 1e-9.
 */
ProbeReport weak_convexity_probe(const std::function<double(const JointState&)>& objective,
                                 const JointState& center, double gamma, std::size_t num_triples,
                                 double radius, std::uint64_t seed);

}  // namespace mlocrisk
