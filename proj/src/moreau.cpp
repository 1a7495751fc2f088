#include "mlocrisk/moreau.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mlocrisk/errors.hpp"
#include "mlocrisk/parallel.hpp"
#include "mlocrisk/risk_eval.hpp"
#include "mlocrisk/rng.hpp"

namespace mlocrisk {

namespace {

std::vector<double> flatten(const JointState& s) {
  std::vector<double> v(s.h);
  v.push_back(s.theta);
  return v;
}

std::vector<double> flatten(const Feedback& g) {
  std::vector<double> v(g.g_h);
  v.push_back(g.g_theta);
  return v;
}

JointState unflatten(std::span<const double> v) {
  return JointState{std::vector<double>(v.begin(), v.end() - 1), v.back()};
}

double norm_sq(std::span<const double> v) {
  return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

double dist_sq(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::vector<double> project_flat(std::span<const double> v, const ProjectionSet& set) {
  return flatten(project(unflatten(v), set));
}

}  // namespace

double gamma_for(const RiskParams& params, double lambda_smooth) {
  if (!(lambda_smooth >= 0.0)) throw std::invalid_argument("gamma_for: lambda must be >= 0");
  const double smooth = std::max(1.0, lambda_smooth);
  switch (params.mode()) {
    case SigmaMode::Median:
      return (1.0 + params.eta()) * smooth;
    case SigmaMode::Interpolate:
      return (1.0 + params.eta() * std::numbers::pi / (2.0 * params.sigma())) * smooth;
    case SigmaMode::Mean:
      break;
  }
  throw Unsupported("gamma_for: no weak-convexity constant for sigma = inf");
}

double loss_smoothness(LossKind loss, const Dataset& data, const ModelShape& shape) {
  const double x_sq = data.max_row_norm_sq(shape.intercept);
  switch (loss) {
    case LossKind::Squared:
      return 2.0 * x_sq;
    case LossKind::Logistic:
      // Hessian (diag(p) - p p^T) kron x x^T has spectral norm <= ||x||^2 / 2.
      return 0.5 * x_sq;
    case LossKind::Absolute:
    case LossKind::Hinge:
      break;
  }
  throw Unsupported("loss_smoothness: loss '" + std::string(loss_kind_name(loss)) + "' is not smooth");
}

void EnvelopeConfig::validate() const {
  if (!(beta > 0.0) || !(gamma >= 0.0) || !(beta * gamma < 1.0)) {
    throw InvalidParams("envelope config needs beta > 0, gamma >= 0 and beta * gamma < 1");
  }
  if (!(tolerance > 0.0) || max_iterations == 0) {
    throw InvalidParams("envelope config needs a positive tolerance and iteration cap");
  }
}

JointObjective empirical_objective(const Dataset& data, const ModelShape& shape,
                                   const RiskParams& params, LossKind loss) {
  std::vector<std::size_t> all(data.rows);
  std::iota(all.begin(), all.end(), std::size_t{0});
  JointObjective obj;
  obj.value = [=, &data](const JointState& s) {
    return minibatch_joint_risk(data, all, shape, s, params, loss);
  };
  obj.gradient = [=, &data](const JointState& s) {
    return feedback(data, all, shape, s, params, loss);
  };
  return obj;
}

JointState prox_point(const JointObjective& objective, const JointState& x,
                      const EnvelopeConfig& cfg, const ProjectionSet& set) {
  cfg.validate();
  const auto anchor = flatten(x);
  const double inv_beta = 1.0 / cfg.beta;

  auto surrogate = [&](std::span<const double> y) {
    return objective.value(unflatten(y)) + 0.5 * inv_beta * dist_sq(y, anchor);
  };
  auto surrogate_grad = [&](std::span<const double> y) {
    auto g = flatten(objective.gradient(unflatten(y)));
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += inv_beta * (y[i] - anchor[i]);
    return g;
  };
  // Gradient mapping at step beta; equals the gradient norm when the set is the whole space.
  auto mapping_norm = [&](std::span<const double> y, std::span<const double> g) {
    std::vector<double> trial(y.begin(), y.end());
    for (std::size_t i = 0; i < trial.size(); ++i) trial[i] -= cfg.beta * g[i];
    return std::sqrt(dist_sq(project_flat(trial, set), y)) * inv_beta;
  };

  auto y = project_flat(anchor, set);
  double value = surrogate(y);
  double lipschitz = inv_beta;
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    const auto g = surrogate_grad(y);
    if (mapping_norm(y, g) <= cfg.tolerance) return unflatten(y);
    // Backtracking on the quadratic upper model.
    for (;;) {
      std::vector<double> step(y);
      for (std::size_t i = 0; i < step.size(); ++i) step[i] -= g[i] / lipschitz;
      auto candidate = project_flat(step, set);
      const double cand_value = surrogate(candidate);
      double model = value;
      for (std::size_t i = 0; i < y.size(); ++i) model += g[i] * (candidate[i] - y[i]);
      model += 0.5 * lipschitz * dist_sq(candidate, y);
      if (cand_value <= model + 1e-15 * std::max(1.0, std::abs(value))) {
        y = std::move(candidate);
        value = cand_value;
        lipschitz = std::max(inv_beta, lipschitz / 2.0);
        break;
      }
      lipschitz *= 2.0;
      if (lipschitz > 1e30 * inv_beta) {
        throw NonConvergence("prox_point: line search failed (non-smooth point?)");
      }
    }
  }
  throw NonConvergence("prox_point: gradient mapping above tolerance after " +
                       std::to_string(cfg.max_iterations) + " iterations");
}

std::vector<double> envelope_grad(const JointObjective& objective, const JointState& x,
                                  const EnvelopeConfig& cfg, const ProjectionSet& set) {
  const auto prox = flatten(prox_point(objective, x, cfg, set));
  auto g = flatten(x);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (g[i] - prox[i]) / cfg.beta;
  return g;
}

double theorem1_bound(double delta0, double gamma, double kappa_sq, double beta,
                      std::span<const double> alphas) {
  if (!(beta * gamma < 1.0)) throw InvalidParams("theorem1_bound: need beta * gamma < 1");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double a : alphas) {
    sum += a;
    sum_sq += a * a;
  }
  return (delta0 + gamma * kappa_sq * sum_sq / 2.0) / sum / (1.0 - beta * gamma);
}

double remark3_bound(double gamma, double kappa_sq, double delta0, std::size_t n) {
  return std::sqrt(2.0 * gamma * kappa_sq * delta0 / static_cast<double>(n));
}

double nonnegative_loss_risk_floor(const RiskParams& params) {
  return risk_empirical(Sample({0.0}), params);
}

double feedback_norm_sq_bound(const Dataset& data, const ModelShape& shape, LossKind loss,
                              const RiskParams& params, const BoxSet& box) {
  const double lip = dev_sigma_lipschitz(params);
  if (!std::isfinite(lip)) throw Unsupported("feedback_norm_sq_bound: sigma = inf is unbounded");
  validate(box, shape.parameter_count() + 1);

  // Largest per-example ||loss gradient|| over the box.
  double grad_bound = 0.0;
  for (std::size_t i = 0; i < data.rows; ++i) {
    const auto x = data.row(i);
    double x_norm_sq = shape.intercept ? 1.0 : 0.0;
    for (double v : x) x_norm_sq += v * v;
    const double x_norm = std::sqrt(x_norm_sq);
    double factor = 0.0;
    switch (loss) {
      case LossKind::Squared: {
        if (shape.outputs != 1) throw std::invalid_argument("squared loss needs one output");
        // Prediction is linear in the parameters, so its range over the box is attained coordinatewise.
        double lo = 0.0, hi = 0.0;
        for (std::size_t j = 0; j < shape.inputs; ++j) {
          const double a = box.lower[j] * x[j], b = box.upper[j] * x[j];
          lo += std::min(a, b);
          hi += std::max(a, b);
        }
        if (shape.intercept) {
          lo += box.lower[shape.inputs];
          hi += box.upper[shape.inputs];
        }
        const double y = data.labels[i];
        factor = 2.0 * std::max(std::abs(hi - y), std::abs(lo - y));
        break;
      }
      case LossKind::Logistic:
        factor = std::sqrt(2.0);  // ||softmax - onehot|| <= sqrt(2)
        break;
      case LossKind::Absolute:
      case LossKind::Hinge:
        factor = 1.0;
        break;
    }
    grad_bound = std::max(grad_bound, factor * x_norm);
  }
  const double eta_lip = params.eta() * lip;
  return eta_lip * eta_lip * grad_bound * grad_bound + (1.0 + eta_lip) * (1.0 + eta_lip);
}

StationarityReport check_theorem1(const Theorem1Problem& problem, std::size_t n,
                                  std::size_t trials, const EnvelopeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (n < 2 || trials == 0) throw std::invalid_argument("check_theorem1: need n >= 2 and trials >= 1");
  if (!(problem.kappa_sq > 0.0) || !(problem.delta0 > 0.0)) {
    throw std::invalid_argument("check_theorem1: kappa_sq and delta0 must be positive");
  }
  const auto schedule =
      StepSchedule::remark3(problem.delta0, cfg.gamma, std::sqrt(problem.kappa_sq), n);
  const auto objective =
      empirical_objective(problem.data, problem.shape, problem.params, problem.loss);

  StationarityReport report;
  report.trials = trials;
  report.iterations = n;
  report.gamma = cfg.gamma;
  report.beta = cfg.beta;
  report.alpha = schedule.alpha(0);
  report.kappa_sq = problem.kappa_sq;
  report.delta0 = problem.delta0;
  report.per_trial.assign(trials, 0.0);
  std::vector<double> max_feedback_sq(trials, 0.0);

  parallel_for(trials, [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(seed, t);
    Minibatcher batcher(problem.data.rows, problem.batch_size, BatchMode::IidWithReplacement,
                        derive_seed(trial_seed, 1));
    const auto rec = run(problem.initial, schedule, problem.set, n, problem.data, batcher,
                         problem.shape, problem.params, problem.loss, trial_seed);
    const auto g = envelope_grad(objective, rec.output_state, cfg, problem.set);
    report.per_trial[t] = norm_sq(g);
    const double top = *std::max_element(rec.feedback_norms.begin(), rec.feedback_norms.end());
    max_feedback_sq[t] = top * top;
  });

  report.env_grad_norm_sq_mean =
      std::accumulate(report.per_trial.begin(), report.per_trial.end(), 0.0) /
      static_cast<double>(trials);
  report.kappa_sq_estimate = 2.0 * *std::max_element(max_feedback_sq.begin(), max_feedback_sq.end());
  const std::vector<double> alphas(n, report.alpha);
  report.theorem_bound = theorem1_bound(problem.delta0, cfg.gamma, problem.kappa_sq, cfg.beta, alphas);
  report.remark3_bound = remark3_bound(cfg.gamma, problem.kappa_sq, problem.delta0, n);
  return report;
}

ProbeReport weak_convexity_probe(const std::function<double(const JointState&)>& objective,
                                 const JointState& center, double gamma, std::size_t num_triples,
                                 double radius, std::uint64_t seed) {
  if (!(radius > 0.0)) throw std::invalid_argument("weak_convexity_probe: radius must be > 0");
  const auto c = flatten(center);
  const std::size_t dim = c.size();
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&] {
    std::vector<double> dir(dim);
    for (double& v : dir) v = normal(rng);
    const double scale =
        radius * std::pow(unif(rng), 1.0 / static_cast<double>(dim)) / std::sqrt(norm_sq(dir));
    for (std::size_t i = 0; i < dim; ++i) dir[i] = c[i] + scale * dir[i];
    return dir;
  };

  ProbeReport report;
  report.triples = num_triples;
  for (std::size_t k = 0; k < num_triples; ++k) {
    const auto x = draw();
    const auto xp = draw();
    double a = unif(rng);
    std::vector<double> mid(dim);
    for (std::size_t i = 0; i < dim; ++i) mid[i] = a * x[i] + (1.0 - a) * xp[i];
    const double lhs = objective(unflatten(mid));
    const double rhs = a * objective(unflatten(x)) + (1.0 - a) * objective(unflatten(xp)) +
                       0.5 * gamma * a * (1.0 - a) * dist_sq(x, xp);
    const double slack = lhs - rhs;
    report.worst_slack = std::max(report.worst_slack, slack);
    if (slack > 1e-9) ++report.violations;
  }
  return report;
}

}  // namespace mlocrisk
