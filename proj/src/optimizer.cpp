#include "mlocrisk/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mlocrisk/errors.hpp"

namespace mlocrisk {

bool JointState::is_finite() const noexcept {
  return std::isfinite(theta) &&
         std::all_of(h.begin(), h.end(), [](double v) { return std::isfinite(v); });
}

double Feedback::norm_sq() const noexcept {
  double s = g_theta * g_theta;
  for (double g : g_h) s += g * g;
  return s;
}

Feedback feedback_from_losses(std::span<const double> losses,
                              std::span<const std::vector<double>> grads, double theta,
                              const RiskParams& params) {
  if (losses.empty() || losses.size() != grads.size()) {
    throw std::invalid_argument("feedback: need one gradient per loss and a non-empty batch");
  }
  const std::size_t dim = grads.front().size();
  Feedback fb{std::vector<double>(dim, 0.0), 0.0};
  double slope_sum = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const double d = dev_sigma_prime(losses[i] - theta, params);
    slope_sum += d;
    for (std::size_t k = 0; k < dim; ++k) fb.g_h[k] += d * grads[i][k];
  }
  const double scale = params.eta() / static_cast<double>(losses.size());
  for (double& g : fb.g_h) g *= scale;
  fb.g_theta = 1.0 - scale * slope_sum;
  return fb;
}

Feedback feedback(std::span<const Example> minibatch, const LinearModel& model, double theta,
                  const RiskParams& params, LossKind loss) {
  std::vector<double> values;
  std::vector<std::vector<double>> grads;
  for (const auto& ex : minibatch) {
    auto eval = evaluate_loss(loss, model, ex);
    values.push_back(eval.value);
    grads.push_back(std::move(eval.grad));
  }
  return feedback_from_losses(values, grads, theta, params);
}

Feedback feedback(const Dataset& data, std::span<const std::size_t> indices, const ModelShape& shape,
                  const JointState& state, const RiskParams& params, LossKind loss) {
  if (indices.empty()) throw std::invalid_argument("feedback: empty minibatch");
  const std::size_t dim = shape.parameter_count();
  Feedback fb{std::vector<double>(dim, 0.0), 0.0};
  std::vector<double> grad(dim);
  double slope_sum = 0.0;
  for (std::size_t i : indices) {
    const double value = evaluate_loss(loss, shape, state.h, data.example(i), grad);
    const double d = dev_sigma_prime(value - state.theta, params);
    slope_sum += d;
    if (d != 0.0) {
      for (std::size_t k = 0; k < dim; ++k) fb.g_h[k] += d * grad[k];
    }
  }
  const double scale = params.eta() / static_cast<double>(indices.size());
  for (double& g : fb.g_h) g *= scale;
  fb.g_theta = 1.0 - scale * slope_sum;
  return fb;
}

Feedback erm_feedback(const Dataset& data, std::span<const std::size_t> indices,
                      const ModelShape& shape, std::span<const double> params, LossKind loss) {
  if (indices.empty()) throw std::invalid_argument("erm_feedback: empty minibatch");
  const std::size_t dim = shape.parameter_count();
  Feedback fb{std::vector<double>(dim, 0.0), 0.0};
  std::vector<double> grad(dim);
  for (std::size_t i : indices) {
    evaluate_loss(loss, shape, params, data.example(i), grad);
    for (std::size_t k = 0; k < dim; ++k) fb.g_h[k] += grad[k];
  }
  const double scale = 1.0 / static_cast<double>(indices.size());
  for (double& g : fb.g_h) g *= scale;
  return fb;
}

double minibatch_joint_risk(const Dataset& data, std::span<const std::size_t> indices,
                            const ModelShape& shape, const JointState& state,
                            const RiskParams& params, LossKind loss) {
  std::vector<double> grad(shape.parameter_count());
  double acc = 0.0;
  for (std::size_t i : indices) {
    const double value = evaluate_loss(loss, shape, state.h, data.example(i), grad);
    acc += dev_sigma(value - state.theta, params);
  }
  return state.theta + params.eta() * acc / static_cast<double>(indices.size());
}

StepSchedule StepSchedule::constant(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("step size must be finite and positive");
  }
  return StepSchedule(Kind::Constant, alpha);
}

StepSchedule StepSchedule::remark3(double delta0, double gamma, double kappa, std::size_t n) {
  if (!(delta0 > 0.0) || !(gamma > 0.0) || !(kappa > 0.0) || n == 0) {
    throw std::invalid_argument("remark3 schedule needs positive delta0, gamma, kappa and n");
  }
  const double alpha = std::sqrt(delta0 / (static_cast<double>(n) * gamma * kappa * kappa));
  return StepSchedule(Kind::Remark3, alpha);
}

double StepSchedule::alpha(std::size_t) const noexcept { return alpha_; }

void validate(const ProjectionSet& set, std::size_t dimension) {
  if (const auto* ball = std::get_if<L2Ball>(&set)) {
    if (!(ball->radius > 0.0)) throw std::invalid_argument("projection ball radius must be > 0");
    if (ball->center.size() != dimension) {
      throw std::invalid_argument("projection ball center has wrong dimension");
    }
  } else if (const auto* box = std::get_if<BoxSet>(&set)) {
    if (box->lower.size() != dimension || box->upper.size() != dimension) {
      throw std::invalid_argument("projection box bounds have wrong dimension");
    }
    for (std::size_t i = 0; i < dimension; ++i) {
      if (!(box->lower[i] <= box->upper[i])) {
        throw std::invalid_argument("projection box has lower > upper");
      }
    }
  }
}

namespace {

double& coord(JointState& s, std::size_t i) { return i < s.h.size() ? s.h[i] : s.theta; }
double coord(const JointState& s, std::size_t i) { return i < s.h.size() ? s.h[i] : s.theta; }

}  // namespace

bool contains(const ProjectionSet& set, const JointState& state, double tol) {
  const std::size_t dim = state.dimension();
  if (const auto* ball = std::get_if<L2Ball>(&set)) {
    double sq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = coord(state, i) - ball->center[i];
      sq += d * d;
    }
    return std::sqrt(sq) <= ball->radius + tol;
  }
  if (const auto* box = std::get_if<BoxSet>(&set)) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double v = coord(state, i);
      if (v < box->lower[i] - tol || v > box->upper[i] + tol) return false;
    }
  }
  return true;
}

JointState project(const JointState& state, const ProjectionSet& set) {
  JointState out = state;
  const std::size_t dim = state.dimension();
  if (const auto* ball = std::get_if<L2Ball>(&set)) {
    double sq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = coord(state, i) - ball->center[i];
      sq += d * d;
    }
    const double norm = std::sqrt(sq);
    if (norm > ball->radius) {
      const double scale = ball->radius / norm;
      for (std::size_t i = 0; i < dim; ++i) {
        coord(out, i) = ball->center[i] + scale * (coord(state, i) - ball->center[i]);
      }
    }
  } else if (const auto* box = std::get_if<BoxSet>(&set)) {
    for (std::size_t i = 0; i < dim; ++i) {
      coord(out, i) = std::clamp(coord(state, i), box->lower[i], box->upper[i]);
    }
  }
  return out;
}

std::size_t draw_output_index(std::span<const double> step_sizes, Rng& rng) {
  if (step_sizes.empty()) throw std::invalid_argument("draw_output_index: no steps");
  std::vector<double> cumulative(step_sizes.size());
  std::partial_sum(step_sizes.begin(), step_sizes.end(), cumulative.begin());
  std::uniform_real_distribution<double> unif(0.0, cumulative.back());
  const double u = unif(rng);
  const auto pos = std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
  return std::min<std::size_t>(static_cast<std::size_t>(pos), step_sizes.size() - 1);
}

RunRecord run(const JointState& initial, const StepSchedule& schedule, const ProjectionSet& set,
              std::size_t n, const FeedbackOracle& oracle, std::uint64_t seed,
              const RunOptions& options) {
  if (n == 0) throw std::invalid_argument("run: need at least one iteration");
  validate(set, initial.dimension());
  if (!contains(set, initial, 1e-12)) throw std::invalid_argument("run: initial state outside set");

  RunRecord rec;
  rec.seed = seed;
  rec.step_sizes.reserve(n);
  for (std::size_t t = 0; t < n; ++t) rec.step_sizes.push_back(schedule.alpha(t));
  {
    auto output_rng = make_rng(derive_seed(seed, 0x5eed));
    rec.output_index = draw_output_index(rec.step_sizes, output_rng);
  }
  if (options.keep_trajectory) rec.trajectory.reserve(n + 1);
  rec.feedback_norms.reserve(n);
  rec.trajectory.push_back(initial);
  if (options.on_state) options.on_state(0, initial);
  if (rec.output_index == 0) rec.output_state = initial;
  auto rng = make_rng(seed);

  JointState state = initial;
  for (std::size_t t = 0; t < n; ++t) {
    const Feedback g = oracle(state, t, rng);
    if (g.g_h.size() != state.h.size()) throw std::invalid_argument("run: feedback dimension mismatch");
    const double alpha = rec.step_sizes[t];
    for (std::size_t k = 0; k < state.h.size(); ++k) state.h[k] -= alpha * g.g_h[k];
    state.theta -= alpha * g.g_theta;
    state = project(state, set);
    if (!state.is_finite()) {
      throw DivergedState("iterate became non-finite at step " + std::to_string(t + 1) +
                          " (step size " + std::to_string(alpha) + ")");
    }
    rec.feedback_norms.push_back(std::sqrt(g.norm_sq()));
    if (options.keep_trajectory) rec.trajectory.push_back(state);
    if (options.on_state) options.on_state(t + 1, state);
    if (rec.output_index == t + 1) rec.output_state = state;
  }
  if (!options.keep_trajectory) rec.trajectory.push_back(state);
  return rec;
}

Minibatcher::Minibatcher(std::size_t dataset_size, std::size_t batch_size, BatchMode mode,
                         std::uint64_t seed)
    : n_(dataset_size), batch_(batch_size), mode_(mode), rng_(make_rng(seed)) {
  if (batch_size == 0) throw std::invalid_argument("Minibatcher: batch_size must be >= 1");
  if (dataset_size == 0) throw std::invalid_argument("Minibatcher: empty dataset");
  order_.resize(n_);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  cursor_ = n_;  // forces a shuffle on the first epoch-mode draw
}

const std::vector<std::size_t>& Minibatcher::next() {
  current_.clear();
  if (mode_ == BatchMode::IidWithReplacement) {
    std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
    for (std::size_t i = 0; i < batch_; ++i) current_.push_back(pick(rng_));
    return current_;
  }
  if (cursor_ >= n_) {
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }
  const std::size_t end = std::min(n_, cursor_ + batch_);
  current_.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                  order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  if (cursor_ >= n_) ++epoch_;
  return current_;
}

std::size_t Minibatcher::batches_per_epoch() const noexcept { return (n_ + batch_ - 1) / batch_; }

Minibatcher make_minibatcher(const Dataset& dataset, std::size_t batch_size, BatchMode mode,
                             std::uint64_t seed) {
  return Minibatcher(dataset.rows, batch_size, mode, seed);
}

RunRecord run(const JointState& initial, const StepSchedule& schedule, const ProjectionSet& set,
              std::size_t n, const Dataset& data, Minibatcher& batcher, const ModelShape& shape,
              const RiskParams& params, LossKind loss, std::uint64_t seed,
              const RunOptions& options) {
  const FeedbackOracle oracle = [&](const JointState& state, std::size_t, Rng&) {
    return feedback(data, batcher.next(), shape, state, params, loss);
  };
  return run(initial, schedule, set, n, oracle, seed, options);
}

}  // namespace mlocrisk
