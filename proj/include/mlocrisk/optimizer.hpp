#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "mlocrisk/data.hpp"
#include "mlocrisk/losses.hpp"
#include "mlocrisk/riskfn.hpp"
#include "mlocrisk/rng.hpp"

namespace mlocrisk {

/// Joint optimization variable (h, theta).
struct JointState {
  std::vector<double> h;
  double theta = 0.0;

  std::size_t dimension() const noexcept { return h.size() + 1; }
  bool is_finite() const noexcept;
  friend bool operator==(const JointState&, const JointState&) = default;
};

/// Stochastic sub-gradient sample over (h, theta).
struct Feedback {
  std::vector<double> g_h;
  double g_theta = 0.0;

  double norm_sq() const noexcept;
};

/**
 * Feedback for the minibatch joint risk theta + eta * mean dev_sigma(l_i - theta),
 * given per-example loss values and gradients:
 *   g_h     = eta * mean[dev_sigma'(l_i - theta) * grad_i]
 *   g_theta = 1 - eta * mean[dev_sigma'(l_i - theta)]
 */
Feedback feedback_from_losses(std::span<const double> losses,
                              std::span<const std::vector<double>> grads, double theta,
                              const RiskParams& params);

Feedback feedback(std::span<const Example> minibatch, const LinearModel& model, double theta,
                  const RiskParams& params, LossKind loss);

/// Same as feedback() but over dataset rows selected by `indices`, without copying.
Feedback feedback(const Dataset& data, std::span<const std::size_t> indices, const ModelShape& shape,
                  const JointState& state, const RiskParams& params, LossKind loss);

/// Plain mean loss gradient with no theta variable (the ERM baseline).
Feedback erm_feedback(const Dataset& data, std::span<const std::size_t> indices,
                      const ModelShape& shape, std::span<const double> params, LossKind loss);

/// theta + eta * mean over `indices` of dev_sigma(loss_i(h) - theta).
double minibatch_joint_risk(const Dataset& data, std::span<const std::size_t> indices,
                            const ModelShape& shape, const JointState& state,
                            const RiskParams& params, LossKind loss);

class StepSchedule {
 public:
  static StepSchedule constant(double alpha);
  /// alpha_t = sqrt(delta0 / (n * gamma * kappa^2)) for every t.
  static StepSchedule remark3(double delta0, double gamma, double kappa, std::size_t n);

  enum class Kind { Constant, Remark3 };

  double alpha(std::size_t t) const noexcept;
  Kind kind() const noexcept { return kind_; }

 private:
  StepSchedule(Kind kind, double alpha) : kind_(kind), alpha_(alpha) {}
  Kind kind_;
  double alpha_;
};

struct IdentitySet {};
struct L2Ball {
  std::vector<double> center;  // over (h..., theta)
  double radius = 1.0;
};
struct BoxSet {
  std::vector<double> lower;  // over (h..., theta)
  std::vector<double> upper;
};
using ProjectionSet = std::variant<IdentitySet, L2Ball, BoxSet>;

/// Throws std::invalid_argument for radius <= 0, lower > upper, or wrong dimension.
void validate(const ProjectionSet& set, std::size_t dimension);
bool contains(const ProjectionSet& set, const JointState& state, double tol = 0.0);

/// Euclidean projection; theta is the last coordinate of the joint vector.
JointState project(const JointState& state, const ProjectionSet& set);

struct RunRecord {
  std::vector<JointState> trajectory;  // n + 1 states
  std::vector<double> feedback_norms;  // ||G_t|| for t < n
  std::vector<double> step_sizes;
  std::size_t output_index = 0;  // T, drawn with P{T = t} proportional to alpha_t
  JointState output_state;
  std::uint64_t seed = 0;

  const JointState& final_state() const { return trajectory.back(); }
};

/// Produces G_t at a state; may consume randomness from the run's stream.
using FeedbackOracle = std::function<Feedback(const JointState&, std::size_t step, Rng& rng)>;

struct RunOptions {
  /// When false only the initial and final states are kept in `trajectory`.
  bool keep_trajectory = true;
  /// Called with (t, x_t) for t = 0..n.
  std::function<void(std::size_t, const JointState&)> on_state;
};

/**
 * Projected stochastic sub-gradient with randomized output:
 * x_{t+1} = project(x_t - alpha_t G_t) for t < n, and T drawn with
 * P{T = t} = alpha_t / sum(alpha) from a stream derived from `seed` (the
 * oracle gets its own stream, so T does not perturb the feedback draws).
 * Throws DivergedState if an iterate becomes non-finite.
 */
RunRecord run(const JointState& initial, const StepSchedule& schedule, const ProjectionSet& set,
              std::size_t n, const FeedbackOracle& oracle, std::uint64_t seed,
              const RunOptions& options = {});

/// Index drawn with probability proportional to the step sizes.
std::size_t draw_output_index(std::span<const double> step_sizes, Rng& rng);

enum class BatchMode { IidWithReplacement, EpochShuffle };

class Minibatcher {
 public:
  Minibatcher(std::size_t dataset_size, std::size_t batch_size, BatchMode mode, std::uint64_t seed);

  /// Next minibatch of row indices.
  const std::vector<std::size_t>& next();
  std::size_t batches_per_epoch() const noexcept;
  std::size_t epoch() const noexcept { return epoch_; }
  BatchMode mode() const noexcept { return mode_; }

 private:
  std::size_t n_;
  std::size_t batch_;
  BatchMode mode_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
  std::vector<std::size_t> current_;
};

Minibatcher make_minibatcher(const Dataset& dataset, std::size_t batch_size, BatchMode mode,
                             std::uint64_t seed);

/// Algorithm driver over a dataset: minibatch feedback of the joint risk for a linear model.
RunRecord run(const JointState& initial, const StepSchedule& schedule, const ProjectionSet& set,
              std::size_t n, const Dataset& data, Minibatcher& batcher, const ModelShape& shape,
              const RiskParams& params, LossKind loss, std::uint64_t seed,
              const RunOptions& options = {});

}  // namespace mlocrisk
