#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mlocrisk {

/// Shape of a linear model: one weight vector per output, plus optional intercepts.
struct ModelShape {
  std::size_t inputs = 1;
  std::size_t outputs = 1;
  bool intercept = true;

  /// inputs * outputs, the weight count without intercepts.
  std::size_t model_dimension() const noexcept { return inputs * outputs; }
  std::size_t parameter_count() const noexcept {
    return inputs * outputs + (intercept ? outputs : 0);
  }
};

/**
 * Flattened parameters: weights[j * outputs + k] couples input j to output k,
 * followed by the `outputs` intercepts when present.
 */
struct LinearModel {
  ModelShape shape;
  std::vector<double> params;

  static LinearModel zeros(const ModelShape& shape);
};

/// One observation. `label` is a real target, a class index, or +/-1 for hinge.
struct Example {
  std::span<const double> features;
  double label = 0.0;
};

struct LossEval {
  double value = 0.0;
  std::vector<double> grad;
};

enum class LossKind { Squared, Absolute, Hinge, Logistic };

LossKind parse_loss_kind(std::string_view name);
std::string_view loss_kind_name(LossKind kind);

/// Writes model outputs (one per output) into `out`.
void predict(const ModelShape& shape, std::span<const double> params, std::span<const double> x,
             std::span<double> out);

/**
 * Loss value at `params`, writing the (sub)gradient into `grad`
 * (length parameter_count). Kinks take the zero sub-gradient element.
 */
double evaluate_loss(LossKind kind, const ModelShape& shape, std::span<const double> params,
                     const Example& ex, std::span<double> grad);

LossEval evaluate_loss(LossKind kind, const LinearModel& model, const Example& ex);

LossEval squared_loss(const LinearModel& model, const Example& ex);
LossEval absolute_loss(const LinearModel& model, const Example& ex);
LossEval hinge_loss(const LinearModel& model, const Example& ex);
LossEval multiclass_logistic_loss(const LinearModel& model, const Example& ex);

/// Argmax class for outputs >= 2, sign for a single output; 0/1 mismatch.
double zero_one_error(const ModelShape& shape, std::span<const double> params, const Example& ex);

}  // namespace mlocrisk
