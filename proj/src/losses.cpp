#include "mlocrisk/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mlocrisk {

namespace {

// grad += scale * d(output k)/d(params)
void accumulate_output_grad(const ModelShape& shape, std::span<const double> x, std::size_t k,
                            double scale, std::span<double> grad) {
  for (std::size_t j = 0; j < shape.inputs; ++j) grad[j * shape.outputs + k] += scale * x[j];
  if (shape.intercept) grad[shape.inputs * shape.outputs + k] += scale;
}

void check_single_output(const ModelShape& shape, const char* who) {
  if (shape.outputs != 1) throw std::invalid_argument(std::string(who) + " needs a single output");
}

double sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

}  // namespace

LinearModel LinearModel::zeros(const ModelShape& shape) {
  return LinearModel{shape, std::vector<double>(shape.parameter_count(), 0.0)};
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "squared") return LossKind::Squared;
  if (name == "absolute") return LossKind::Absolute;
  if (name == "hinge") return LossKind::Hinge;
  if (name == "logistic") return LossKind::Logistic;
  throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

std::string_view loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::Squared:
      return "squared";
    case LossKind::Absolute:
      return "absolute";
    case LossKind::Hinge:
      return "hinge";
    case LossKind::Logistic:
      return "logistic";
  }
  return "unknown";
}

void predict(const ModelShape& shape, std::span<const double> params, std::span<const double> x,
             std::span<double> out) {
  for (std::size_t k = 0; k < shape.outputs; ++k) {
    out[k] = shape.intercept ? params[shape.inputs * shape.outputs + k] : 0.0;
  }
  for (std::size_t j = 0; j < shape.inputs; ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    const double* row = params.data() + j * shape.outputs;
    for (std::size_t k = 0; k < shape.outputs; ++k) out[k] += row[k] * xj;
  }
}

double evaluate_loss(LossKind kind, const ModelShape& shape, std::span<const double> params,
                     const Example& ex, std::span<double> grad) {
  if (params.size() != shape.parameter_count() || grad.size() != shape.parameter_count()) {
    throw std::invalid_argument("evaluate_loss: parameter length mismatch");
  }
  if (ex.features.size() != shape.inputs) {
    throw std::invalid_argument("evaluate_loss: feature length mismatch");
  }
  std::fill(grad.begin(), grad.end(), 0.0);

  switch (kind) {
    case LossKind::Squared: {
      check_single_output(shape, "squared loss");
      double pred = 0.0;
      predict(shape, params, ex.features, std::span<double>(&pred, 1));
      const double r = pred - ex.label;
      accumulate_output_grad(shape, ex.features, 0, 2.0 * r, grad);
      return r * r;
    }
    case LossKind::Absolute: {
      check_single_output(shape, "absolute loss");
      double pred = 0.0;
      predict(shape, params, ex.features, std::span<double>(&pred, 1));
      const double r = pred - ex.label;
      accumulate_output_grad(shape, ex.features, 0, sign(r), grad);
      return std::abs(r);
    }
    case LossKind::Hinge: {
      check_single_output(shape, "hinge loss");
      double pred = 0.0;
      predict(shape, params, ex.features, std::span<double>(&pred, 1));
      const double slack = 1.0 - ex.label * pred;
      if (slack > 0.0) {
        accumulate_output_grad(shape, ex.features, 0, -ex.label, grad);
        return slack;
      }
      return 0.0;
    }
    case LossKind::Logistic: {
      if (shape.outputs < 2) throw std::invalid_argument("logistic loss needs >= 2 classes");
      const auto label = static_cast<std::size_t>(ex.label);
      if (ex.label < 0.0 || label >= shape.outputs) {
        throw std::invalid_argument("logistic loss: class index out of range");
      }
      std::vector<double> logits(shape.outputs);
      predict(shape, params, ex.features, logits);
      const auto top_at =
          static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
      const double top = logits[top_at];
      // -log softmax[label] = log1p(sum_{k != top} exp(l_k - top)) - (l_label - top)
      const double label_logit = logits[label] - top;
      double rest = 0.0;
      for (std::size_t k = 0; k < logits.size(); ++k) {
        logits[k] = std::exp(logits[k] - top);
        if (k != top_at) rest += logits[k];
      }
      const double total = 1.0 + rest;
      for (std::size_t k = 0; k < shape.outputs; ++k) {
        const double p = logits[k] / total;
        accumulate_output_grad(shape, ex.features, k, p - (k == label ? 1.0 : 0.0), grad);
      }
      return std::log1p(rest) - label_logit;
    }
  }
  return 0.0;
}

LossEval evaluate_loss(LossKind kind, const LinearModel& model, const Example& ex) {
  LossEval out;
  out.grad.assign(model.shape.parameter_count(), 0.0);
  out.value = evaluate_loss(kind, model.shape, model.params, ex, out.grad);
  return out;
}

LossEval squared_loss(const LinearModel& model, const Example& ex) {
  return evaluate_loss(LossKind::Squared, model, ex);
}
LossEval absolute_loss(const LinearModel& model, const Example& ex) {
  return evaluate_loss(LossKind::Absolute, model, ex);
}
LossEval hinge_loss(const LinearModel& model, const Example& ex) {
  return evaluate_loss(LossKind::Hinge, model, ex);
}
LossEval multiclass_logistic_loss(const LinearModel& model, const Example& ex) {
  return evaluate_loss(LossKind::Logistic, model, ex);
}

double zero_one_error(const ModelShape& shape, std::span<const double> params, const Example& ex) {
  std::vector<double> out(shape.outputs);
  predict(shape, params, ex.features, out);
  if (shape.outputs == 1) return (out[0] >= 0.0 ? 1.0 : -1.0) == ex.label ? 0.0 : 1.0;
  const auto best = static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin());
  return best == static_cast<std::size_t>(ex.label) ? 0.0 : 1.0;
}

}  // namespace mlocrisk
