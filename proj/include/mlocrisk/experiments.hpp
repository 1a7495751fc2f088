#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlocrisk/csv_writer.hpp"
#include "mlocrisk/data.hpp"
#include "mlocrisk/moreau.hpp"
#include "mlocrisk/optimizer.hpp"

namespace mlocrisk {

enum class ExperimentKind { Toy, Linreg, Classify, RiskCurve, Diagnose };

ExperimentKind parse_experiment_kind(std::string_view name);
std::string experiment_kind_name(ExperimentKind kind);

/// Where classification data comes from.
struct DataSource {
  std::string kind = "blobs";  // "blobs" or "csv"
  BlobSpec blobs;
  std::string csv_path;
  CsvSchema schema;
};

/// Resolved settings for every runner; fields unused by a runner are ignored.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Toy;
  std::uint64_t seed = 0;
  std::size_t trials = 100;
  std::size_t iterations = 20000;  // toy / linreg steps
  std::size_t epochs = 10;         // classify
  std::size_t batch_size = 8;
  std::vector<double> sigmas;
  /// Empty: default_eta per sigma. Otherwise one eta per sigma, or (toy) the eta grid.
  std::vector<double> etas;
  double step_size = 0.001;
  /// "constant" uses step_size; "per_sqrt_dim" uses step_size / sqrt(parameter count).
  std::string step_rule = "constant";
  std::size_t record_every = 1;
  std::size_t histogram_bins = 50;

  // toy
  double h0 = 0.5;
  double theta0 = 0.5;
  double a_wide = 0.0, b_wide = 1.0, a_thin = 2.0, b_thin = 0.1;

  // linreg
  double w0 = 1.0, w1 = 1.0;
  std::vector<std::string> noise_laws{"normal", "lognormal"};
  double noise_scale = 0.8;
  std::string x_law = "normal";
  double init_noise = 0.05;
  /// Optional box half-width on every joint coordinate; 0 disables projection.
  double box_radius = 0.0;

  // classify / riskcurve
  DataSource data;
  double train_fraction = 0.88;
  bool include_erm = true;
  bool intercept = true;
  std::vector<double> eval_sigmas;

  // diagnose: small regression problem, first sigma of the grid
  std::optional<double> kappa_sq;  // required; set kappa_auto to use the verified box bound
  bool kappa_auto = false;
  std::optional<double> delta0;  // defaults to J(initial) minus the nonnegative-loss floor
  std::size_t sample_size = 200;
  std::size_t probe_triples = 10000;
  double probe_radius = 1.0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Toy and regression defaults for a given experiment kind.
ExperimentConfig default_config(ExperimentKind kind);

/// Named CSV tables ready to be written as <name>.csv.
struct MetricsTable {
  std::map<std::string, CsvTable> tables;
};

struct ToyResult {
  std::vector<double> etas;
  /// mean_h[e][t], mean_theta[e][t] over trials, t = 0..iterations.
  std::vector<std::vector<double>> mean_h;
  std::vector<std::vector<double>> mean_theta;
  /// final_h[e][trial]
  std::vector<std::vector<double>> final_h;

  double mean_final_h(std::size_t e) const;
  MetricsTable metrics(std::size_t record_every = 1) const;
};

/// Minimizer in h of E l(h) + eta Var l(h) for l(h) = h W + (1 - h) T.
double toy_mean_variance_minimizer(double eta, double a_wide, double b_wide, double a_thin,
                                   double b_thin);
/// Mean and variance of |Normal(a, b^2)|.
std::pair<double, double> folded_normal_moments(double a, double b);

/// Training one sigma (or ERM) across trials.
struct Setting {
  std::string label;  // "off" for ERM, otherwise the sigma
  bool erm = false;
  double sigma = 0.0;
  double eta = 0.0;
};

struct LinregResult {
  std::vector<std::string> noise_laws;
  std::vector<Setting> settings;
  /// finals[law][setting][trial] = (w0, w1, theta)
  std::vector<std::vector<std::vector<std::array<double, 3>>>> finals;
  /// mean trajectory per law and setting, (w0, w1, theta) per step
  std::vector<std::vector<std::vector<std::array<double, 3>>>> mean_trajectory;

  /// Trial mean and standard error of coordinate `c` (0 = w0, 1 = w1).
  std::pair<double, double> mean_and_se(std::size_t law, std::size_t setting, std::size_t c) const;
  MetricsTable metrics(std::size_t record_every = 1) const;
};

struct ClassifyResult {
  std::vector<Setting> settings;
  std::size_t trials = 0;
  std::size_t epochs = 0;
  std::size_t test_size = 0;
  double step_size = 0.0;
  /// errors[setting][trial][epoch] test zero-one error, epoch 0 = initialization
  std::vector<std::vector<std::vector<double>>> errors;
  /// train_errors[setting][trial] after the last epoch
  std::vector<std::vector<double>> train_errors;
  /// test_losses[setting][trial][example] logistic loss after the last epoch
  std::vector<std::vector<std::vector<double>>> test_losses;
  std::size_t histogram_bins = 50;

  double mean_error(std::size_t setting, std::size_t epoch) const;
  double test_loss_variance(std::size_t setting, std::size_t trial) const;
  MetricsTable metrics() const;
};

/// Histogram with `bins` equal-width bins over [0, max(values)].
struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<long long> counts;
};
Histogram loss_histogram(std::span<const double> values, std::size_t bins);

struct RiskCurveResult {
  std::vector<Setting> trained;
  std::vector<double> eval_sigmas;
  std::vector<double> eval_etas;
  /// risk[train][eval] averaged over trials
  std::vector<std::vector<double>> risk;
  /// rank (0 = lowest risk) of each trained setting within each evaluation column
  std::vector<std::vector<std::size_t>> rank;

  MetricsTable metrics() const;
};

ToyResult run_toy(const ExperimentConfig& cfg);
LinregResult run_linreg(const ExperimentConfig& cfg);
ClassifyResult run_classify(const ExperimentConfig& cfg);
RiskCurveResult risk_curve_from(const ClassifyResult& trained, const std::vector<double>& eval_sigmas);
RiskCurveResult run_riskcurve(const ExperimentConfig& cfg);

struct DiagnoseResult {
  StationarityReport stationarity;
  ProbeReport probe;
  double lambda = 0.0;
};

/// Envelope-gradient stationarity check and weak-convexity probe on a synthetic regression sample.
DiagnoseResult run_diagnose(const ExperimentConfig& cfg);

/// Settings for a sigma grid with explicit or default etas, plus ERM when requested.
std::vector<Setting> make_settings(const ExperimentConfig& cfg);

}  // namespace mlocrisk
