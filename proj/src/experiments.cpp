#include "mlocrisk/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "mlocrisk/errors.hpp"
#include "mlocrisk/parallel.hpp"
#include "mlocrisk/risk_eval.hpp"
#include "mlocrisk/rng.hpp"

namespace mlocrisk {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Standard error of the mean; 0 for fewer than two values.
double standard_error(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

bool keep_step(std::size_t t, std::size_t last, std::size_t every) {
  return every <= 1 || t % every == 0 || t == last;
}

JointState noisy_zero_init(std::size_t dim, double noise, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(-noise, noise);
  JointState s;
  s.h.resize(dim);
  for (double& v : s.h) v = noise > 0.0 ? unif(rng) : 0.0;
  s.theta = noise > 0.0 ? unif(rng) : 0.0;
  return s;
}

ProjectionSet box_or_identity(double radius, std::size_t dim) {
  if (!(radius > 0.0)) return IdentitySet{};
  return BoxSet{std::vector<double>(dim, -radius), std::vector<double>(dim, radius)};
}

double sample_input(const InputLaw& law, Rng& rng) {
  if (law.kind == InputLaw::Kind::Normal) {
    std::normal_distribution<double> normal(law.a, law.b);
    return normal(rng);
  }
  std::uniform_real_distribution<double> unif(law.a, law.b);
  return unif(rng);
}

double sample_noise(const NoiseLaw& law, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (law.kind) {
    case NoiseLaw::Kind::None:
      return 0.0;
    case NoiseLaw::Kind::Normal:
      return law.scale * normal(rng);
    case NoiseLaw::Kind::LognormalCentered:
      return std::exp(law.scale * normal(rng)) - std::exp(0.5 * law.scale * law.scale);
  }
  return 0.0;
}

Dataset load_source(const DataSource& source, std::uint64_t seed) {
  if (source.kind == "blobs") return synth_blobs(source.blobs, seed);
  if (source.kind == "csv") return load_csv(source.csv_path, source.schema);
  throw ConfigError("data_source: unknown kind '" + source.kind + "'");
}

}  // namespace

ExperimentKind parse_experiment_kind(std::string_view name) {
  if (name == "toy") return ExperimentKind::Toy;
  if (name == "linreg") return ExperimentKind::Linreg;
  if (name == "classify") return ExperimentKind::Classify;
  if (name == "riskcurve") return ExperimentKind::RiskCurve;
  if (name == "diagnose") return ExperimentKind::Diagnose;
  throw ConfigError("experiment: unknown kind '" + std::string(name) + "'");
}

std::string experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Toy:
      return "toy";
    case ExperimentKind::Linreg:
      return "linreg";
    case ExperimentKind::Classify:
      return "classify";
    case ExperimentKind::RiskCurve:
      return "riskcurve";
    case ExperimentKind::Diagnose:
      return "diagnose";
  }
  return "unknown";
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case ExperimentKind::Toy:
      cfg.sigmas = {kInf};
      cfg.etas = {1, 2, 4, 8, 16, 32, 64, 128};
      cfg.trials = 100;
      cfg.iterations = 20000;
      cfg.step_size = 0.001;
      break;
    case ExperimentKind::Linreg:
      cfg.sigmas = {0.0, 0.5, 2.0, 8.0, kInf};
      cfg.trials = 100;
      cfg.iterations = 20000;
      cfg.step_size = 0.001;
      cfg.box_radius = 10.0;  // keeps sigma = inf stable under log-normal noise
      break;
    case ExperimentKind::Classify:
    case ExperimentKind::RiskCurve:
      cfg.sigmas = {0.0, 0.5, 2.0, 8.0, kInf};
      cfg.trials = 10;
      cfg.epochs = 10;
      cfg.step_size = 0.01;
      cfg.step_rule = "per_sqrt_dim";
      cfg.eval_sigmas = cfg.sigmas;
      cfg.data.blobs.count = 5000;
      break;
    case ExperimentKind::Diagnose:
      cfg.sigmas = {1.0};
      cfg.trials = 200;
      cfg.iterations = 2000;
      cfg.noise_laws = {"normal"};
      cfg.x_law = "uniform";
      cfg.init_noise = 0.0;
      cfg.box_radius = 3.0;
      break;
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError(field + ": " + why);
  };
  if (trials == 0) fail("trials", "must be positive");
  if (batch_size == 0) fail("batch_size", "must be positive");
  if (record_every == 0) fail("record_every", "must be positive");
  if (histogram_bins == 0) fail("histogram_bins", "must be positive");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) fail("step_size", "must be finite and positive");
  if (step_rule != "constant" && step_rule != "per_sqrt_dim") {
    fail("step_rule", "must be 'constant' or 'per_sqrt_dim'");
  }
  if (sigmas.empty()) fail("sigmas", "must not be empty");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (std::isnan(sigmas[i]) || sigmas[i] < 0.0) fail("sigmas[" + std::to_string(i) + "]", "must be >= 0 or inf");
  }
  if (kind == ExperimentKind::Toy) {
    for (std::size_t i = 0; i < etas.size(); ++i) {
      if (!RiskParams::is_valid(sigmas.front(), etas[i])) {
        fail("etas[" + std::to_string(i) + "]", "invalid for sigma " + format_sigma(sigmas.front()));
      }
    }
  } else if (!etas.empty()) {
    if (etas.size() != sigmas.size()) fail("etas", "needs one value per sigma");
    for (std::size_t i = 0; i < etas.size(); ++i) {
      if (!RiskParams::is_valid(sigmas[i], etas[i])) {
        fail("etas[" + std::to_string(i) + "]", "invalid for sigma " + format_sigma(sigmas[i]));
      }
    }
  }
  if (kind == ExperimentKind::Linreg) {
    if (noise_laws.empty()) fail("noise_laws", "must not be empty");
    for (std::size_t i = 0; i < noise_laws.size(); ++i) {
      try {
        NoiseLaw::parse(noise_laws[i], noise_scale);
      } catch (const std::invalid_argument& e) {
        fail("noise_laws[" + std::to_string(i) + "]", e.what());
      }
    }
    try {
      InputLaw::parse(x_law);
    } catch (const std::invalid_argument& e) {
      fail("x_law", e.what());
    }
  }
  if (kind == ExperimentKind::Classify || kind == ExperimentKind::RiskCurve) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail("train_fraction", "must lie in (0, 1)");
    if (data.kind != "blobs" && data.kind != "csv") fail("data_source", "must be 'blobs' or 'csv'");
    if (data.kind == "csv" && data.csv_path.empty()) fail("csv_path", "required for csv data");
    if (data.kind == "blobs" && data.blobs.classes < 2) fail("blob_classes", "must be >= 2");
    for (std::size_t i = 0; i < eval_sigmas.size(); ++i) {
      if (std::isnan(eval_sigmas[i]) || eval_sigmas[i] < 0.0) {
        fail("eval_sigmas[" + std::to_string(i) + "]", "must be >= 0 or inf");
      }
    }
  }
  if (kind == ExperimentKind::Diagnose) {
    if (!kappa_sq && !kappa_auto) fail("kappa_sq", "required for diagnose (a number or \"auto\")");
    if (kappa_sq && !(*kappa_sq > 0.0)) fail("kappa_sq", "must be positive");
    if (delta0 && !(*delta0 > 0.0)) fail("delta0", "must be positive");
    if (!std::isfinite(sigmas.front())) fail("sigmas[0]", "diagnose needs a finite sigma");
    if (iterations < 2) fail("iterations", "must be >= 2");
    if (sample_size == 0) fail("sample_size", "must be positive");
    if (!(probe_radius > 0.0)) fail("probe_radius", "must be positive");
    if (!(box_radius > 0.0)) fail("box_radius", "diagnose needs a box");
  }
  if (!(init_noise >= 0.0)) fail("init_noise", "must be >= 0");
  if (!(box_radius >= 0.0)) fail("box_radius", "must be >= 0");
}

std::vector<Setting> make_settings(const ExperimentConfig& cfg) {
  std::vector<Setting> out;
  if (cfg.include_erm &&
      (cfg.kind == ExperimentKind::Classify || cfg.kind == ExperimentKind::RiskCurve)) {
    out.push_back(Setting{"off", true, 0.0, 0.0});
  }
  for (std::size_t i = 0; i < cfg.sigmas.size(); ++i) {
    const double sigma = cfg.sigmas[i];
    const double eta = cfg.etas.empty() ? default_eta(sigma) : cfg.etas[i];
    RiskParams::make(sigma, eta);
    out.push_back(Setting{format_sigma(sigma), false, sigma, eta});
  }
  return out;
}

std::pair<double, double> folded_normal_moments(double a, double b) {
  const double z = a / b;
  const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double mean = b * std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * z * z) +
                      a * std::erf(z / std::numbers::sqrt2);
  (void)phi;
  return {mean, a * a + b * b - mean * mean};
}

double toy_mean_variance_minimizer(double eta, double a_wide, double b_wide, double a_thin,
                                   double b_thin) {
  const auto [mw, vw] = folded_normal_moments(a_wide, b_wide);
  const auto [mt, vt] = folded_normal_moments(a_thin, b_thin);
  // d/dh [h mw + (1-h) mt + eta (h^2 vw + (1-h)^2 vt)] = 0
  return (mt - mw + 2.0 * eta * vt) / (2.0 * eta * (vw + vt));
}

double ToyResult::mean_final_h(std::size_t e) const { return mean_of(final_h[e]); }

ToyResult run_toy(const ExperimentConfig& cfg) {
  cfg.validate();
  const double sigma = cfg.sigmas.front();
  const std::vector<double> etas =
      cfg.etas.empty() ? std::vector<double>{default_eta(sigma)} : cfg.etas;
  const std::size_t n = cfg.iterations;
  const auto schedule = StepSchedule::constant(cfg.step_size);

  ToyResult out;
  out.etas = etas;
  for (std::size_t e = 0; e < etas.size(); ++e) {
    const auto params = RiskParams::make(sigma, etas[e]);
    std::vector<std::vector<double>> h_paths(cfg.trials), theta_paths(cfg.trials);
    parallel_for(cfg.trials, [&](std::size_t trial) {
      auto& hp = h_paths[trial];
      auto& tp = theta_paths[trial];
      hp.assign(n + 1, cfg.h0);
      tp.assign(n + 1, cfg.theta0);
      if (n == 0) return;
      const FeedbackOracle oracle = [&](const JointState& s, std::size_t, Rng& rng) {
        std::normal_distribution<double> normal(0.0, 1.0);
        double gh = 0.0, slope = 0.0;
        const double h = s.h[0];
        for (std::size_t i = 0; i < cfg.batch_size; ++i) {
          const double wide = std::abs(cfg.a_wide + cfg.b_wide * normal(rng));
          const double thin = std::abs(cfg.a_thin + cfg.b_thin * normal(rng));
          const double loss = h * wide + (1.0 - h) * thin;
          const double d = dev_sigma_prime(loss - s.theta, params);
          gh += d * (wide - thin);
          slope += d;
        }
        const double scale = params.eta() / static_cast<double>(cfg.batch_size);
        return Feedback{{scale * gh}, 1.0 - scale * slope};
      };
      RunOptions opts;
      opts.keep_trajectory = false;
      opts.on_state = [&](std::size_t t, const JointState& s) {
        hp[t] = s.h[0];
        tp[t] = s.theta;
      };
      run(JointState{{cfg.h0}, cfg.theta0}, schedule, IdentitySet{}, n, oracle,
          derive_seed(derive_seed(cfg.seed, e), trial), opts);
    });
    std::vector<double> mh(n + 1, 0.0), mt(n + 1, 0.0), finals(cfg.trials);
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
      for (std::size_t t = 0; t <= n; ++t) {
        mh[t] += h_paths[trial][t];
        mt[t] += theta_paths[trial][t];
      }
      finals[trial] = h_paths[trial][n];
    }
    for (std::size_t t = 0; t <= n; ++t) {
      mh[t] /= static_cast<double>(cfg.trials);
      mt[t] /= static_cast<double>(cfg.trials);
    }
    out.mean_h.push_back(std::move(mh));
    out.mean_theta.push_back(std::move(mt));
    out.final_h.push_back(std::move(finals));
  }
  return out;
}

MetricsTable ToyResult::metrics(std::size_t record_every) const {
  MetricsTable m;
  auto& traj = m.tables["trajectories"];
  traj.columns = {"eta", "step", "mean_h", "mean_theta"};
  auto& fin = m.tables["final_states"];
  fin.columns = {"eta", "trial", "h"};
  auto& sum = m.tables["summary"];
  sum.columns = {"eta", "mean_final_h", "se_final_h"};
  for (std::size_t e = 0; e < etas.size(); ++e) {
    const std::size_t last = mean_h[e].size() - 1;
    for (std::size_t t = 0; t <= last; ++t) {
      if (!keep_step(t, last, record_every)) continue;
      traj.add_row({etas[e], static_cast<long long>(t), mean_h[e][t], mean_theta[e][t]});
    }
    for (std::size_t k = 0; k < final_h[e].size(); ++k) {
      fin.add_row({etas[e], static_cast<long long>(k), final_h[e][k]});
    }
    sum.add_row({etas[e], mean_final_h(e), standard_error(final_h[e])});
  }
  return m;
}

LinregResult run_linreg(const ExperimentConfig& cfg) {
  cfg.validate();
  LinregResult out;
  out.noise_laws = cfg.noise_laws;
  out.settings = make_settings(cfg);
  const ModelShape shape{1, 1, true};  // params = (slope, intercept)
  const auto inputs = InputLaw::parse(cfg.x_law);
  const auto schedule = StepSchedule::constant(cfg.step_size);
  const std::size_t n = cfg.iterations;
  const auto set = box_or_identity(cfg.box_radius, shape.parameter_count() + 1);

  for (std::size_t law = 0; law < cfg.noise_laws.size(); ++law) {
    const auto noise = NoiseLaw::parse(cfg.noise_laws[law], cfg.noise_scale);
    auto& law_finals = out.finals.emplace_back();
    auto& law_traj = out.mean_trajectory.emplace_back();
    for (std::size_t s = 0; s < out.settings.size(); ++s) {
      const auto params = RiskParams::make(out.settings[s].sigma, out.settings[s].eta);
      std::vector<std::vector<std::array<double, 3>>> paths(cfg.trials);
      parallel_for(cfg.trials, [&](std::size_t trial) {
        const std::uint64_t trial_seed = derive_seed(derive_seed(derive_seed(cfg.seed, law), s), trial);
        JointState init = project(noisy_zero_init(2, cfg.init_noise, derive_seed(trial_seed, 2)), set);
        auto& path = paths[trial];
        path.assign(n + 1, {init.h[1], init.h[0], init.theta});
        if (n == 0) return;
        std::vector<double> grad(2);
        const FeedbackOracle oracle = [&](const JointState& st, std::size_t, Rng& rng) {
          Feedback fb{{0.0, 0.0}, 0.0};
          double slope = 0.0;
          for (std::size_t i = 0; i < cfg.batch_size; ++i) {
            const double x = sample_input(inputs, rng);
            const double y = cfg.w0 + cfg.w1 * x + sample_noise(noise, rng);
            const double value = evaluate_loss(LossKind::Squared, shape, st.h,
                                               Example{std::span<const double>(&x, 1), y}, grad);
            const double d = dev_sigma_prime(value - st.theta, params);
            fb.g_h[0] += d * grad[0];
            fb.g_h[1] += d * grad[1];
            slope += d;
          }
          const double scale = params.eta() / static_cast<double>(cfg.batch_size);
          fb.g_h[0] *= scale;
          fb.g_h[1] *= scale;
          fb.g_theta = 1.0 - scale * slope;
          return fb;
        };
        RunOptions opts;
        opts.keep_trajectory = false;
        opts.on_state = [&](std::size_t t, const JointState& st) {
          path[t] = {st.h[1], st.h[0], st.theta};
        };
        run(init, schedule, set, n, oracle, trial_seed, opts);
      });
      auto& finals = law_finals.emplace_back();
      auto& mean_path = law_traj.emplace_back(n + 1, std::array<double, 3>{0.0, 0.0, 0.0});
      for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        finals.push_back(paths[trial][n]);
        for (std::size_t t = 0; t <= n; ++t) {
          for (std::size_t c = 0; c < 3; ++c) mean_path[t][c] += paths[trial][t][c];
        }
      }
      for (auto& row : mean_path) {
        for (double& v : row) v /= static_cast<double>(cfg.trials);
      }
    }
  }
  return out;
}

std::pair<double, double> LinregResult::mean_and_se(std::size_t law, std::size_t setting,
                                                    std::size_t c) const {
  std::vector<double> v;
  for (const auto& f : finals[law][setting]) v.push_back(f[c]);
  return {mean_of(v), standard_error(v)};
}

MetricsTable LinregResult::metrics(std::size_t record_every) const {
  MetricsTable m;
  auto& lines = m.tables["lines"];
  lines.columns = {"noise", "sigma", "eta", "mean_w0", "se_w0", "mean_w1", "se_w1", "mean_theta"};
  auto& fin = m.tables["final_states"];
  fin.columns = {"noise", "sigma", "trial", "w0", "w1", "theta"};
  auto& traj = m.tables["trajectories"];
  traj.columns = {"noise", "sigma", "step", "mean_w0", "mean_w1", "mean_theta"};
  for (std::size_t law = 0; law < noise_laws.size(); ++law) {
    for (std::size_t s = 0; s < settings.size(); ++s) {
      const auto [m0, se0] = mean_and_se(law, s, 0);
      const auto [m1, se1] = mean_and_se(law, s, 1);
      const auto [mth, seth] = mean_and_se(law, s, 2);
      (void)seth;
      lines.add_row({noise_laws[law], settings[s].label, settings[s].eta, m0, se0, m1, se1, mth});
      for (std::size_t k = 0; k < finals[law][s].size(); ++k) {
        const auto& f = finals[law][s][k];
        fin.add_row({noise_laws[law], settings[s].label, static_cast<long long>(k), f[0], f[1], f[2]});
      }
      const auto& path = mean_trajectory[law][s];
      for (std::size_t t = 0; t < path.size(); ++t) {
        if (!keep_step(t, path.size() - 1, record_every)) continue;
        traj.add_row({noise_laws[law], settings[s].label, static_cast<long long>(t), path[t][0],
                      path[t][1], path[t][2]});
      }
    }
  }
  return m;
}

Histogram loss_histogram(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("loss_histogram: need at least one bin");
  Histogram hist;
  const double top = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
  const double upper = top > 0.0 ? top : 1.0;
  const double width = upper / static_cast<double>(bins);
  hist.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) hist.edges[b] = width * static_cast<double>(b);
  hist.edges[bins] = upper;
  hist.counts.assign(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>(std::max(0.0, v) / width);
    hist.counts[std::min(b, bins - 1)] += 1;
  }
  return hist;
}

ClassifyResult run_classify(const ExperimentConfig& cfg) {
  cfg.validate();
  const Dataset full = load_source(cfg.data, derive_seed(cfg.seed, 0xda7a));
  if (!full.class_count || *full.class_count < 2) {
    throw ConfigError("data_source: classification needs a label with at least two classes");
  }
  const ModelShape shape{full.cols, *full.class_count, cfg.intercept};
  const std::size_t dim = shape.parameter_count();

  ClassifyResult out;
  out.settings = make_settings(cfg);
  out.trials = cfg.trials;
  out.epochs = cfg.epochs;
  out.histogram_bins = cfg.histogram_bins;
  out.step_size = cfg.step_rule == "per_sqrt_dim"
                      ? cfg.step_size / std::sqrt(static_cast<double>(dim))
                      : cfg.step_size;
  const auto schedule = StepSchedule::constant(out.step_size);
  const std::size_t n_settings = out.settings.size();
  out.errors.assign(n_settings, std::vector<std::vector<double>>(cfg.trials));
  out.train_errors.assign(n_settings, std::vector<double>(cfg.trials, 0.0));
  out.test_losses.assign(n_settings, std::vector<std::vector<double>>(cfg.trials));

  // Splits are shared by every setting within a trial.
  std::vector<std::pair<Dataset, Dataset>> splits;
  for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
    splits.push_back(split(full, SplitSpec{cfg.train_fraction, derive_seed(derive_seed(cfg.seed, trial), 1)}));
  }
  out.test_size = splits.front().second.rows;

  parallel_for(cfg.trials * n_settings, [&](std::size_t job) {
    const std::size_t trial = job / n_settings;
    const std::size_t s = job % n_settings;
    const Setting& setting = out.settings[s];
    const std::uint64_t trial_seed = derive_seed(cfg.seed, trial);
    const auto& [train, test] = splits[trial];

    JointState init = noisy_zero_init(dim, cfg.init_noise, derive_seed(trial_seed, 2));
    if (setting.erm) init.theta = 0.0;

    auto test_error = [&](const JointState& st) {
      double err = 0.0;
      for (std::size_t i = 0; i < test.rows; ++i) err += zero_one_error(shape, st.h, test.example(i));
      return err / static_cast<double>(test.rows);
    };

    Minibatcher batcher(train.rows, cfg.batch_size, BatchMode::EpochShuffle, derive_seed(trial_seed, 3));
    const std::size_t per_epoch = batcher.batches_per_epoch();
    const std::size_t n = cfg.epochs * per_epoch;
    auto& errors = out.errors[s][trial];
    JointState final_state = init;
    if (n == 0) {
      errors.push_back(test_error(init));
    } else {
      const auto params = setting.erm ? RiskParams::with_default_eta(kInf)
                                      : RiskParams::make(setting.sigma, setting.eta);
      const FeedbackOracle oracle = [&](const JointState& st, std::size_t, Rng&) {
        const auto& batch = batcher.next();
        if (setting.erm) return erm_feedback(train, batch, shape, st.h, LossKind::Logistic);
        return feedback(train, batch, shape, st, params, LossKind::Logistic);
      };
      RunOptions opts;
      opts.keep_trajectory = false;
      opts.on_state = [&](std::size_t t, const JointState& st) {
        if (t % per_epoch == 0) errors.push_back(test_error(st));
      };
      final_state = run(init, schedule, IdentitySet{}, n, oracle, derive_seed(trial_seed, 4 + s), opts)
                        .final_state();
    }

    double train_err = 0.0;
    for (std::size_t i = 0; i < train.rows; ++i) {
      train_err += zero_one_error(shape, final_state.h, train.example(i));
    }
    out.train_errors[s][trial] = train_err / static_cast<double>(train.rows);
    auto& losses = out.test_losses[s][trial];
    std::vector<double> grad(dim);
    for (std::size_t i = 0; i < test.rows; ++i) {
      losses.push_back(evaluate_loss(LossKind::Logistic, shape, final_state.h, test.example(i), grad));
    }
  });
  return out;
}

double ClassifyResult::mean_error(std::size_t setting, std::size_t epoch) const {
  std::vector<double> v;
  for (const auto& trial : errors[setting]) v.push_back(trial[epoch]);
  return mean_of(v);
}

double ClassifyResult::test_loss_variance(std::size_t setting, std::size_t trial) const {
  const auto& v = test_losses[setting][trial];
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size());
}

MetricsTable ClassifyResult::metrics() const {
  MetricsTable m;
  auto& err = m.tables["errors"];
  err.columns = {"setting", "eta", "epoch", "mean_error", "se_error"};
  auto& err_trial = m.tables["errors_by_trial"];
  err_trial.columns = {"setting", "trial", "epoch", "error"};
  auto& losses = m.tables["test_losses"];
  losses.columns = {"setting", "trial", "index", "loss"};
  auto& hist = m.tables["histograms"];
  hist.columns = {"setting", "trial", "bin", "lower", "upper", "count"};
  auto& sum = m.tables["summary"];
  sum.columns = {"setting", "eta", "final_error", "train_error", "mean_test_loss", "mean_test_loss_variance"};

  for (std::size_t s = 0; s < settings.size(); ++s) {
    const auto& label = settings[s].label;
    for (std::size_t e = 0; e <= epochs; ++e) {
      std::vector<double> v;
      for (const auto& trial : errors[s]) v.push_back(trial[e]);
      err.add_row({label, settings[s].eta, static_cast<long long>(e), mean_of(v), standard_error(v)});
    }
    std::vector<double> loss_means, loss_vars;
    for (std::size_t t = 0; t < trials; ++t) {
      for (std::size_t e = 0; e <= epochs; ++e) {
        err_trial.add_row({label, static_cast<long long>(t), static_cast<long long>(e), errors[s][t][e]});
      }
      const auto& tl = test_losses[s][t];
      for (std::size_t i = 0; i < tl.size(); ++i) {
        losses.add_row({label, static_cast<long long>(t), static_cast<long long>(i), tl[i]});
      }
      const auto h = loss_histogram(tl, histogram_bins);
      for (std::size_t b = 0; b < h.counts.size(); ++b) {
        hist.add_row({label, static_cast<long long>(t), static_cast<long long>(b), h.edges[b],
                      h.edges[b + 1], h.counts[b]});
      }
      loss_means.push_back(mean_of(tl));
      loss_vars.push_back(test_loss_variance(s, t));
    }
    sum.add_row({label, settings[s].eta, mean_error(s, epochs), mean_of(train_errors[s]),
                 mean_of(loss_means), mean_of(loss_vars)});
  }
  return m;
}

RiskCurveResult risk_curve_from(const ClassifyResult& trained, const std::vector<double>& eval_sigmas) {
  if (eval_sigmas.empty()) throw ConfigError("eval_sigmas: must not be empty");
  RiskCurveResult out;
  out.trained = trained.settings;
  out.eval_sigmas = eval_sigmas;
  for (double sigma : eval_sigmas) out.eval_etas.push_back(default_eta(sigma));
  out.risk.assign(trained.settings.size(), std::vector<double>(eval_sigmas.size(), 0.0));
  for (std::size_t s = 0; s < trained.settings.size(); ++s) {
    for (std::size_t e = 0; e < eval_sigmas.size(); ++e) {
      const auto params = RiskParams::make(eval_sigmas[e], out.eval_etas[e]);
      double acc = 0.0;
      for (const auto& losses : trained.test_losses[s]) acc += risk_empirical(Sample(losses), params);
      out.risk[s][e] = acc / static_cast<double>(trained.test_losses[s].size());
    }
  }
  out.rank.assign(trained.settings.size(), std::vector<std::size_t>(eval_sigmas.size(), 0));
  for (std::size_t e = 0; e < eval_sigmas.size(); ++e) {
    std::vector<std::size_t> order(trained.settings.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return out.risk[a][e] < out.risk[b][e]; });
    for (std::size_t r = 0; r < order.size(); ++r) out.rank[order[r]][e] = r;
  }
  return out;
}

RiskCurveResult run_riskcurve(const ExperimentConfig& cfg) {
  const auto trained = run_classify(cfg);
  return risk_curve_from(trained, cfg.eval_sigmas.empty() ? cfg.sigmas : cfg.eval_sigmas);
}

MetricsTable RiskCurveResult::metrics() const {
  MetricsTable m;
  auto& t = m.tables["risk_levels"];
  t.columns = {"trained", "eval_sigma", "eval_eta", "risk", "rank"};
  for (std::size_t s = 0; s < trained.size(); ++s) {
    for (std::size_t e = 0; e < eval_sigmas.size(); ++e) {
      t.add_row({trained[s].label, format_sigma(eval_sigmas[e]), eval_etas[e], risk[s][e],
                 static_cast<long long>(rank[s][e])});
    }
  }
  return m;
}

DiagnoseResult run_diagnose(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto params = RiskParams::make(
      cfg.sigmas.front(), cfg.etas.empty() ? default_eta(cfg.sigmas.front()) : cfg.etas.front());
  Theorem1Problem problem;
  problem.data = synth_regression(cfg.w0, cfg.w1, NoiseLaw::parse(cfg.noise_laws.front(), cfg.noise_scale),
                                  cfg.sample_size, InputLaw::parse(cfg.x_law), derive_seed(cfg.seed, 0xda7a));
  problem.shape = ModelShape{1, 1, true};
  problem.loss = LossKind::Squared;
  problem.params = params;
  problem.batch_size = cfg.batch_size;
  const std::size_t dim = problem.shape.parameter_count() + 1;
  problem.initial = noisy_zero_init(problem.shape.parameter_count(), cfg.init_noise, derive_seed(cfg.seed, 2));
  const BoxSet box{std::vector<double>(dim, -cfg.box_radius), std::vector<double>(dim, cfg.box_radius)};
  problem.set = box;
  problem.initial = project(problem.initial, problem.set);

  const auto objective = empirical_objective(problem.data, problem.shape, params, problem.loss);
  problem.delta0 = cfg.delta0 ? *cfg.delta0
                              : objective.value(problem.initial) - nonnegative_loss_risk_floor(params);
  problem.kappa_sq = cfg.kappa_sq ? *cfg.kappa_sq
                                  : feedback_norm_sq_bound(problem.data, problem.shape, problem.loss, params, box);

  DiagnoseResult out;
  out.lambda = loss_smoothness(problem.loss, problem.data, problem.shape);
  EnvelopeConfig env;
  env.gamma = gamma_for(params, out.lambda);
  env.beta = 0.5 / env.gamma;
  out.stationarity = check_theorem1(problem, cfg.iterations, cfg.trials, env, derive_seed(cfg.seed, 3));
  out.stationarity.kappa_source = cfg.kappa_sq ? "config" : "box bound";
  out.probe = weak_convexity_probe(objective.value, problem.initial, env.gamma, cfg.probe_triples,
                                   cfg.probe_radius, derive_seed(cfg.seed, 4));
  return out;
}

}  // namespace mlocrisk
