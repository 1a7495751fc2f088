#include "mlocrisk/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlocrisk/config.hpp"
#include "mlocrisk/errors.hpp"
#include "mlocrisk/experiments.hpp"
#include "mlocrisk/risk_eval.hpp"

namespace mlocrisk {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunArgs {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

void write_tables(const fs::path& dir, const MetricsTable& m) {
  for (const auto& [name, table] : m.tables) write_csv(dir / (name + ".csv"), table);
}

json sigma_json(double s) { return std::isinf(s) ? json("inf") : json(s); }

ExperimentConfig resolve(const RunArgs& args, ExperimentKind kind) {
  ExperimentConfig cfg = args.config.empty() ? default_config(kind) : load_config(args.config, kind);
  if (args.seed) cfg.seed = *args.seed;
  cfg.validate();
  return cfg;
}

void run_experiment(const RunArgs& args, ExperimentKind kind, std::ostream& log) {
  const auto cfg = resolve(args, kind);
  const fs::path dir(args.out);
  fs::create_directories(dir);
  if (args.verbose) log << "running " << experiment_kind_name(kind) << " (seed " << cfg.seed << ")\n";

  MetricsTable metrics;
  json report;
  switch (kind) {
    case ExperimentKind::Toy:
      metrics = run_toy(cfg).metrics(cfg.record_every);
      break;
    case ExperimentKind::Linreg:
      metrics = run_linreg(cfg).metrics(cfg.record_every);
      break;
    case ExperimentKind::Classify:
      metrics = run_classify(cfg).metrics();
      break;
    case ExperimentKind::RiskCurve: {
      const auto trained = run_classify(cfg);
      metrics = trained.metrics();
      const auto curve =
          risk_curve_from(trained, cfg.eval_sigmas.empty() ? cfg.sigmas : cfg.eval_sigmas);
      for (auto& [name, table] : curve.metrics().tables) metrics.tables[name] = table;
      break;
    }
    case ExperimentKind::Diagnose: {
      const auto d = run_diagnose(cfg);
      const auto& s = d.stationarity;
      json st = {{"env_grad_norm_sq_mean", s.env_grad_norm_sq_mean},
                 {"theorem_bound", s.theorem_bound},
                 {"remark3_bound", s.remark3_bound},
                 {"within_theorem_bound", s.within_theorem_bound()},
                 {"within_remark3_bound", s.within_remark3_bound()},
                 {"trials", s.trials},
                 {"iterations", s.iterations},
                 {"gamma", s.gamma},
                 {"beta", s.beta},
                 {"alpha", s.alpha},
                 {"lambda", d.lambda},
                 {"kappa_sq", s.kappa_sq},
                 {"kappa_sq_estimate", s.kappa_sq_estimate},
                 {"kappa_source", s.kappa_source},
                 {"delta0", s.delta0},
                 {"objective", s.objective},
                 {"per_trial", s.per_trial}};
      json probe = {{"triples", d.probe.triples},
                    {"violations", d.probe.violations},
                    {"worst_slack", d.probe.worst_slack},
                    {"gamma", s.gamma},
                    {"radius", cfg.probe_radius}};
      write_text(dir / "stationarity_report.json", st.dump(2) + "\n");
      write_text(dir / "probe_report.json", probe.dump(2) + "\n");
      break;
    }
  }
  write_tables(dir, metrics);
  write_text(dir / "manifest.json", manifest_json(cfg));
  if (args.verbose) log << "wrote " << metrics.tables.size() << " tables to " << dir.string() << "\n";
}

// One numeric column; a non-numeric first line is taken as a header.
Sample read_loss_column(std::istream& in, const std::string& name) {
  std::vector<double> values;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (row == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    const std::string cell = line.substr(first, last - first + 1);
    if (cell.find(',') != std::string::npos) throw ParseError(name + ": expected one column", row, 2);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
      if (values.empty() && row == 1) continue;
      throw ParseError(name + ": not a finite number '" + cell + "'", row, 1);
    }
    values.push_back(v);
  }
  if (values.empty()) throw ParseError(name + ": no loss values", row, 1);
  return Sample(std::move(values));
}

void risk_eval(const std::string& input, const std::string& sigma_text, std::optional<double> eta,
               std::ostream& out) {
  double sigma = 0.0;
  try {
    sigma = parse_sigma(sigma_text);
  } catch (const std::exception&) {
    throw ConfigError("field 'sigma': expected a number >= 0 or \"inf\", got \"" + sigma_text + "\"");
  }
  const auto params = eta ? RiskParams::make(sigma, *eta) : RiskParams::with_default_eta(sigma);
  Sample sample = [&] {
    if (input == "-") return read_loss_column(std::cin, "stdin");
    std::ifstream f(input);
    if (!f) throw ConfigError("field 'input': cannot open " + input);
    return read_loss_column(f, input);
  }();
  const auto sol = solve_theta(sample, params);
  json j = {{"sigma", sigma_json(sigma)},
            {"eta", params.eta()},
            {"eta_source", eta ? "given" : "default"},
            {"theta_star", sol.theta_star},
            {"risk", sol.risk_value}};
  if (sigma > 0.0 && std::isfinite(sigma)) j["m_location"] = m_location(sample, sigma);
  out << j.dump(2) << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Location-scale risk experiments and diagnostics", "mlocrisk"};
  app.set_version_flag("--version", std::string(MLOCRISK_VERSION));
  app.require_subcommand(1);

  RunArgs args;
  struct Command {
    const char* name;
    ExperimentKind kind;
    const char* help;
  };
  const Command commands[] = {
      {"toy", ExperimentKind::Toy, "mixture of wide and thin folded-normal losses"},
      {"linreg", ExperimentKind::Linreg, "one-dimensional regression under two noise laws"},
      {"classify", ExperimentKind::Classify, "multiclass logistic regression against ERM"},
      {"riskcurve", ExperimentKind::RiskCurve, "classify, then evaluate every model across a sigma grid"},
      {"diagnose", ExperimentKind::Diagnose, "stationarity and weak-convexity checks on a small problem"},
  };
  std::optional<ExperimentKind> chosen;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", args.config, "flat JSON config")->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "output directory (created if absent)");
    sub->add_option("--seed", args.seed, "override the root seed");
    sub->add_flag("-v,--verbose", args.verbose);
    sub->callback([&chosen, kind = c.kind] { chosen = kind; });
  }

  std::string input, sigma_text;
  std::optional<double> eta;
  bool risk_eval_chosen = false;
  auto* re = app.add_subcommand("risk-eval", "risk of a column of loss values");
  re->add_option("--input", input, "CSV with one numeric column, or - for stdin")->required();
  re->add_option("--sigma", sigma_text, "scale: number >= 0 or inf")->required();
  re->add_option("--eta", eta, "weight; defaults per sigma");
  re->callback([&] { risk_eval_chosen = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (risk_eval_chosen) {
      risk_eval(input, sigma_text, eta, out);
    } else if (chosen) {
      run_experiment(args, *chosen, err);
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidParams& e) {
    err << "invalid parameters: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergedState& e) {
    err << "diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace mlocrisk
