#include "mlocrisk/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mlocrisk/errors.hpp"
#include "mlocrisk/riskfn.hpp"

namespace mlocrisk {

namespace {

using nlohmann::json;

// Line of the first `"key":` in the raw text, 0 if not found.
std::size_t line_of_key(std::string_view text, const std::string& key) {
  const std::string quoted = "\"" + key + "\"";
  std::size_t pos = 0;
  while ((pos = text.find(quoted, pos)) != std::string_view::npos) {
    std::size_t after = pos + quoted.size();
    while (after < text.size() && (text[after] == ' ' || text[after] == '\t' || text[after] == '\r' ||
                                   text[after] == '\n')) {
      ++after;
    }
    if (after < text.size() && text[after] == ':') {
      return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
    }
    pos = after;
  }
  return 0;
}

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

struct FieldError {
  std::string field;
  std::string why;
};

[[noreturn]] void bad(const std::string& field, const std::string& why) { throw FieldError{field, why}; }

double as_double(const json& v, const std::string& field) {
  if (!v.is_number()) bad(field, "expected a number");
  return v.get<double>();
}

std::size_t as_count(const json& v, const std::string& field) {
  if (!v.is_number_integer() || v.get<long long>() < 0) bad(field, "expected a non-negative integer");
  return v.get<std::size_t>();
}

bool as_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) bad(field, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) bad(field, "expected a string");
  return v.get<std::string>();
}

double as_sigma(const json& v, const std::string& field) {
  if (v.is_number()) {
    const double s = v.get<double>();
    if (!(s >= 0.0)) bad(field, "must be >= 0");
    return s;
  }
  if (v.is_string()) {
    try {
      return parse_sigma(v.get<std::string>());
    } catch (const std::exception&) {
      bad(field, "expected a number >= 0 or \"inf\", got \"" + v.get<std::string>() + "\"");
    }
  }
  bad(field, "expected a number >= 0 or \"inf\"");
}

template <class F>
auto as_list(const json& v, const std::string& field, F item) {
  if (!v.is_array()) bad(field, "expected an array");
  std::vector<decltype(item(v, field))> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(item(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

json sigma_json(double s) {
  if (std::isinf(s)) return "inf";
  return s;
}

json sigma_list_json(const std::vector<double>& v) {
  json out = json::array();
  for (double s : v) out.push_back(sigma_json(s));
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const json&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"experiment", [](ExperimentConfig& c, const json& v, const std::string& f) {
         const auto name = as_string(v, f);
         if (name != experiment_kind_name(c.kind)) {
           bad(f, "config is for '" + name + "' but the command is '" + experiment_kind_name(c.kind) + "'");
         }
       }},
      {"seed", [](ExperimentConfig& c, const json& v, const std::string& f) {
         if (!v.is_number_unsigned()) bad(f, "expected a non-negative integer");
         c.seed = v.get<std::uint64_t>();
       }},
      {"trials", [](auto& c, const json& v, const auto& f) { c.trials = as_count(v, f); }},
      {"iterations", [](auto& c, const json& v, const auto& f) { c.iterations = as_count(v, f); }},
      {"epochs", [](auto& c, const json& v, const auto& f) { c.epochs = as_count(v, f); }},
      {"batch_size", [](auto& c, const json& v, const auto& f) { c.batch_size = as_count(v, f); }},
      {"sigmas", [](auto& c, const json& v, const auto& f) { c.sigmas = as_list(v, f, as_sigma); }},
      {"etas", [](auto& c, const json& v, const auto& f) { c.etas = as_list(v, f, as_double); }},
      {"step_size", [](auto& c, const json& v, const auto& f) { c.step_size = as_double(v, f); }},
      {"step_rule", [](auto& c, const json& v, const auto& f) { c.step_rule = as_string(v, f); }},
      {"record_every", [](auto& c, const json& v, const auto& f) { c.record_every = as_count(v, f); }},
      {"histogram_bins", [](auto& c, const json& v, const auto& f) { c.histogram_bins = as_count(v, f); }},
      {"h0", [](auto& c, const json& v, const auto& f) { c.h0 = as_double(v, f); }},
      {"theta0", [](auto& c, const json& v, const auto& f) { c.theta0 = as_double(v, f); }},
      {"a_wide", [](auto& c, const json& v, const auto& f) { c.a_wide = as_double(v, f); }},
      {"b_wide", [](auto& c, const json& v, const auto& f) { c.b_wide = as_double(v, f); }},
      {"a_thin", [](auto& c, const json& v, const auto& f) { c.a_thin = as_double(v, f); }},
      {"b_thin", [](auto& c, const json& v, const auto& f) { c.b_thin = as_double(v, f); }},
      {"w0", [](auto& c, const json& v, const auto& f) { c.w0 = as_double(v, f); }},
      {"w1", [](auto& c, const json& v, const auto& f) { c.w1 = as_double(v, f); }},
      {"noise_laws", [](auto& c, const json& v, const auto& f) { c.noise_laws = as_list(v, f, as_string); }},
      {"noise_scale", [](auto& c, const json& v, const auto& f) { c.noise_scale = as_double(v, f); }},
      {"x_law", [](auto& c, const json& v, const auto& f) { c.x_law = as_string(v, f); }},
      {"init_noise", [](auto& c, const json& v, const auto& f) { c.init_noise = as_double(v, f); }},
      {"box_radius", [](auto& c, const json& v, const auto& f) { c.box_radius = as_double(v, f); }},
      {"data_source", [](auto& c, const json& v, const auto& f) { c.data.kind = as_string(v, f); }},
      {"blob_classes", [](auto& c, const json& v, const auto& f) { c.data.blobs.classes = as_count(v, f); }},
      {"blob_dims", [](auto& c, const json& v, const auto& f) { c.data.blobs.dims = as_count(v, f); }},
      {"blob_separation", [](auto& c, const json& v, const auto& f) { c.data.blobs.separation = as_double(v, f); }},
      {"blob_count", [](auto& c, const json& v, const auto& f) { c.data.blobs.count = as_count(v, f); }},
      {"blob_tail_df", [](auto& c, const json& v, const auto& f) { c.data.blobs.tail_df = as_double(v, f); }},
      {"csv_path", [](auto& c, const json& v, const auto& f) { c.data.csv_path = as_string(v, f); }},
      {"label_column", [](auto& c, const json& v, const auto& f) { c.data.schema.label_column = as_string(v, f); }},
      {"categorical_columns", [](auto& c, const json& v, const auto& f) {
         for (const auto& name : as_list(v, f, as_string)) c.data.schema.roles[name] = ColumnRole::Categorical;
       }},
      {"ignore_columns", [](auto& c, const json& v, const auto& f) {
         for (const auto& name : as_list(v, f, as_string)) c.data.schema.roles[name] = ColumnRole::Ignore;
       }},
      {"train_fraction", [](auto& c, const json& v, const auto& f) { c.train_fraction = as_double(v, f); }},
      {"include_erm", [](auto& c, const json& v, const auto& f) { c.include_erm = as_bool(v, f); }},
      {"intercept", [](auto& c, const json& v, const auto& f) { c.intercept = as_bool(v, f); }},
      {"eval_sigmas", [](auto& c, const json& v, const auto& f) { c.eval_sigmas = as_list(v, f, as_sigma); }},
      {"kappa_sq", [](ExperimentConfig& c, const json& v, const std::string& f) {
         if (v.is_string() && v.get<std::string>() == "auto") {
           c.kappa_auto = true;
           c.kappa_sq.reset();
         } else if (v.is_number()) {
           c.kappa_sq = v.get<double>();
           c.kappa_auto = false;
         } else {
           bad(f, "expected a positive number or \"auto\"");
         }
       }},
      {"delta0", [](auto& c, const json& v, const auto& f) { c.delta0 = as_double(v, f); }},
      {"sample_size", [](auto& c, const json& v, const auto& f) { c.sample_size = as_count(v, f); }},
      {"probe_triples", [](auto& c, const json& v, const auto& f) { c.probe_triples = as_count(v, f); }},
      {"probe_radius", [](auto& c, const json& v, const auto& f) { c.probe_radius = as_double(v, f); }},
  };
  return table;
}

std::vector<std::string> roles_named(const CsvSchema& schema, ColumnRole role) {
  std::vector<std::string> out;
  for (const auto& [name, r] : schema.roles) {
    if (r == role) out.push_back(name);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, ExperimentKind kind, std::string_view source_name) {
  const std::string src(source_name);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError(src + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": malformed JSON");
  }
  if (!doc.is_object()) throw ConfigError(src + ":1: top level must be a JSON object");

  ExperimentConfig cfg = default_config(kind);
  if (kind == ExperimentKind::Classify || kind == ExperimentKind::RiskCurve) {
    cfg.data.schema.label_column = "label";
  }
  auto where = [&](const std::string& field) {
    const std::string key = field.substr(0, field.find('['));
    const std::size_t line = line_of_key(text, key);
    return src + (line ? ":" + std::to_string(line) : std::string()) + ": field '" + field + "': ";
  };
  for (const auto& [key, value] : doc.items()) {
    if (!key.empty() && key.front() == '_') continue;
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where(key) + "unknown key");
    try {
      it->second(cfg, value, key);
    } catch (const FieldError& e) {
      throw ConfigError(where(e.field) + e.why);
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    const std::string field = msg.substr(0, msg.find(':'));
    throw ConfigError(where(field) + msg.substr(std::min(msg.size(), field.size() + 2)));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), kind, path.string());
}

std::string manifest_json(const ExperimentConfig& cfg) {
  json m;
  m["experiment"] = experiment_kind_name(cfg.kind);
  m["seed"] = cfg.seed;
  m["trials"] = cfg.trials;
  m["batch_size"] = cfg.batch_size;
  m["sigmas"] = sigma_list_json(cfg.sigmas);
  m["etas"] = cfg.etas;
  m["step_size"] = cfg.step_size;
  m["step_rule"] = cfg.step_rule;
  m["record_every"] = cfg.record_every;
  switch (cfg.kind) {
    case ExperimentKind::Toy:
      m["iterations"] = cfg.iterations;
      m["h0"] = cfg.h0;
      m["theta0"] = cfg.theta0;
      m["a_wide"] = cfg.a_wide;
      m["b_wide"] = cfg.b_wide;
      m["a_thin"] = cfg.a_thin;
      m["b_thin"] = cfg.b_thin;
      break;
    case ExperimentKind::Linreg:
    case ExperimentKind::Diagnose:
      m["iterations"] = cfg.iterations;
      m["w0"] = cfg.w0;
      m["w1"] = cfg.w1;
      m["noise_laws"] = cfg.noise_laws;
      m["noise_scale"] = cfg.noise_scale;
      m["x_law"] = cfg.x_law;
      m["init_noise"] = cfg.init_noise;
      m["box_radius"] = cfg.box_radius;
      if (cfg.kind == ExperimentKind::Diagnose) {
        if (cfg.kappa_sq) {
          m["kappa_sq"] = *cfg.kappa_sq;
        } else {
          m["kappa_sq"] = "auto";
        }
        if (cfg.delta0) m["delta0"] = *cfg.delta0;
        m["sample_size"] = cfg.sample_size;
        m["probe_triples"] = cfg.probe_triples;
        m["probe_radius"] = cfg.probe_radius;
      }
      break;
    case ExperimentKind::Classify:
    case ExperimentKind::RiskCurve:
      m["epochs"] = cfg.epochs;
      m["histogram_bins"] = cfg.histogram_bins;
      m["init_noise"] = cfg.init_noise;
      m["data_source"] = cfg.data.kind;
      if (cfg.data.kind == "blobs") {
        m["blob_classes"] = cfg.data.blobs.classes;
        m["blob_dims"] = cfg.data.blobs.dims;
        m["blob_separation"] = cfg.data.blobs.separation;
        m["blob_count"] = cfg.data.blobs.count;
        m["blob_tail_df"] = cfg.data.blobs.tail_df;
      } else {
        m["csv_path"] = cfg.data.csv_path;
        m["label_column"] = cfg.data.schema.label_column;
        m["categorical_columns"] = roles_named(cfg.data.schema, ColumnRole::Categorical);
        m["ignore_columns"] = roles_named(cfg.data.schema, ColumnRole::Ignore);
      }
      m["train_fraction"] = cfg.train_fraction;
      m["include_erm"] = cfg.include_erm;
      m["intercept"] = cfg.intercept;
      m["eval_sigmas"] = sigma_list_json(cfg.eval_sigmas);
      break;
  }
  std::vector<double> resolved;
  for (std::size_t i = 0; i < cfg.sigmas.size(); ++i) {
    resolved.push_back(cfg.etas.empty() ? default_eta(cfg.sigmas[i]) : cfg.etas[std::min(i, cfg.etas.size() - 1)]);
  }
  m["_resolved_etas"] = resolved;
  m["_version"] = MLOCRISK_VERSION;
  m["_root_seed"] = cfg.seed;
  m["_seed_scheme"] = "splitmix64(root) streams per experiment axis, then per trial";
  if (cfg.kind == ExperimentKind::Toy || cfg.kind == ExperimentKind::Linreg) {
    m["_note"] = "iteration count is a chosen default, not a published value";
  }
  return m.dump(2) + "\n";
}

}  // namespace mlocrisk
