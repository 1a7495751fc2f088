#include "mlocrisk/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "mlocrisk/errors.hpp"
#include "mlocrisk/rng.hpp"

namespace mlocrisk {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Comma-separated fields; double quotes group a field and "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t row) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError("unterminated quote", row, fields.size() + 1);
  fields.push_back(trim(cur));
  return fields;
}

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

// Numeric order when every level parses as a number, lexicographic otherwise.
std::vector<std::string> sorted_levels(const std::set<std::string>& levels) {
  std::vector<std::string> out(levels.begin(), levels.end());
  const bool numeric = std::all_of(out.begin(), out.end(), [](const std::string& s) {
    double v;
    return parse_number(s, v);
  });
  if (numeric) {
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      double x = 0, y = 0;
      parse_number(a, x);
      parse_number(b, y);
      return x < y;
    });
  }
  return out;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.rows = indices.size();
  out.cols = cols;
  out.class_count = class_count;
  out.feature_names = feature_names;
  out.features.reserve(indices.size() * cols);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= rows) throw std::out_of_range("Dataset::subset: row index out of range");
    const auto r = row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

double Dataset::max_row_norm_sq(bool with_intercept) const {
  double best = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    double s = with_intercept ? 1.0 : 0.0;
    for (double v : row(i)) s += v * v;
    best = std::max(best, s);
  }
  return best;
}

void min_max_scale(Dataset& ds) {
  for (std::size_t j = 0; j < ds.cols; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < ds.rows; ++i) {
      lo = std::min(lo, ds.features[i * ds.cols + j]);
      hi = std::max(hi, ds.features[i * ds.cols + j]);
    }
    const double span = hi - lo;
    for (std::size_t i = 0; i < ds.rows; ++i) {
      double& v = ds.features[i * ds.cols + j];
      v = span > 0.0 ? std::clamp((v - lo) / span, 0.0, 1.0) : 0.0;
    }
  }
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw EmptyDataset(path.string() + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line, 1);

  std::size_t label_at = header.size();
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == schema.label_column) label_at = j;
  }
  if (label_at == header.size()) {
    throw ParseError("label column '" + schema.label_column + "' not in header", 1, 0);
  }
  for (const auto& [name, role] : schema.roles) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw ParseError("schema column '" + name + "' not in header", 1, 0);
    }
  }
  auto role_of = [&](std::size_t j) {
    auto it = schema.roles.find(header[j]);
    return it == schema.roles.end() ? ColumnRole::Numeric : it->second;
  };

  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> record_rows;
  std::size_t dropped = 0;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line, row_no);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       row_no, std::min(fields.size(), header.size()) + 1);
    }
    bool missing = false;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (role_of(j) != ColumnRole::Ignore && fields[j].empty()) missing = true;
    }
    if (missing) {
      ++dropped;
      continue;
    }
    records.push_back(std::move(fields));
    record_rows.push_back(row_no);
  }
  if (records.empty()) throw EmptyDataset(path.string() + ": no complete rows");

  // Per-column levels for categorical features and classification labels.
  std::map<std::size_t, std::vector<std::string>> levels;
  for (std::size_t j = 0; j < header.size(); ++j) {
    const bool is_label = j == label_at;
    if ((is_label && schema.label_kind == LabelKind::Classification) ||
        (!is_label && role_of(j) == ColumnRole::Categorical)) {
      std::set<std::string> seen;
      for (const auto& rec : records) seen.insert(rec[j]);
      levels[j] = sorted_levels(seen);
    }
  }

  Dataset ds;
  ds.dropped_rows = dropped;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j == label_at || role_of(j) == ColumnRole::Ignore) continue;
    if (role_of(j) == ColumnRole::Categorical) {
      for (const auto& level : levels[j]) ds.feature_names.push_back(header[j] + "=" + level);
    } else {
      ds.feature_names.push_back(header[j]);
    }
  }
  ds.cols = ds.feature_names.size();
  ds.rows = records.size();
  ds.features.reserve(ds.rows * ds.cols);
  if (schema.label_kind == LabelKind::Classification) ds.class_count = levels[label_at].size();

  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == label_at || role_of(j) == ColumnRole::Ignore) continue;
      if (role_of(j) == ColumnRole::Categorical) {
        for (const auto& level : levels[j]) ds.features.push_back(rec[j] == level ? 1.0 : 0.0);
      } else {
        double v = 0.0;
        if (!parse_number(rec[j], v)) {
          throw ParseError("non-numeric value '" + rec[j] + "' in column '" + header[j] + "'",
                           record_rows[r], j + 1);
        }
        ds.features.push_back(v);
      }
    }
    if (schema.label_kind == LabelKind::Classification) {
      const auto& lv = levels[label_at];
      ds.labels.push_back(
          static_cast<double>(std::find(lv.begin(), lv.end(), rec[label_at]) - lv.begin()));
    } else {
      double y = 0.0;
      if (!parse_number(rec[label_at], y)) {
        throw ParseError("non-numeric label '" + rec[label_at] + "'", record_rows[r], label_at + 1);
      }
      ds.labels.push_back(y);
    }
  }
  min_max_scale(ds);
  return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  if (ds.rows < 2) throw std::invalid_argument("split: need at least two rows");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw std::invalid_argument("split: train_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(ds.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(ds.rows)));
  n_train = std::clamp<std::size_t>(n_train, 1, ds.rows - 1);
  const std::span<const std::size_t> all(order);
  return {ds.subset(all.first(n_train)), ds.subset(all.subspan(n_train))};
}

Sample folded_normal(double a, double b, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("folded_normal: count must be >= 1");
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> draws(count);
  for (double& d : draws) d = std::abs(a + b * normal(rng));
  return Sample(std::move(draws));
}

NoiseLaw NoiseLaw::parse(std::string_view name, double scale) {
  if (name == "none") return {Kind::None, scale};
  if (name == "normal") return {Kind::Normal, scale};
  if (name == "lognormal" || name == "lognormal_centered") return {Kind::LognormalCentered, scale};
  throw std::invalid_argument("unknown noise law '" + std::string(name) + "'");
}

std::string NoiseLaw::name() const {
  switch (kind) {
    case Kind::None:
      return "none";
    case Kind::Normal:
      return "normal";
    case Kind::LognormalCentered:
      return "lognormal";
  }
  return "unknown";
}

InputLaw InputLaw::parse(std::string_view name) {
  if (name == "normal") return {Kind::Normal, 0.0, 1.0};
  if (name == "uniform") return {Kind::Uniform, -1.0, 1.0};
  if (name == "uniform01") return {Kind::Uniform, 0.0, 1.0};
  throw std::invalid_argument("unknown input law '" + std::string(name) + "'");
}

std::string InputLaw::name() const {
  if (kind == Kind::Normal) return "normal";
  return a == 0.0 ? "uniform01" : "uniform";
}

Dataset synth_regression(double w0, double w1, const NoiseLaw& noise, std::size_t count,
                         const InputLaw& inputs, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("synth_regression: count must be >= 1");
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(inputs.a, inputs.b);
  Dataset ds;
  ds.rows = count;
  ds.cols = 1;
  ds.feature_names = {"x"};
  ds.features.resize(count);
  ds.labels.resize(count);
  const double lognormal_mean = std::exp(0.5 * noise.scale * noise.scale);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = inputs.kind == InputLaw::Kind::Normal ? inputs.a + inputs.b * normal(rng)
                                                           : uniform(rng);
    double eps = 0.0;
    switch (noise.kind) {
      case NoiseLaw::Kind::None:
        break;
      case NoiseLaw::Kind::Normal:
        eps = noise.scale * normal(rng);
        break;
      case NoiseLaw::Kind::LognormalCentered:
        eps = std::exp(noise.scale * normal(rng)) - lognormal_mean;
        break;
    }
    ds.features[i] = x;
    ds.labels[i] = w0 + w1 * x + eps;
  }
  return ds;
}

Dataset synth_blobs(const BlobSpec& spec, std::uint64_t seed) {
  if (spec.classes < 2) throw std::invalid_argument("synth_blobs: need at least two classes");
  if (spec.dims < spec.classes) throw std::invalid_argument("synth_blobs: dims must be >= classes");
  if (spec.count == 0) throw std::invalid_argument("synth_blobs: count must be >= 1");
  auto rng = make_rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, spec.classes - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::student_t_distribution<double> student(spec.tail_df > 0.0 ? spec.tail_df : 1.0);
  const double k = static_cast<double>(spec.classes);

  Dataset ds;
  ds.rows = spec.count;
  ds.cols = spec.dims;
  ds.class_count = spec.classes;
  for (std::size_t j = 0; j < spec.dims; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  ds.features.resize(spec.count * spec.dims);
  ds.labels.resize(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const std::size_t label = pick(rng);
    ds.labels[i] = static_cast<double>(label);
    for (std::size_t j = 0; j < spec.dims; ++j) {
      double center = 0.0;
      if (j < spec.classes) center = spec.separation * ((j == label ? 1.0 : 0.0) - 1.0 / k);
      const double noise = spec.tail_df > 0.0 ? student(rng) : normal(rng);
      ds.features[i * spec.dims + j] = center + noise;
    }
  }
  min_max_scale(ds);
  return ds;
}

}  // namespace mlocrisk
