#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mlocrisk/losses.hpp"
#include "mlocrisk/risk_eval.hpp"

namespace mlocrisk {

/// Row-major feature matrix with one label per row.
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> features;
  std::vector<double> labels;
  std::optional<std::size_t> class_count;  // set for classification data
  std::vector<std::string> feature_names;
  std::size_t dropped_rows = 0;  // rows removed for missing values at load time

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features).subspan(i * cols, cols);
  }
  Example example(std::size_t i) const { return Example{row(i), labels[i]}; }

  Dataset subset(std::span<const std::size_t> indices) const;
  /// Largest squared Euclidean row norm, counting a constant 1 when `with_intercept`.
  double max_row_norm_sq(bool with_intercept) const;
};

/// Rescales every column to [0, 1]; constant columns become 0.
void min_max_scale(Dataset& ds);

enum class ColumnRole { Numeric, Categorical, Ignore };
enum class LabelKind { Regression, Classification };

struct CsvSchema {
  std::string label_column;
  LabelKind label_kind = LabelKind::Classification;
  /// Columns absent from this map are numeric.
  std::map<std::string, ColumnRole> roles;
};

/**
 * Reads a comma-separated file with a header row. Rows with an empty field
 * are dropped, categorical columns are one-hot encoded (levels in sorted
 * order), and all feature columns are min-max scaled over the whole file.
 * Classification labels map to indices in sorted level order.
 */
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

struct SplitSpec {
  double train_fraction = 0.88;
  std::uint64_t seed = 0;
};

/// Seeded shuffle, then the first floor(train_fraction * n) rows train.
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

/// |a + b N| for standard normal N.
Sample folded_normal(double a, double b, std::size_t count, std::uint64_t seed);

struct NoiseLaw {
  enum class Kind { None, Normal, LognormalCentered };
  Kind kind = Kind::Normal;
  double scale = 0.8;

  static NoiseLaw parse(std::string_view name, double scale);
  std::string name() const;
};

struct InputLaw {
  enum class Kind { Normal, Uniform };
  Kind kind = Kind::Normal;
  double a = 0.0;  // mean, or lower end
  double b = 1.0;  // standard deviation, or upper end

  static InputLaw parse(std::string_view name);
  std::string name() const;
};

/// Y = w0 + w1 X + eps; features are raw X (one column), not rescaled.
Dataset synth_regression(double w0, double w1, const NoiseLaw& noise, std::size_t count,
                         const InputLaw& inputs, std::uint64_t seed);

struct BlobSpec {
  std::size_t classes = 3;
  std::size_t dims = 3;
  double separation = 4.0;
  std::size_t count = 600;
  /// Degrees of freedom of a Student-t feature noise; 0 means Gaussian.
  double tail_df = 0.0;
};

/// Class-conditional blobs centered at separation * (e_k - 1/K); min-max scaled.
Dataset synth_blobs(const BlobSpec& spec, std::uint64_t seed);

}  // namespace mlocrisk
