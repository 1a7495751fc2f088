#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>

#include "mlocrisk/data.hpp"
#include "mlocrisk/errors.hpp"

using namespace mlocrisk;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& text) {
  const auto path = fs::temp_directory_path() / ("mlocrisk_test_" + name);
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

}  // namespace

TEST_CASE("csv loader: one-hot, scaling, dropped rows") {
  const auto path = write_temp("a.csv",
                               "\xEF\xBB\xBF" "x,color,label\n"
                               "1,red,b\n"
                               "3,\"blue\",a\n"
                               "2,,a\n"
                               "5,red,c\n");
  CsvSchema schema;
  schema.label_column = "label";
  schema.roles["color"] = ColumnRole::Categorical;
  const auto ds = load_csv(path, schema);
  CHECK(ds.rows == 3);
  CHECK(ds.dropped_rows == 1);
  REQUIRE(ds.cols == 3);
  CHECK(ds.feature_names == std::vector<std::string>{"x", "color=blue", "color=red"});
  CHECK(ds.row(0)[0] == 0.0);
  CHECK(ds.row(1)[0] == doctest::Approx(0.5));
  CHECK(ds.row(2)[0] == 1.0);
  CHECK(ds.row(1)[1] == 1.0);
  CHECK(ds.row(1)[2] == 0.0);
  CHECK(ds.class_count == 3u);
  CHECK(ds.labels == std::vector<double>{1.0, 0.0, 2.0});
}

TEST_CASE("csv loader reports row and column of bad values") {
  const auto path = write_temp("b.csv", "x,label\n1,0\nabc,1\n");
  CsvSchema schema;
  schema.label_column = "label";
  try {
    load_csv(path, schema);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(e.column() == 1);
  }
  CHECK_THROWS(load_csv(write_temp("c.csv", "x,y\n1,2\n"), schema));
}

TEST_CASE("min-max scaling maps constant columns to zero") {
  Dataset ds;
  ds.rows = 3;
  ds.cols = 2;
  ds.features = {1, 7, 2, 7, 3, 7};
  ds.labels = {0, 0, 0};
  min_max_scale(ds);
  CHECK(ds.features == std::vector<double>{0, 0, 0.5, 0, 1, 0});
}

TEST_CASE("split is a seeded partition") {
  const auto ds = synth_blobs(BlobSpec{3, 3, 4.0, 100, 0.0}, 1);
  const auto [tr, te] = split(ds, SplitSpec{0.88, 9});
  CHECK(tr.rows == 88);
  CHECK(te.rows == 12);
  const auto [tr2, te2] = split(ds, SplitSpec{0.88, 9});
  CHECK(tr2.features == tr.features);
  const auto [tr3, te3] = split(ds, SplitSpec{0.88, 10});
  CHECK(tr3.features != tr.features);
  // Label multiset is preserved.
  std::vector<double> all(tr.labels);
  all.insert(all.end(), te.labels.begin(), te.labels.end());
  std::sort(all.begin(), all.end());
  std::vector<double> orig(ds.labels);
  std::sort(orig.begin(), orig.end());
  CHECK(all == orig);
}

TEST_CASE("folded normal moments") {
  const auto s = folded_normal(0.0, 1.0, 200000, 4);
  CHECK(s.mean() == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(0.01));
  CHECK(s.variance() == doctest::Approx(1.0 - 2.0 / std::numbers::pi).epsilon(0.02));
  CHECK(s.min() >= 0.0);
}

TEST_CASE("synthetic regression and noise laws") {
  const auto ds = synth_regression(1.0, 1.0, NoiseLaw::parse("none", 0.8), 50, InputLaw::parse("uniform"), 3);
  for (std::size_t i = 0; i < ds.rows; ++i) CHECK(ds.labels[i] == doctest::Approx(1.0 + ds.row(i)[0]));
  const auto ln = synth_regression(0.0, 0.0, NoiseLaw::parse("lognormal", 0.8), 200000,
                                   InputLaw::parse("normal"), 3);
  const double mean = std::accumulate(ln.labels.begin(), ln.labels.end(), 0.0) / ln.rows;
  CHECK(std::abs(mean) < 0.02);
  CHECK_THROWS(NoiseLaw::parse("cauchy", 1.0));
}

TEST_CASE("blobs are scaled and labelled") {
  const auto ds = synth_blobs(BlobSpec{4, 5, 6.0, 400, 3.0}, 2);
  CHECK(ds.class_count == 4u);
  CHECK(ds.cols == 5);
  for (double v : ds.features) CHECK((v >= 0.0 && v <= 1.0));
  CHECK_THROWS(synth_blobs(BlobSpec{4, 2, 6.0, 400, 0.0}, 2));
}
