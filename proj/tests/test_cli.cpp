#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlocrisk/cli.hpp"
#include "mlocrisk/config.hpp"
#include "mlocrisk/errors.hpp"

using namespace mlocrisk;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("mlocrisk_cli_" + name);
  fs::remove_all(p);
  return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mlocrisk");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("config parsing overlays defaults") {
  const auto cfg = parse_config(R"({"trials": 3, "sigmas": [0, "inf", 2.5], "_comment": "ignored"})",
                                ExperimentKind::Linreg);
  CHECK(cfg.trials == 3);
  REQUIRE(cfg.sigmas.size() == 3);
  CHECK(std::isinf(cfg.sigmas[1]));
  CHECK(cfg.batch_size == 8);
}

TEST_CASE("config errors name the field and line") {
  const std::string text = "{\n  \"trials\": 2,\n  \"sigmas\": [1, \"fast\"]\n}\n";
  CHECK_THROWS_WITH_AS(parse_config(text, ExperimentKind::Toy, "c.json"),
                       doctest::Contains("c.json:3: field 'sigmas[1]'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("{\n\"trails\": 2}", ExperimentKind::Toy, "c.json"),
                       doctest::Contains("c.json:2: field 'trails': unknown key"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("{\n\"trials\": 2,,\n}", ExperimentKind::Toy, "c.json"),
                       doctest::Contains("c.json:2:"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("{\"trials\": 0}", ExperimentKind::Toy), doctest::Contains("trials"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("{\"experiment\": \"toy\"}", ExperimentKind::Linreg),
                       doctest::Contains("experiment"), ConfigError);
}

TEST_CASE("manifest parses back to the same config") {
  for (auto kind : {ExperimentKind::Toy, ExperimentKind::Linreg, ExperimentKind::Classify,
                    ExperimentKind::RiskCurve}) {
    auto cfg = default_config(kind);
    cfg.seed = 18446744073709551615ull;
    const auto text = manifest_json(cfg);
    const auto back = parse_config(text, kind);
    CHECK(manifest_json(back) == text);
  }
  auto d = default_config(ExperimentKind::Diagnose);
  d.kappa_sq = 12.5;
  CHECK(manifest_json(parse_config(manifest_json(d), ExperimentKind::Diagnose)) == manifest_json(d));
}

TEST_CASE("toy command writes trajectories and manifest") {
  const auto dir = scratch("toy");
  fs::create_directories(dir);
  const auto cfg = write_file(dir / "c.json", R"({"iterations": 50, "trials": 2, "etas": [1, 2]})");
  const auto r = cli({"toy", "--config", cfg.string(), "--out", (dir / "out").string(), "--seed", "7"});
  CHECK(r.code == kExitOk);
  CHECK(fs::exists(dir / "out" / "trajectories.csv"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["_version"] == MLOCRISK_VERSION);

  // Re-running from the manifest reproduces the metrics byte for byte.
  const auto r2 = cli({"toy", "--config", (dir / "out" / "manifest.json").string(), "--out", (dir / "again").string()});
  CHECK(r2.code == kExitOk);
  CHECK(slurp(dir / "out" / "trajectories.csv") == slurp(dir / "again" / "trajectories.csv"));
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  fs::create_directories(dir);
  const auto bad = write_file(dir / "bad.json", R"({"sigmas": ["fast"]})");
  const auto r = cli({"linreg", "--config", bad.string(), "--out", (dir / "o").string()});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("sigmas") != std::string::npos);

  const auto div = write_file(dir / "div.json", R"({"iterations": 400, "trials": 2, "step_size": 10, "box_radius": 0})");
  const auto d = cli({"linreg", "--config", div.string(), "--out", (dir / "o2").string()});
  CHECK(d.code == kExitDiverged);

  const auto nokappa = write_file(dir / "nk.json", "{}");
  CHECK(cli({"diagnose", "--config", nokappa.string(), "--out", (dir / "o3").string()}).code == kExitConfig);
  CHECK(cli({"toy", "--bogus"}).code == kExitConfig);
}

TEST_CASE("diagnose writes both reports") {
  const auto dir = scratch("diag");
  fs::create_directories(dir);
  const auto cfg = write_file(dir / "c.json", R"({"kappa_sq": "auto", "trials": 4, "iterations": 200, "probe_triples": 500})");
  const auto r = cli({"diagnose", "--config", cfg.string(), "--out", (dir / "o").string()});
  REQUIRE(r.code == kExitOk);
  const auto st = nlohmann::json::parse(slurp(dir / "o" / "stationarity_report.json"));
  CHECK(st["within_theorem_bound"] == true);
  const auto probe = nlohmann::json::parse(slurp(dir / "o" / "probe_report.json"));
  CHECK(probe["violations"] == 0);
}

TEST_CASE("risk-eval") {
  const auto dir = scratch("re");
  fs::create_directories(dir);
  const auto two = write_file(dir / "two.csv", "loss\n0\n2\n");
  auto r = cli({"risk-eval", "--input", two.string(), "--sigma", "inf", "--eta", "1"});
  REQUIRE(r.code == kExitOk);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["risk"].get<double>() == doctest::Approx(1.75));
  CHECK(j["sigma"] == "inf");
  CHECK_FALSE(j.contains("m_location"));

  const auto same = write_file(dir / "same.csv", "3\n3\n3\n");
  j = nlohmann::json::parse(cli({"risk-eval", "--input", same.string(), "--sigma", "inf", "--eta", "1"}).out);
  CHECK(j["risk"].get<double>() == doctest::Approx(2.75));

  r = cli({"risk-eval", "--input", two.string(), "--sigma", "0.5"});
  REQUIRE(r.code == kExitOk);
  j = nlohmann::json::parse(r.out);
  CHECK(j["eta"].get<double>() == doctest::Approx(1.0001 / std::numbers::pi));
  CHECK(j.contains("m_location"));

  const auto junk = write_file(dir / "junk.csv", "1\nx\n");
  CHECK(cli({"risk-eval", "--input", junk.string(), "--sigma", "1"}).code == kExitConfig);
  CHECK(cli({"risk-eval", "--input", two.string(), "--sigma", "fast"}).code == kExitConfig);
}

TEST_CASE("shipped configs parse") {
  const fs::path dir = fs::path(MLOCRISK_SOURCE_DIR) / "configs";
  std::size_t seen = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    const auto doc = nlohmann::json::parse(slurp(entry.path()));
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path(), parse_experiment_kind(doc.at("experiment").get<std::string>())));
    ++seen;
  }
  CHECK(seen >= 5);
}
