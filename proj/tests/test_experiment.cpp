#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ftrluq/experiment.hpp"
#include "ftrluq/game.hpp"
#include "ftrluq/io_util.hpp"

using namespace ftrluq;

namespace {

void expect_config_error(const std::string& text, const std::string& needle) {
  try {
    parse_config_text(text);
    FAIL("expected a parse error for: " << text);
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK_MESSAGE(what.find(needle) != std::string::npos,
                  "missing '" << needle << "' in: " << what);
  }
}

std::string fresh_dir(const std::string& name) {
  std::filesystem::remove_all(name);
  return name;
}

}  // namespace

TEST_CASE("minimal config gets the documented defaults") {
  const ExperimentConfig cfg =
      parse_config_text(R"({"game":"RPS","algorithm":{"rule":"AltMWU"}})");
  REQUIRE(cfg.games.size() == 1);
  CHECK(cfg.games[0].label == "RPS");
  CHECK(cfg.algorithm.rule == UpdateRule::AltMWU);
  CHECK(cfg.algorithm.regularizer_kind == RegKind::NegativeEntropy);
  CHECK(cfg.algorithm.eta == 0.05);
  CHECK(cfg.horizon == 10000);
  CHECK(cfg.sample_every == 10);
  CHECK(cfg.ensemble_n == 500);
  CHECK(cfg.seed == 0);
}

TEST_CASE("named games expand to their printed matrices") {
  const ExperimentConfig cfg = parse_config_text(R"({"game":"A1"})");
  REQUIRE(cfg.games.size() == 1);
  Mat expect(2, 2);
  expect << 1, -1, -1, 1;
  CHECK((cfg.games[0].payoff - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("inline and random game specs") {
  const ExperimentConfig inline_cfg =
      parse_config_text(R"({"game":[[0,-2],[2,0]]})");
  CHECK(inline_cfg.games[0].payoff(0, 1) == -2.0);
  CHECK(inline_cfg.games[0].label == "custom");

  const ExperimentConfig rnd = parse_config_text(
      R"({"game":{"rows":3,"cols":4,"entry_range":[-1,1],"seed":5}})");
  CHECK(rnd.games[0].payoff.rows() == 3);
  CHECK(rnd.games[0].payoff.cols() == 4);
  CHECK(rnd.games[0].payoff.cwiseAbs().maxCoeff() <= 1.0);

  // Same seed, same matrix.
  const ExperimentConfig rnd2 = parse_config_text(
      R"({"game":{"rows":3,"cols":4,"entry_range":[-1,1],"seed":5}})");
  CHECK((rnd.games[0].payoff - rnd2.games[0].payoff).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("parse errors carry JSON-pointer paths") {
  expect_config_error(R"({"game":"A1","algorithm":{"eta":-0.1}})",
                      "/algorithm/eta");
  expect_config_error(R"({"game":"A1","foo":1})", "/foo");
  expect_config_error(R"({"game":"A1","algorithm":{"bogus":1}})",
                      "/algorithm/bogus");
  expect_config_error(
      R"({"game":"A1","algorithm":{"rule":"MWU","regularizer":"euclidean"}})",
      "/algorithm");
  expect_config_error(
      R"({"game":"A1","init":[[1,0,0,0],[0,-1,0,0],[0,0,1,0],[0,0,0,1]]})",
      "/init");
  expect_config_error(R"({"game":"A1","k_values":[0.5]})", "/k_values");
  expect_config_error(R"({"game":"A1","snapshot_times":[3,2]})",
                      "/snapshot_times/1");
  expect_config_error(R"({"algorithm":{"rule":"GDA"}})", "/game");
  expect_config_error(R"({"experiment":"nope","game":"A1"})", "/experiment");
  expect_config_error("{не json", "/");
  expect_config_error(R"({"game":"A9"})", "/game");
}

TEST_CASE("registry entries resolve to runnable configs") {
  const auto& reg = experiment_registry();
  CHECK(reg.size() == 8);
  for (const auto& entry : reg) {
    CHECK(is_registered_experiment(entry.name));
    const ExperimentConfig cfg = registry_config(entry.name);
    CHECK_FALSE(cfg.games.empty());
    CHECK(cfg.algorithm.eta > 0.0);
  }
  CHECK_FALSE(is_registered_experiment("nope"));
  CHECK_THROWS_AS(registry_config("nope"), ConfigError);
}

TEST_CASE("list output names every experiment and matrix") {
  std::ostringstream os;
  list_experiments(os);
  const std::string out = os.str();
  CHECK(out.find("entropy-gda-vs-altgda") != std::string::npos);
  CHECK(out.find("figure1-dispersion") != std::string::npos);
  for (const auto& name : named_game_list()) {
    CHECK_MESSAGE(out.find(name) != std::string::npos, "missing " << name);
  }
}

TEST_CASE("describe prints a config echo and rejects unknown names") {
  std::ostringstream os;
  describe_experiment("chebyshev", os);
  CHECK(os.str().find("\"experiment\"") != std::string::npos);
  CHECK(os.str().find("k_values") != std::string::npos);

  try {
    std::ostringstream sink;
    describe_experiment("what-is-this", sink);
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("figure1-dispersion") != std::string::npos);
  }
}

TEST_CASE("a run emits a manifest whose hashes verify") {
  const ExperimentConfig cfg = parse_config_text(
      R"({"game":"A1","algorithm":{"rule":"AltGDA","eta":0.05},
          "horizon":1000,"sample_every":10,"seed":3})");
  const std::string dir = fresh_dir("exp_out_a");
  const ExperimentReport report = run_experiment(cfg, dir);
  CHECK(report.all_passed);
  CHECK_FALSE(report.files.empty());

  for (const auto& f : report.files) {
    const std::string bytes = read_file(dir + "/" + f.path);
    CHECK(bytes.size() == f.bytes);
    CHECK(sha256_hex(bytes) == f.sha256);
  }

  const auto manifest =
      nlohmann::ordered_json::parse(read_file(dir + "/manifest.json"));
  CHECK(manifest.contains("experiment"));
  CHECK(manifest.contains("seed"));
  CHECK(manifest.contains("config"));
  CHECK(manifest.contains("checks"));
  CHECK(manifest.contains("files"));
  // The echo excludes the output directory so bytes do not depend on where
  // the run landed.
  CHECK_FALSE(manifest["config"].contains("output_dir"));
  CHECK(manifest["files"].size() == report.files.size());
}

TEST_CASE("identical config and seed give byte-identical manifests") {
  const ExperimentConfig cfg = parse_config_text(
      R"({"game":"A1","algorithm":{"rule":"AltGDA","eta":0.05},
          "horizon":1000,"sample_every":10,"seed":3})");
  const std::string da = fresh_dir("exp_det_a");
  const std::string db = fresh_dir("exp_det_b");
  run_experiment(cfg, da);
  run_experiment(cfg, db);
  CHECK(read_file(da + "/manifest.json") == read_file(db + "/manifest.json"));
  CHECK(read_file(da + "/A1_altgda.csv") == read_file(db + "/A1_altgda.csv"));
}

TEST_CASE("the seed reaches the sampled ensemble") {
  const std::string base = R"({"game":"RPS","algorithm":{"rule":"AltMWU"},
      "init":{"kind":"uniform-simplex-patch","center":[0.33,0.33,0.34],"side":0.05},
      "horizon":100,"sample_every":10,"ensemble_n":50,"seed":)";
  ExperimentConfig c3 = parse_config_text(base + "3}");
  ExperimentConfig c4 = parse_config_text(base + "4}");
  const std::string d3 = fresh_dir("exp_seed_3");
  const std::string d4 = fresh_dir("exp_seed_4");
  run_experiment(c3, d3);
  run_experiment(c4, d4);
  CHECK(read_file(d3 + "/manifest.json") != read_file(d4 + "/manifest.json"));
}

TEST_CASE("covariance CSV header matches the documented schema") {
  const std::string csv = read_file("exp_out_a/A1_altgda.csv");
  const std::string header = csv.substr(0, csv.find('\n'));
  CHECK(header ==
        "t,var_y_1,var_y_2,var_X_1,var_X_2,"
        "cov_y1_X1,cov_y1_X2,cov_y2_X1,cov_y2_X2,"
        "entropy_cum,heisenberg_product_1,heisenberg_product_2,"
        "block_det_1,block_det_2");
}

TEST_CASE("parse_config reads a file from disk") {
  const std::string path = "tmp_config.json";
  write_file_atomic(path, R"({"game":"B4","horizon":500})");
  const ExperimentConfig cfg = parse_config(path);
  CHECK(cfg.games[0].label == "B4");
  CHECK(cfg.horizon == 500);
  CHECK_THROWS(parse_config("no_such_file.json"));
}

TEST_CASE("output directory resolution precedence") {
  ExperimentConfig cfg;
  unsetenv("OUTPUT_DIR");
  CHECK(resolve_output_dir("", cfg) == "out");
  setenv("OUTPUT_DIR", "env_dir", 1);
  CHECK(resolve_output_dir("", cfg) == "env_dir");
  cfg.output_dir = "cfg_dir";
  CHECK(resolve_output_dir("", cfg) == "cfg_dir");
  CHECK(resolve_output_dir("cli_dir", cfg) == "cli_dir");
  unsetenv("OUTPUT_DIR");
}

TEST_CASE("short series downgrade growth classification to a warning") {
  const ExperimentConfig cfg = parse_config_text(
      R"({"game":"A1","horizon":100,"sample_every":10,"seed":1})");
  const std::string dir = fresh_dir("exp_short");
  const ExperimentReport report = run_experiment(cfg, dir);
  bool found = false;
  for (const auto& w : report.warnings) {
    if (w.find("growth not classified") != std::string::npos) found = true;
  }
  CHECK(found);
}
