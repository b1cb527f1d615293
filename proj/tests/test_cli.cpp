#include "doctest.h"

#include "mfg/app.hpp"
#include "mfg/config.hpp"
#include "mfg/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mfg;
namespace fs = std::filesystem;

namespace {

const char* kLq = R"({
  "dynamics": {"A": [[0]], "B": [[1]], "T": 1},
  "model": {"terminal": {"g": 1}},
  "m0": {"particles": [{"w": 0.5, "x": [-1]}, {"w": 0.5, "x": [1]}]},
  "diagnostics": {"region": {"lo": [-1], "hi": [1]}, "semiconcavity_probes": 100,
                  "hjb_samples": 40, "lipschitz_pairs": 50, "n_tests": 10}
})";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mfg-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool has_error_for(const ConfigError& e, const std::string& key) {
  for (const auto& msg : e.errors())
    if (msg.find(key) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("minimal config gets defaults") {
  const RunConfig cfg = parse_config(kLq);
  CHECK(cfg.N == 100);
  CHECK(cfg.alpha == 2.0);
  CHECK(cfg.equilibrium.max_rounds == 50);
  CHECK(cfg.equilibrium.tol_exploitability == 1e-4);
  CHECK(cfg.diagnostics.tol_hjb == 1e-3);
  CHECK(cfg.m0.size() == 2);
  CHECK(cfg.hash.size() == 16);
  CHECK(cfg.hash == parse_config(kLq).hash);
}

TEST_CASE("config errors name their keys") {
  SUBCASE("B with the wrong number of rows") {
    const std::string text = R"({"dynamics": {"A": [[0, 1], [0, 0]], "B": [[1]], "T": 1},
                                 "m0": {"particles": [{"w": 1, "x": [0, 0]}]}})";
    try {
      parse_config(text);
      FAIL("accepted");
    } catch (const ConfigError& e) {
      CHECK(has_error_for(e, "dynamics.B"));
    }
  }
  SUBCASE("A that is not square") {
    const std::string text = R"({"dynamics": {"A": [[0], [0]], "B": [[1], [1]], "T": 1},
                                 "m0": {"particles": [{"w": 1, "x": [0, 0]}]}})";
    try {
      parse_config(text);
      FAIL("accepted");
    } catch (const ConfigError& e) {
      CHECK(has_error_for(e, "dynamics.A"));
    }
  }
  SUBCASE("unknown keys") {
    const std::string text = R"({"dynamics": {"A": [[0]], "B": [[1]], "T": 1, "Tee": 2},
                                 "m0": {"particles": [{"w": 1, "x": [0]}]}})";
    try {
      parse_config(text);
      FAIL("accepted");
    } catch (const ConfigError& e) {
      CHECK(has_error_for(e, "dynamics.Tee"));
    }
  }
  SUBCASE("m0 CSV with a negative weight") {
    const fs::path dir = scratch("csv");
    std::ofstream(dir / "m0.csv") << "w,x1\n0.5,0.0\n0.7,1.0\n-0.2,2.0\n";
    const std::string text = R"({"dynamics": {"A": [[0]], "B": [[1]], "T": 1}, "m0": {"csv": "m0.csv"}})";
    try {
      parse_config(text, dir);
      FAIL("accepted");
    } catch (const ConfigError& e) {
      CHECK(has_error_for(e, "m0.csv"));
      CHECK(has_error_for(e, "row 3"));
    }
  }
}

TEST_CASE("JSON emission is canonical") {
  Json j;
  j["b"] = 0.1;
  j["a"] = std::numeric_limits<double>::infinity();
  const std::string text = emit_json(j);
  CHECK(text.find("\"a\": null") < text.find("\"b\""));
  CHECK(text.find("0.10000000000000001") != std::string::npos);
  CHECK(text.back() == '\n');
}

TEST_CASE("equilibrium subcommand on the LQ config") {
  const RunConfig cfg = parse_config(kLq);
  std::ostringstream log;
  const RunResult r = run_subcommand("equilibrium", cfg, scratch("eq"), log);
  CHECK(r.exit_code == kExitOk);
  CHECK(r.report["equilibrium"]["converged"] == true);
  CHECK(fs::exists(r.directory / "report.json"));
  CHECK(fs::exists(r.directory / "flow.csv"));
}

TEST_CASE("diagnose on a constant flow reports a zero Hoelder constant") {
  const std::string text = R"({"dynamics": {"A": [[0]], "B": [[1]], "T": 1},
                               "m0": {"particles": [{"w": 0.5, "x": [-1]}, {"w": 0.5, "x": [1]}]},
                               "diagnostics": {"semiconcavity_probes": 50, "lipschitz_pairs": 20}})";
  std::ostringstream log;
  const RunResult r = run_subcommand("diagnose", parse_config(text), scratch("diag"), log);
  CHECK(r.report["diagnose"]["holder"]["constant"] == 0.0);
  CHECK(fs::exists(r.directory / "distances.csv"));
}

TEST_CASE("check-monotone fails on the anti-monotone model") {
  const std::string text = R"({"dynamics": {"A": [[0]], "B": [[1]], "T": 1},
                               "model": {"coupling": {"type": "mean", "theta": -1}},
                               "m0": {"particles": [{"w": 1, "x": [0]}]}})";
  std::ostringstream log;
  const RunResult r = run_subcommand("check-monotone", parse_config(text), scratch("mono"), log);
  CHECK(r.exit_code == kExitContract);
  CHECK(r.report["pass"] == false);
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("cli");
  std::ofstream(dir / "bad.json") << R"({"dynamics": {"A": [[0]]}})";
  std::ofstream(dir / "ok.json") << kLq;
  auto run = [&](std::vector<std::string> args) {
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
  };
  CHECK(run({"mfg", "check-monotone", "--config", (dir / "bad.json").string()}) == kExitConfig);
  CHECK(run({"mfg", "check-monotone", "--config", (dir / "missing.json").string()}) == kExitIo);
  CHECK(run({"mfg", "check-monotone", "--config", (dir / "ok.json").string(), "--out", (dir / "runs").string()}) ==
        kExitOk);
}

}  // TEST_SUITE
