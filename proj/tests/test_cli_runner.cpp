#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wong/cli_runner.hpp"
#include "wong/errors.hpp"

using namespace wong;
using namespace wong::cli;
namespace fs = std::filesystem;

namespace {

// fresh scratch directory per test case
std::string scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "wong_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::vector<double>> read_csv(const std::string& path, std::string* header) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  REQUIRE(std::getline(in, line));
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(std::move(row));
  }
  return rows;
}

json cyclotron_config(double dt, long n_steps) {
  return json{{"system", "kk_trivial_u1"},
              {"initial", {{"q_star", {1.0, 0.0, 0.0}}, {"v", {0.0, 1.0, 0.0}}, {"p", {1.0}}}},
              {"integrator", {{"dt", dt}, {"n_steps", n_steps}}}};
}

}  // namespace

TEST_CASE("toml subset: tables, arrays of tables, values") {
  const std::string text =
      "# comment line\n"
      "title = \"trial # not a comment\"\n"
      "seed = 42\n"
      "ratio = -2.5e-3\n"
      "flag = true\n"
      "dims = [2, 3]\n"
      "nested = [[1, 2], [3]]\n"
      "\n"
      "[integrator]\n"
      "dt = 0.5   # trailing comment\n"
      "method = \"rk4\"\n"
      "\n"
      "[outer.inner]\n"
      "x = 1\n"
      "\n"
      "[[runs]]\n"
      "label = \"a\"\n"
      "[runs.integrator]\n"
      "dt = 0.25\n"
      "[[runs]]\n"
      "label = \"b\"\n";
  const json j = parse_toml(text);
  CHECK(j["title"] == "trial # not a comment");
  CHECK(j["seed"] == 42);
  CHECK(j["ratio"].get<double>() == doctest::Approx(-2.5e-3));
  CHECK(j["flag"] == true);
  CHECK(j["dims"] == json::array({2, 3}));
  CHECK(j["nested"][0] == json::array({1, 2}));
  CHECK(j["integrator"]["dt"] == 0.5);
  CHECK(j["outer"]["inner"]["x"] == 1);
  REQUIRE(j["runs"].size() == 2);
  CHECK(j["runs"][0]["label"] == "a");
  CHECK(j["runs"][0]["integrator"]["dt"] == 0.25);
  CHECK(j["runs"][1]["label"] == "b");

  // same config through both formats lands on the same tree
  CHECK(parse_toml("a = 1\n[t]\nb = [1.5, 2.0]\n") ==
        json::parse(R"({"a": 1, "t": {"b": [1.5, 2.0]}})"));
}

TEST_CASE("toml subset: malformed input names the line") {
  auto fails_at = [](const std::string& text, const std::string& line_tag) {
    try {
      parse_toml(text);
      FAIL_CHECK("expected ConfigError for: " << text);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(line_tag) != std::string::npos);
    }
  };
  fails_at("x = \"unterminated\n", "line 1");
  fails_at("ok = 1\nx == 2\n", "line 2");
  fails_at("x = [1, 2\n", "line 1");
  fails_at("x = 1 stray\n", "line 1");
  fails_at("x = 1\nx = 2\n", "line 2");
  fails_at("[tab\n", "line 1");
  fails_at("x = @bad\n", "line 1");
}

TEST_CASE("config validation rejects what the runner cannot honor") {
  CHECK_THROWS_AS(parse_run_config(json{{"system", "hopf_s3"},
                                        {"integrator", {{"dt", -0.5}}}}),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(json{{"system", "hopf_s3"},
                                        {"integrator", {{"n_steps", 0}}}}),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(json{{"system", "hopf_s3"}, {"typo_key", 1}}), ConfigError);
  CHECK_THROWS_AS(parse_run_config(json{{"scenario", "warp"}, {"system", "hopf_s3"}}),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(json{{"scenario", "ym-run"}}), ConfigError);
  CHECK_THROWS_AS(parse_run_config(json{{"scenario", "run"}}), ConfigError);
  CHECK_THROWS_AS(
      parse_run_config(json{{"system", "hopf_s3"},
                            {"initial", {{"p", {1.0}}, {"z_v", {1.0}}}}}),
      ConfigError);
  CHECK_THROWS_AS(
      parse_run_config(json{{"scenario", "ym-run"}, {"lattice", {{"group", "su2"}, {"L", 1}}}}),
      ConfigError);

  // unknown builtins surface as config errors at scenario time
  RunConfig cfg = parse_run_config(json{{"system", "nope"},
                                        {"initial", {{"q_star", {0.0}}}}});
  CHECK_THROWS_AS(run_scenario(cfg, scratch("unknown_system")), ConfigError);
}

TEST_CASE("run scenario: the cyclotron CSV traces the closed-form circle") {
  const std::string out = scratch("cyclotron");
  json j = cyclotron_config(1e-3, 6283);
  j["outputs"] = {{"trajectory", "cyc.csv"}, {"diagnostics", "cyc.json"}};
  const ScenarioResult res = run_scenario(parse_run_config(j), out);
  CHECK(res.exit_code == 0);
  CHECK(res.report["status"] == "ok");
  CHECK(res.report["monitors"]["abelian_p_step_change"] == 0.0);

  std::string header;
  const auto rows = read_csv(out + "/cyc.csv", &header);
  CHECK(header == "t,qstar_0,qstar_1,qstar_2,v_0,v_1,v_2,p_0,energy,chi_residual");
  REQUIRE(rows.size() == 6284);

  // unit charge, unit field: radius |v|/|q0 B| = 1 about the center (2, 0)
  double worst = 0.0;
  for (const auto& r : rows) {
    const double rad = std::hypot(r[1] - 2.0, r[2]);
    worst = std::max(worst, std::abs(rad - 1.0));
    CHECK(r[3] == 0.0);  // chi column stays identically on-section
  }
  CHECK(worst <= 1e-6);

  // diagnostics sidecar mirrors the report
  const json diag = json::parse(slurp(out + "/cyc.json"));
  CHECK(diag["status"] == "ok");
  CHECK(diag["monitors"]["max_chi_residual"] == 0.0);
}

TEST_CASE("run scenario: identical config and seed give byte-identical output") {
  json j = cyclotron_config(1e-3, 200);
  j["outputs"] = {{"trajectory", "t.csv"}, {"diagnostics", "d.json"}};
  const std::string out1 = scratch("det1");
  const std::string out2 = scratch("det2");
  run_scenario(parse_run_config(j), out1);
  run_scenario(parse_run_config(j), out2);
  CHECK(slurp(out1 + "/t.csv") == slurp(out2 + "/t.csv"));
}

TEST_CASE("run scenario: initial vertical velocity converts to the charge") {
  // on the unit-orbit-metric system p = gamma z = z
  json j = json{{"system", "hopf_s3"},
                {"initial",
                 {{"q_star", {0.2, 0.0, -0.1}}, {"v", {0.05, 0.0, 0.1}}, {"z_v", {0.3}}}},
                {"integrator", {{"dt", 1e-3}, {"n_steps", 5}}}};
  const std::string out = scratch("zv");
  const ScenarioResult res = run_scenario(parse_run_config(j), out);
  CHECK(res.exit_code == 0);
  const auto rows = read_csv(out + "/trajectory.csv", nullptr);
  CHECK(rows.front()[7] == doctest::Approx(0.3).epsilon(1e-12));  // p_0 column

  // off-section starts are refused before any stepping
  json bad = j;
  bad["initial"]["q_star"] = {0.2, 0.5, -0.1};
  CHECK_THROWS_AS(run_scenario(parse_run_config(bad), out), ConfigError);
}

TEST_CASE("check scenario: projector identities on one builtin") {
  json j = json{{"scenario", "check"}, {"system", "hopf_s3"}, {"check_points", 50}, {"seed", 3}};
  const std::string out = scratch("check");
  const ScenarioResult res = run_scenario(parse_run_config(j), out);
  CHECK(res.exit_code == 0);
  const json diag = json::parse(slurp(out + "/diagnostics.json"));
  CHECK(diag["status"] == "ok");
  for (const auto& item : diag["residuals"].items())
    CHECK(item.value().get<double>() <= 1e-10);
}

TEST_CASE("compare-oracle scenario reports deviations and passes") {
  json j = json{{"scenario", "compare-oracle"},
                {"system", "hopf_s3"},
                {"initial",
                 {{"q_star", {0.2, 0.0, -0.1}}, {"v", {0.05, 0.0, 0.1}}, {"p", {0.3}}}},
                {"integrator", {{"dt", 1e-3}, {"n_steps", 300}}}};
  const ScenarioResult res = run_scenario(parse_run_config(j), scratch("cmp"));
  CHECK(res.exit_code == 0);
  CHECK(res.report["deviations"]["q_star"].get<double>() <= 1e-6);
  CHECK(res.report["deviations"]["p"].get<double>() <= 1e-6);
}

TEST_CASE("ym-run scenario: trajectory, monitors, snapshot shape header") {
  json j = json{{"scenario", "ym-run"},
                {"lattice", {{"group", "su2"}, {"d", 2}, {"L", 2}}},
                {"initial",
                 {{"amplitude_a", 0.3}, {"amplitude_adot", 0.25}, {"amplitude_p", 0.3}}},
                {"integrator", {{"dt", 1e-3}, {"n_steps", 100}}},
                {"outputs", {{"trajectory", "ym.csv"}, {"snapshot", "final.json"}}},
                {"tolerances", {{"energy_drift", 1e-6}}},
                {"seed", 5}};
  const std::string out = scratch("ym");
  const ScenarioResult res = run_scenario(parse_run_config(j), out);
  CHECK(res.exit_code == 0);
  CHECK(res.report["monitors"]["max_coulomb_residual"].get<double>() <= 1e-8);
  CHECK(res.report["monitors"]["max_velocity_div"].get<double>() <= 1e-8);

  std::string header;
  const auto rows = read_csv(out + "/ym.csv", &header);
  CHECK(header.substr(0, 10) == "t,qstar_0,");
  CHECK(header.find(",energy,chi_residual,coulomb_residual") != std::string::npos);
  REQUIRE(rows.size() == 101);
  // 24 gauge components twice, 12 charge components, t + energy + two residuals
  CHECK(rows.front().size() == 1 + 24 + 24 + 12 + 3);

  const json snap = json::parse(slurp(out + "/final.json"));
  CHECK(snap["d"] == 2);
  CHECK(snap["L"] == 2);
  CHECK(snap["n_g"] == 3);
  CHECK(snap["a"].size() == 24);
  CHECK(snap["adot"].size() == 24);
  CHECK(snap["p"].size() == 12);
}

TEST_CASE("ym-bridge-check scenario: nonabelian terms match, abelian terms vanish") {
  json j = json{{"scenario", "ym-bridge-check"},
                {"lattice", {{"group", "su2"}, {"d", 2}, {"L", 2}}},
                {"check_points", 3},
                {"seed", 11}};
  const ScenarioResult res = run_scenario(parse_run_config(j), scratch("bridge"));
  CHECK(res.exit_code == 0);
  for (const auto& item : res.report["term_deviations"].items())
    CHECK(item.value().get<double>() <= 1e-8);
  CHECK(res.report["addot_deviation"].get<double>() <= 1e-8);
  CHECK(res.report["pdot_deviation"].get<double>() <= 1e-8);

  json ju = j;
  ju["lattice"]["group"] = "u1";
  ju["lattice"]["L"] = 3;
  const ScenarioResult ru = run_scenario(parse_run_config(ju), scratch("bridge_u1"));
  CHECK(ru.exit_code == 0);
  CHECK(ru.report["abelian_terms_exactly_zero"] == true);

  // sizes beyond the dense cap are a configuration problem
  json jbig = j;
  jbig["lattice"]["L"] = 5;
  jbig["lattice"]["d"] = 3;
  CHECK_THROWS_AS(run_scenario(parse_run_config(jbig), scratch("bridge_big")), ConfigError);
}

TEST_CASE("sweep: empty list, isolation, and the dt-halving order estimate") {
  CHECK(run_sweep(json{{"runs", json::array()}}, scratch("sweep_empty")).exit_code == 0);

  // one invalid entry must not stop the valid one
  json iso = json{{"runs",
                   {json{{"system", "nope"}, {"initial", {{"q_star", {0.0}}}}},
                    cyclotron_config(1e-2, 10)}}};
  const ScenarioResult riso = run_sweep(iso, scratch("sweep_iso"));
  CHECK(riso.exit_code == 1);
  REQUIRE(riso.report["entries"].size() == 2);
  CHECK(riso.report["entries"][0]["status"] == "config_error");
  CHECK(riso.report["entries"][0]["exit_code"] == 2);
  CHECK(riso.report["entries"][1]["status"] == "ok");
  CHECK(riso.report["n_passed"] == 1);

  // halving dt on the closed-form orbit shows fourth order
  json sweep;
  sweep["estimate_order"] = true;
  sweep["runs"] = json::array();
  for (auto [dt, n] : {std::pair{0.2, 50L}, {0.1, 100L}, {0.05, 200L}, {0.025, 400L},
                       {0.0125, 800L}}) {
    json r = cyclotron_config(dt, n);
    r["label"] = "dt" + std::to_string(dt);
    r["tolerances"] = {{"energy_drift", 1e-3}};  // coarse steps drift more
    sweep["runs"].push_back(r);
  }
  const std::string out = scratch("sweep_order");
  const ScenarioResult rord = run_sweep(sweep, out);
  CHECK(rord.exit_code == 0);
  const double order = rord.report["observed_order"].get<double>();
  CHECK(order >= 3.8);
  CHECK(order <= 4.2);
  CHECK(json::parse(slurp(out + "/sweep_report.json"))["observed_order"] == order);
}
