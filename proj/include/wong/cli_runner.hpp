#ifndef WONG_CLI_RUNNER_HPP
#define WONG_CLI_RUNNER_HPP

// Config-driven scenario execution behind the `wong` command line tool:
// config parsing (a TOML subset, with JSON equally accepted), the
// run / check / compare-oracle / ym-run / ym-bridge-check scenarios, and the
// sweep aggregator.  Everything lives in the library so tests can drive the
// exact code paths the binary uses.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>

#include "wong/wong_integrator.hpp"

namespace wong::cli {

using nlohmann::json;

// Line-based TOML reader covering what run configs need: # comments,
// [table] / [[array-of-tables]] headers (dotted names allowed), bare keys,
// quoted strings, integers, floats, booleans, and (nested) arrays that close
// on the line they open.  No dates, no multiline strings, no inline tables.
// Throws ConfigError with a line number on anything outside that subset.
json parse_toml(const std::string& text);

// Reads a config file and parses it as JSON when the first non-space byte is
// '{', as TOML otherwise.  Throws ConfigError on unreadable files or parse
// failures in either format.
json load_config(const std::string& path);

struct IntegratorConfig {
  std::string method = "rk4";  // "rk4" fixed step or "rk45" adaptive
  double dt = 1e-3;
  long n_steps = 1000;
  bool projection = true;
  double adaptive_tol = 1e-10;
};

struct LatticeConfig {
  std::string group = "su2";
  int d = 2;
  int extent = 2;
  double spacing = 1.0;
};

// One fully-described scenario: the system, initial data, integrator knobs,
// output paths (resolved against the --out directory) and monitor tolerance
// overrides.  parse_run_config validates presence, shapes and ranges and
// names the offending key in the ConfigError it throws.
struct RunConfig {
  std::string scenario = "run";
  std::string label;

  // finite-dimensional scenarios
  std::string system;
  std::optional<double> b_field;  // kk_trivial_u1 field-strength override

  // lattice scenarios
  std::optional<LatticeConfig> lattice;

  // explicit initial data; lattice runs may instead draw a random transverse
  // state from the seed with the amplitudes below
  std::optional<Eigen::VectorXd> q_star, v, p, z_v;
  double amp_a = 0.3;
  double amp_adot = 0.3;
  double amp_p = 0.3;

  IntegratorConfig integrator;
  VerticalTermWeights vertical;  // charge-equation term weights, A/B diagnostics
  std::uint64_t seed = 0;
  int check_points = 100;  // sample count for check / ym-bridge-check

  std::string trajectory_path;
  std::string diagnostics_path;
  std::string snapshot_path;  // lattice runs: final-state JSON with shape header

  json tolerances = json::object();  // sparse monitor overrides
};

RunConfig parse_run_config(const json& j);

// Exit-status contract: 0 when every enabled monitor stayed in tolerance,
// 1 on numerical failure or a monitor violation, 2 on bad configuration.
struct ScenarioResult {
  int exit_code = 0;
  json report;  // what lands in the diagnostics file
};

// Executes one scenario, writing the trajectory CSV, diagnostics JSON and
// optional snapshot under out_dir.  Numerical failures are captured into the
// report (exit 1); ConfigError propagates to the caller.
ScenarioResult run_scenario(const RunConfig& cfg, const std::string& out_dir);

// Runs every entry of cfg["runs"] independently (worker count capped by the
// WONG_THREADS environment variable), isolating per-entry failures, and
// aggregates statuses into one report.  With cfg["estimate_order"] = true the
// "run" entries must form a dt-halving family over one system; the entry with
// the smallest dt serves as reference and the report gains an observed
// convergence order estimated from endpoint errors.
ScenarioResult run_sweep(const json& cfg, const std::string& out_dir);

}  // namespace wong::cli

#endif
