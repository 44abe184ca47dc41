// The `wong` command line tool: config-driven scenario execution.  All the
// heavy lifting lives in wong::cli so the same code paths are unit-tested;
// this file only maps subcommands and flags onto RunConfig fields.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "wong/cli_runner.hpp"
#include "wong/errors.hpp"

namespace {

using wong::cli::json;

struct Cli {
  std::string config_path;
  std::string out_dir;
  std::string system;
  std::string group = "su2";
  int points = 0;
  int reps = 5;
  int lattice_d = 2;
  int lattice_l = 2;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* sub, Cli& cli, bool config_required) {
  auto* opt = sub->add_option("--config", cli.config_path, "config file, TOML or JSON");
  if (config_required) opt->required();
  sub->add_option("--out", cli.out_dir, "directory for output files (default: cwd)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symmetry-reduced Wong dynamics: trajectories, invariant checks, "
               "oracle comparisons and lattice Coulomb-gauge runs"};
  app.require_subcommand(1);
  Cli cli;

  CLI::App* c_run = app.add_subcommand("run", "integrate a reduced trajectory");
  add_common(c_run, cli, true);

  CLI::App* c_check = app.add_subcommand("check", "projector identity battery on one system");
  add_common(c_check, cli, false);
  c_check->add_option("--system", cli.system, "builtin system name");
  c_check->add_option("--points", cli.points, "number of sample points (default 100)");
  c_check->add_option("--seed", cli.seed, "sampling seed");

  CLI::App* c_cmp = app.add_subcommand("compare-oracle",
                                       "reduced equations vs brute-force geodesic");
  add_common(c_cmp, cli, true);

  CLI::App* c_ym = app.add_subcommand("ym-run", "lattice Coulomb-gauge trajectory");
  add_common(c_ym, cli, true);

  CLI::App* c_bridge = app.add_subcommand(
      "ym-bridge-check", "lattice operators vs the flattened chart system, term by term");
  add_common(c_bridge, cli, false);
  c_bridge->add_option("--group", cli.group, "algebra name: u1, su2, so3");
  c_bridge->add_option("--d", cli.lattice_d, "lattice dimensions");
  c_bridge->add_option("--L", cli.lattice_l, "sites per dimension");
  c_bridge->add_option("--reps", cli.reps, "number of random states (default 5)");
  c_bridge->add_option("--seed", cli.seed, "sampling seed");

  CLI::App* c_sweep = app.add_subcommand("sweep", "run a list of configs and aggregate");
  add_common(c_sweep, cli, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // bad arguments are config errors
  }

  try {
    wong::cli::ScenarioResult res;
    if (app.got_subcommand(c_sweep)) {
      res = wong::cli::run_sweep(wong::cli::load_config(cli.config_path), cli.out_dir);
    } else {
      json j = cli.config_path.empty() ? json::object()
                                       : wong::cli::load_config(cli.config_path);
      if (app.got_subcommand(c_run)) j["scenario"] = "run";
      if (app.got_subcommand(c_cmp)) j["scenario"] = "compare-oracle";
      if (app.got_subcommand(c_ym)) j["scenario"] = "ym-run";
      if (app.got_subcommand(c_check)) {
        j["scenario"] = "check";
        if (c_check->count("--system")) j["system"] = cli.system;
        if (c_check->count("--points")) j["check_points"] = cli.points;
        if (c_check->count("--seed")) j["seed"] = cli.seed;
      }
      if (app.got_subcommand(c_bridge)) {
        j["scenario"] = "ym-bridge-check";
        if (!j.contains("lattice")) j["lattice"] = json::object();
        if (c_bridge->count("--group") || !j["lattice"].contains("group"))
          j["lattice"]["group"] = cli.group;
        if (c_bridge->count("--d") || !j["lattice"].contains("d"))
          j["lattice"]["d"] = cli.lattice_d;
        if (c_bridge->count("--L") || !j["lattice"].contains("L"))
          j["lattice"]["L"] = cli.lattice_l;
        if (c_bridge->count("--reps") || !j.contains("check_points"))
          j["check_points"] = cli.reps;
        if (c_bridge->count("--seed")) j["seed"] = cli.seed;
      }
      res = wong::cli::run_scenario(wong::cli::parse_run_config(j), cli.out_dir);
    }
    std::cout << res.report.dump(2) << '\n';
    return res.exit_code;
  } catch (const wong::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const wong::Error& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << '\n';
    return 1;
  }
}
