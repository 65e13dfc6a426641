#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "funnelctl/commands.hpp"
#include "funnelctl/scenario.hpp"

namespace {

std::optional<funnelctl::Scenario> load(const std::string& path) {
  try {
    return funnelctl::load_scenario(path);
  } catch (const funnelctl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return std::nullopt;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fault-tolerant funnel control: assumption checks, normal forms, closed-loop simulation"};
  app.require_subcommand(1);

  std::string scenario_path, out_path, summary_path;
  int grid = 0;
  double time = 0.0;
  std::optional<double> rtol, atol;
  bool force = false;

  auto* check = app.add_subcommand("check", "Evaluate the structural assumptions on a time grid");
  check->add_option("scenario", scenario_path, "Scenario JSON file or 'boeing737'")->required();
  check->add_option("--out", out_path, "Write the JSON report here instead of stdout");
  check->add_option("--grid", grid, "Number of grid points (default from scenario)")
      ->check(CLI::PositiveNumber);

  auto* nf = app.add_subcommand("normalform", "Compute the normal form at one time instant");
  nf->add_option("scenario", scenario_path, "Scenario JSON file or 'boeing737'")->required();
  nf->add_option("--time", time, "Evaluation time");
  nf->add_option("--out", out_path, "Write the JSON document here instead of stdout");

  auto* sim = app.add_subcommand("simulate", "Simulate the closed loop and write a trace");
  sim->add_option("scenario", scenario_path, "Scenario JSON file or 'boeing737'")->required();
  sim->add_option("--out", out_path, "Trace CSV (default stdout)");
  sim->add_option("--summary", summary_path, "Summary JSON (default stderr)");
  sim->add_option("--rtol", rtol, "Relative tolerance override")->check(CLI::PositiveNumber);
  sim->add_option("--atol", atol, "Absolute tolerance override")->check(CLI::PositiveNumber);
  sim->add_flag("--allow-failed-check", force, "Simulate even if the assumption check fails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : funnelctl::kExitInputError;
  }

  const auto scenario = load(scenario_path);
  if (!scenario) return funnelctl::kExitInputError;

  if (*check) return funnelctl::cmd_check(*scenario, out_path, grid, std::cout, std::cerr);
  if (*nf) return funnelctl::cmd_normalform(*scenario, time, out_path, std::cout, std::cerr);
  funnelctl::SimulateOptions opt;
  opt.csv_path = out_path;
  opt.summary_path = summary_path;
  opt.rtol = rtol;
  opt.atol = atol;
  opt.allow_failed_check = force;
  return funnelctl::cmd_simulate(*scenario, opt, std::cout, std::cerr);
}
