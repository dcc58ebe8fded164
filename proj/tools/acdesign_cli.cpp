#include <iostream>

#include <CLI11.hpp>

#include "acdesign/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = acdesign::cli;
  CLI::App app{"Locally optimal designs for active-controlled dose-finding studies"};
  app.require_subcommand(1);

  cli::Overrides ov;
  int grid = 0;
  double tol = 0.0;
  std::uint64_t seed = 0;
  auto* grid_opt = app.add_option("--grid", grid, "candidate grid size (solver) or verification grid size")
                       ->check(CLI::PositiveNumber);
  auto* tol_opt = app.add_option("--tol", tol, "verification tolerance")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "multistart seed");
  app.add_flag("--json", ov.json, "print the JSON report");

  std::string scenario, design, out_dir;
  auto* solve = app.add_subcommand("solve", "solve the scenario and verify the result");
  solve->add_option("scenario", scenario, "scenario file")->required();
  auto* verify = app.add_subcommand("verify", "check a design against the equivalence theorem");
  verify->add_option("scenario", scenario, "scenario file")->required();
  verify->add_option("design", design, "design CSV (dose,arm,weight)")->required();
  auto* eff = app.add_subcommand("efficiency", "D- and AC-efficiency of a design");
  eff->add_option("scenario", scenario, "scenario file")->required();
  eff->add_option("design", design, "design CSV (dose,arm,weight)")->required();
  auto* repro = app.add_subcommand("reproduce", "recompute the reference gout and migraine design tables");
  repro->add_option("--out", out_dir, "directory for the table CSV files");

  // Global flags may follow the subcommand.
  for (auto* sub : {solve, verify, eff, repro}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kValidation;
  }
  if (*grid_opt) ov.grid = grid;
  if (*tol_opt) ov.tol = tol;
  if (*seed_opt) ov.seed = seed;

  if (*solve) return cli::cmd_solve(scenario, ov, std::cout, std::cerr);
  if (*verify) return cli::cmd_verify(scenario, design, ov, std::cout, std::cerr);
  if (*eff) return cli::cmd_efficiency(scenario, design, ov, std::cout, std::cerr);
  std::optional<std::filesystem::path> dir;
  if (!out_dir.empty()) dir = out_dir;
  return cli::cmd_reproduce(dir, ov, std::cout, std::cerr);
}
