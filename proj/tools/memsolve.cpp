#include <CLI11.hpp>

#include "memsolve/cli.hpp"

namespace mc = memsolve::cli;

int main(int argc, char** argv) {
  CLI::App app{"Electrostatic membrane solver and small aspect ratio verification tool"};
  app.set_version_flag("--version", mc::tool_version);
  app.require_subcommand(1);

  std::string config, out;
  auto* solve = app.add_subcommand("solve", "Solve the coupled membrane/potential problem");
  solve->add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
  solve->add_option("--out", out, "output directory")->required();

  std::optional<double> sg_lambda;
  bool sg_pullin = false;
  std::size_t sg_nx = 257;
  auto* smallgap = app.add_subcommand("smallgap", "Steady states of the small-gap model");
  auto* lam_opt = smallgap->add_option("--lambda", sg_lambda, "voltage parameter");
  auto* pull_opt = smallgap->add_flag("--pullin", sg_pullin, "locate the pull-in voltage");
  lam_opt->excludes(pull_opt);
  smallgap->add_option("--nx", sg_nx, "profile grid points (odd)");
  smallgap->add_option("--out", out, "output directory")->required();

  bool plots = false;
  auto* sweep = app.add_subcommand("sweep", "Vanishing aspect ratio sweep at fixed lambda");
  sweep->add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out, "output directory")->required();
  sweep->add_flag("--plots", plots, "also write plot_sweep.py");

  mc::BoundOptions bopt;
  auto* bound = app.add_subcommand("bound", "Small-voltage threshold lambda0(r0, eps)");
  bound->add_option("--r0", bopt.r0, "admissible-set curvature bound in (0,2)");
  auto* eps_opt = bound->add_option("--eps", bopt.eps, "aspect ratio in [0,1]");
  auto* uni_opt = bound->add_flag("--uniform", bopt.uniform, "bound uniform in eps");
  eps_opt->excludes(uni_opt);
  bound->add_flag("--optimize", bopt.optimize, "maximize over r0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mc::exit_config;
  }

  if (*solve) return mc::cmd_solve(config, out);
  if (*smallgap) return mc::cmd_smallgap({sg_lambda, sg_pullin, sg_nx}, out);
  if (*sweep) return mc::cmd_sweep(config, out, plots);
  return mc::cmd_bound(bopt);
}
