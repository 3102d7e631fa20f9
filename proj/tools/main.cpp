#include <iostream>

#include <CLI11.hpp>

#include "experiment.hpp"

int main(int argc, char** argv) {
  using namespace qdgeo::cli;

  CLI::App app{"qdsim: geometric quantum-dot gate simulator"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  RunRequest run_req;
  SweepRequest sweep_req;
  RunRequest validate_req;
  std::optional<double> dt;

  auto common = [&](CLI::App* sub, RunRequest& r) {
    sub->add_option("--config", r.config, "experiment config (INI)")->required();
    sub->add_option("--out-dir", r.out_dir, "output directory")->capture_default_str();
    sub->add_option("--dt", r.dt, "fixed RK4 step in fs, overrides [integrator] dt");
    sub->add_flag("--quiet", r.quiet, "only report errors and warnings");
  };

  CLI::App* run = app.add_subcommand("run", "simulate one experiment");
  common(run, run_req);

  CLI::App* sweep = app.add_subcommand("sweep", "rerun an experiment over a parameter grid");
  common(sweep, sweep_req.run);
  sweep->add_option("--param", sweep_req.parameter, "section.key to vary")->required();
  auto* range = sweep->add_option("--range", sweep_req.range, "a:b, inclusive");
  sweep->add_option("--points", sweep_req.points, "grid points for --range")->capture_default_str();
  auto* values = sweep->add_option("--values", sweep_req.values, "explicit values")->delimiter(',');
  range->excludes(values);
  sweep->add_option("--jobs", sweep_req.jobs, "concurrent grid points")->capture_default_str()->check(
      CLI::PositiveNumber);

  CLI::App* validate = app.add_subcommand("validate", "check a config and its validity ratios");
  common(validate, validate_req);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*run) return cmd_run(run_req, std::cout, std::cerr);
  if (*sweep) return cmd_sweep(sweep_req, std::cout, std::cerr);
  return cmd_validate(validate_req, std::cout, std::cerr);
}
