#include <iostream>

#include "CLI11.hpp"
#include "qspline/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Quantum spline solver"};
  qspline::RunConfig config;
  double sigma = 0.0, tol = 0.0;
  int steps = 0, max_iters = 0, k = 0;

  app.add_option("--config", config.config, "Problem file (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--out-dir", config.out_dir, "Output directory");
  auto* o_sigma = app.add_option("--sigma", sigma, "Override the tolerance sigma")->check(CLI::PositiveNumber);
  auto* o_steps = app.add_option("--steps", steps, "Override the number of steps N")->check(CLI::PositiveNumber);
  auto* o_tol = app.add_option("--tol", tol, "Override the gradient tolerance")->check(CLI::PositiveNumber);
  auto* o_iters = app.add_option("--max-iters", max_iters, "Override the iteration cap")->check(CLI::NonNegativeNumber);
  auto* o_k = app.add_option("--coherent-k", k, "Also emit the k-particle coherent trajectory")->check(CLI::PositiveNumber);
  app.add_flag("--validate", config.validate, "Add a grid-refinement study to validation.json");
  app.add_option("--label", config.label, "Run label");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qspline::kExitError;
  }
  if (*o_sigma) config.sigma = sigma;
  if (*o_steps) config.steps = steps;
  if (*o_tol) config.tol = tol;
  if (*o_iters) config.max_iters = max_iters;
  if (*o_k) config.coherent_k = k;
  return qspline::run(config, std::cout, std::cerr);
}
