#pragma once

// Run orchestration behind the command-line tool: load, override, solve,
// write artifacts.
//
// Files written to the output directory:
//   trajectory.csv            mu, t, psi re/im per component (+ Bloch x, y, z when n = 1)
//   hamiltonian.csv           mu, t, H entries re/im (+ omega, axis, degenerate flag when n = 1)
//   cost_history.csv          iter, cost, grad_norm, step
//   validation.json           residual report (+ refinement orders with validate)
//   summary.json              resolved problem, options and results
//   coherent_trajectory.csv   only with a coherent order k
// Floats are written with 17 significant digits.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "qspline/problem_io.hpp"

namespace qspline {

struct RunConfig {
  std::filesystem::path config;
  std::filesystem::path out_dir = ".";
  std::optional<Real> sigma;
  std::optional<int> steps;
  std::optional<Real> tol;  ///< grad_tol
  std::optional<int> max_iters;
  std::optional<int> coherent_k;
  /// Adds a three-level grid-refinement study to validation.json.
  bool validate = false;
  std::string label;
};

enum ExitCode : int {
  kExitConverged = 0,
  kExitError = 1,
  kExitNotConverged = 2,
};

/// Never throws; errors are reported on `err` and mapped to kExitError.
/// The one-line summary goes to `out`. When the solver stalls, the partial
/// solution is still written before returning kExitError.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace qspline
