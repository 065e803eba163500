#pragma once

// Problem files: JSON documents with complex numbers as [re, im] pairs.
//
//   {
//     "label": "fig1-analogue",            optional
//     "note": "...",                       optional, ignored
//     "n": 1,
//     "psi0": [[re, im], ...],             n + 1 entries, normalized on load
//     "targets": [{"time": 1.0, "state": [[re, im], ...]}, ...],
//     "sigma": 0.04,
//     "t0": 0.0,                           optional, default 0
//     "steps": 300,
//     "H0": "auto" | [[[re, im], ...], ...],   optional, default "auto"
//     "descent": { ...DescentOptions fields... },   optional
//     "coherent_k": 2                      optional
//   }
//
// Unknown keys are rejected.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qspline/optimizer.hpp"

namespace qspline {

/// Raised for unreadable, malformed or schema-violating problem files.
class ProblemFileError : public Error {
 public:
  using Error::Error;
};

struct ProblemFile {
  std::string label;
  int n = 1;
  PureState psi0;
  /// Norm of psi0 as written in the file.
  Real psi0_input_norm = 1.0L;
  std::vector<std::pair<Real, PureState>> targets;
  Real sigma = 1.0L;
  Real t0 = 0.0L;
  int steps = 0;
  std::optional<HermitianOperator> h0;  ///< empty: geodesic toward the first target
  DescentOptions descent;
  std::optional<int> coherent_k;

  /// psi0 differed from unit norm by more than 1e-12 before normalization.
  bool psi0_renormalized() const;
  /// Validated spec; throws Error naming a misaligned target time.
  ProblemSpec spec() const;
};

ProblemFile parse_problem(const std::string& text);
/// Throws ProblemFileError when the file is missing or unreadable.
ProblemFile load_problem(const std::filesystem::path& path);

/// Re-loadable JSON for the fully resolved problem: H0 written explicitly,
/// psi0 normalized, descent options spelled out.
std::string format_problem(const ProblemFile& file, const ProblemSpec& resolved);

const char* to_string(DescentDirection d);

}  // namespace qspline
