#include "qspline/run.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "json.hpp"
#include "qspline/coherent.hpp"

namespace qspline {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string fmt(Real x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(x));
  return buf;
}

std::string fmt_short(Real x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", static_cast<double>(x));
  return buf;
}

double d(Real x) { return static_cast<double>(x); }

ordered_json matrix_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({d(m(r, c).real()), d(m(r, c).imag())});
    rows.push_back(row);
  }
  return rows;
}

ordered_json real_array(const std::vector<Real>& v) {
  ordered_json out = ordered_json::array();
  for (Real x : v) out.push_back(d(x));
  return out;
}

class CsvFile {
 public:
  explicit CsvFile(const fs::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot write " + path.string());
  }
  CsvFile& cell(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }
  CsvFile& cell(Real x) { return cell(fmt(x)); }
  CsvFile& cell(int x) { return cell(std::to_string(x)); }
  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  std::ofstream out_;
  bool first_ = true;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_trajectory(const fs::path& path, const DiscretePath& p) {
  CsvFile csv(path);
  const auto dim = p.spec.dim();
  csv.cell("mu").cell("t");
  for (Eigen::Index k = 0; k < dim; ++k) {
    csv.cell("psi" + std::to_string(k) + "_re").cell("psi" + std::to_string(k) + "_im");
  }
  if (dim == 2) csv.cell("bloch_x").cell("bloch_y").cell("bloch_z");
  csv.end_row();
  for (int mu = 0; mu <= p.steps(); ++mu) {
    const PureState psi = p.state(mu);
    csv.cell(mu).cell(p.spec.time_at(mu));
    for (Eigen::Index k = 0; k < dim; ++k) csv.cell(psi.amplitudes()(k).real()).cell(psi.amplitudes()(k).imag());
    if (dim == 2) {
      const auto b = bloch_coords(psi);
      csv.cell(b[0]).cell(b[1]).cell(b[2]);
    }
    csv.end_row();
  }
}

void write_hamiltonian(const fs::path& path, const DiscretePath& p) {
  CsvFile csv(path);
  const auto dim = p.spec.dim();
  csv.cell("mu").cell("t");
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      const std::string name = "h" + std::to_string(r) + std::to_string(c);
      csv.cell(name + "_re").cell(name + "_im");
    }
  }
  if (dim == 2) csv.cell("omega").cell("axis_x").cell("axis_y").cell("axis_z").cell("degenerate");
  csv.end_row();
  for (int mu = 0; mu <= p.steps(); ++mu) {
    const HermitianOperator& h = p.h[static_cast<std::size_t>(mu)];
    csv.cell(mu).cell(p.spec.time_at(mu));
    for (Eigen::Index r = 0; r < dim; ++r)
      for (Eigen::Index c = 0; c < dim; ++c) csv.cell(h.matrix()(r, c).real()).cell(h.matrix()(r, c).imag());
    if (dim == 2) {
      const auto f = field_decomposition(h);
      csv.cell(f.omega).cell(f.axis[0]).cell(f.axis[1]).cell(f.axis[2]).cell(f.degenerate ? 1 : 0);
    }
    csv.end_row();
  }
}

void write_history(const fs::path& path, const Solution& sol) {
  CsvFile csv(path);
  csv.cell("iter").cell("cost").cell("grad_norm").cell("step");
  csv.end_row();
  for (std::size_t i = 0; i < sol.cost_history.size(); ++i) {
    csv.cell(static_cast<int>(i)).cell(sol.cost_history[i]).cell(sol.grad_norm_history[i]).cell(sol.step_history[i]);
    csv.end_row();
  }
}

void write_coherent(const fs::path& path, const CoherentTrajectory& traj, int n) {
  CsvFile csv(path);
  csv.cell("mu").cell("t");
  for (const auto& occ : symmetric_basis(n, traj.k)) {
    std::string name = "occ";
    for (int c : occ) name += "_" + std::to_string(c);
    csv.cell(name + "_re").cell(name + "_im");
  }
  csv.end_row();
  for (std::size_t mu = 0; mu < traj.states.size(); ++mu) {
    csv.cell(static_cast<int>(mu)).cell(traj.times[mu]);
    const Vector& a = traj.states[mu].amplitudes();
    for (Eigen::Index k = 0; k < a.size(); ++k) csv.cell(a(k).real()).cell(a(k).imag());
    csv.end_row();
  }
}

ordered_json report_json(const ValidationReport& r) {
  ordered_json j;
  j["terminal_l"] = d(r.terminal_l);
  j["terminal_m"] = d(r.terminal_m);
  j["lemma"] = d(r.lemma);
  j["l_continuity"] = d(r.l_continuity);
  j["node_jump"] = d(r.node_jump);
  j["cubic"] = d(r.cubic);
  j["cubic_points"] = r.cubic_points;
  j["cubic_centered"] = d(r.cubic_centered);
  j["grad_norm"] = d(r.grad_norm);
  j["gradient_converged"] = r.gradient_converged;
  j["terminal_converged"] = r.terminal_converged;
  j["disagreement"] = r.disagreement;
  return j;
}

ordered_json refinement_json(const RefinementStudy& s) {
  ordered_json j;
  ordered_json steps = ordered_json::array();
  for (int n : s.steps) steps.push_back(n);
  j["steps"] = steps;
  j["costs"] = real_array(s.costs);
  j["cubic"] = real_array(s.cubic);
  j["cubic_centered"] = real_array(s.cubic_centered);
  j["cost_order"] = d(s.cost_order);
  j["cubic_order"] = d(s.cubic_order);
  j["cubic_centered_order"] = d(s.cubic_centered_order);
  return j;
}

const char* status_name(int code) {
  switch (code) {
    case kExitConverged: return "converged";
    case kExitNotConverged: return "not_converged";
    default: return "line_search_stalled";
  }
}

int run_checked(const RunConfig& config, std::ostream& out, std::ostream& err) {
  ProblemFile file = load_problem(config.config);
  if (config.sigma) file.sigma = *config.sigma;
  if (config.steps) file.steps = *config.steps;
  if (config.tol) file.descent.grad_tol = *config.tol;
  if (config.max_iters) file.descent.max_iters = *config.max_iters;
  if (config.coherent_k) file.coherent_k = *config.coherent_k;
  if (!config.label.empty()) file.label = config.label;
  if (!(file.sigma > 0.0L)) throw Error("sigma must be positive");
  if (file.steps < 1) throw Error("steps must be positive");
  if (file.coherent_k && *file.coherent_k < 1) throw Error("coherent order k must be positive");
  file.descent.validate();
  const ProblemSpec spec = file.spec();

  fs::create_directories(config.out_dir);

  Solution sol;
  std::string stall;
  try {
    sol = solve(spec, file.descent);
  } catch (const LineSearchError& e) {
    sol = e.partial();
    stall = e.what();
  }
  const int code = !stall.empty() ? kExitError : sol.converged ? kExitConverged : kExitNotConverged;

  std::vector<std::string> files{"trajectory.csv", "hamiltonian.csv", "cost_history.csv", "validation.json",
                                 "summary.json"};
  write_trajectory(config.out_dir / "trajectory.csv", sol.path);
  write_hamiltonian(config.out_dir / "hamiltonian.csv", sol.path);
  write_history(config.out_dir / "cost_history.csv", sol);

  ordered_json validation = report_json(sol.report);
  if (config.validate && stall.empty()) validation["refinement"] = refinement_json(refinement_study(spec, file.descent, 3));
  write_text(config.out_dir / "validation.json", validation.dump(2) + "\n");

  const CostBreakdown costs = cost_breakdown(sol.path);
  const auto distances = target_distances(sol.path);
  Real sum_d2 = 0.0L;
  for (Real x : distances) sum_d2 += x * x;

  ordered_json summary;
  summary["label"] = file.label;
  summary["problem"] = ordered_json::parse(format_problem(file, spec));
  summary["psi0_input_norm"] = d(file.psi0_input_norm);
  summary["psi0_renormalized"] = file.psi0_renormalized();
  ordered_json result;
  result["status"] = status_name(code);
  result["exit_code"] = code;
  result["cost"] = d(costs.total());
  result["hamiltonian_change"] = d(costs.hamiltonian_change);
  result["mismatch"] = d(costs.mismatch);
  result["target_distances"] = real_array(distances);
  result["sum_d2"] = d(sum_d2);
  result["grad_norm"] = d(sol.report.grad_norm);
  result["terminal_l"] = d(sol.report.terminal_l);
  result["terminal_m"] = d(sol.report.terminal_m);
  result["iterations"] = sol.iterations;
  result["noise_steps"] = sol.noise_steps;
  result["converged"] = sol.converged;
  result["stationary"] = sol.stationary;
  result["continuation_sigmas"] = real_array(sol.continuation_sigmas);
  result["m0"] = matrix_json(sol.m0.matrix());
  result["l0"] = matrix_json(sol.l0.matrix());
  if (!stall.empty()) result["error"] = stall;
  summary["result"] = result;

  if (file.coherent_k) {
    const int k = *file.coherent_k;
    const CoherentTrajectory traj = embed(sol.path, k);
    write_coherent(config.out_dir / "coherent_trajectory.csv", traj, spec.n);
    files.emplace_back("coherent_trajectory.csv");
    ordered_json coh;
    coh["k"] = k;
    coh["dimension"] = static_cast<int>(symmetric_basis(spec.n, k).size());
    coh["metric_scale"] = d(metric_scale(k));
    coh["lifted_propagation_deviation"] =
        d(max_deviation(traj, lifted_propagation(sol.path, k, LiftedStepper::exact)));
    summary["coherent"] = coh;
  }
  ordered_json listed = ordered_json::array();
  for (const auto& f : files) listed.push_back(f);
  summary["files"] = listed;
  write_text(config.out_dir / "summary.json", summary.dump(2) + "\n");

  out << (file.label.empty() ? "run" : file.label) << ": " << status_name(code) << " cost " << fmt(costs.total())
      << " grad " << fmt_short(sol.report.grad_norm) << " terminal " << fmt_short(sol.report.terminal_l) << " "
      << fmt_short(sol.report.terminal_m) << " iterations " << sol.iterations;
  if (file.psi0_renormalized()) out << " (psi0 renormalized from norm " << fmt(file.psi0_input_norm) << ")";
  out << "\n";
  if (!stall.empty()) err << "error: " << stall << "\n";
  return code;
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    return run_checked(config, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace qspline
