// Python bindings. The core computes in long double; arrays cross the
// boundary as float64 / complex128.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "qspline/coherent.hpp"
#include "qspline/problem_io.hpp"
#include "qspline/run.hpp"

namespace py = pybind11;
using namespace qspline;

namespace {

using MatrixD = Eigen::MatrixXcd;
using VectorD = Eigen::VectorXcd;

MatrixD to_double(const Matrix& m) { return m.cast<std::complex<double>>(); }
VectorD to_double(const Vector& v) { return v.cast<std::complex<double>>(); }
Matrix to_long(const MatrixD& m) { return m.cast<Complex>(); }
Vector to_long(const VectorD& v) { return v.cast<Complex>(); }

std::vector<double> to_double(const std::vector<Real>& v) { return {v.begin(), v.end()}; }

// (count, d, d) stacks are returned as lists of matrices; numpy.asarray
// turns them into one array on the Python side.
template <class T>
std::vector<MatrixD> stack(const std::vector<T>& ops) {
  std::vector<MatrixD> out;
  out.reserve(ops.size());
  for (const auto& op : ops) out.push_back(to_double(op.matrix()));
  return out;
}

py::dict report_dict(const ValidationReport& r) {
  py::dict d;
  d["terminal_l"] = static_cast<double>(r.terminal_l);
  d["terminal_m"] = static_cast<double>(r.terminal_m);
  d["lemma"] = static_cast<double>(r.lemma);
  d["l_continuity"] = static_cast<double>(r.l_continuity);
  d["node_jump"] = static_cast<double>(r.node_jump);
  d["cubic"] = static_cast<double>(r.cubic);
  d["cubic_centered"] = static_cast<double>(r.cubic_centered);
  d["grad_norm"] = static_cast<double>(r.grad_norm);
  d["gradient_converged"] = r.gradient_converged;
  d["terminal_converged"] = r.terminal_converged;
  d["disagreement"] = r.disagreement;
  return d;
}

std::vector<VectorD> path_states(const DiscretePath& p) {
  std::vector<VectorD> out;
  for (int mu = 0; mu <= p.steps(); ++mu) out.push_back(to_double(p.state(mu).amplitudes()));
  return out;
}

std::vector<double> path_times(const ProblemSpec& s) {
  std::vector<double> t;
  for (int mu = 0; mu <= s.steps; ++mu) t.push_back(static_cast<double>(s.time_at(mu)));
  return t;
}

DescentOptions options(const py::kwargs& kw) {
  DescentOptions o;
  for (const auto& [key, value] : kw) {
    const auto k = key.cast<std::string>();
    if (k == "max_iters") o.max_iters = value.cast<int>();
    else if (k == "grad_tol") o.grad_tol = value.cast<double>();
    else if (k == "restrict_m0") o.restrict_m0 = value.cast<bool>();
    else if (k == "lbfgs_memory") o.lbfgs_memory = value.cast<int>();
    else if (k == "terminal_tol") o.terminal_tol = value.cast<double>();
    else if (k == "seed") o.seed = value.cast<std::uint64_t>();
    else if (k == "restarts") o.restarts = value.cast<int>();
    else if (k == "continuation_from") o.continuation_from = value.cast<double>();
    else if (k == "direction") {
      const auto d = value.cast<std::string>();
      if (d == "steepest") o.direction = DescentDirection::steepest;
      else if (d == "lbfgs") o.direction = DescentDirection::lbfgs;
      else if (d == "newton") o.direction = DescentDirection::newton;
      else throw py::value_error("direction must be 'steepest', 'lbfgs' or 'newton'");
    } else {
      throw py::type_error("unknown option '" + k + "'");
    }
  }
  o.validate();
  return o;
}

}  // namespace

PYBIND11_MODULE(_qspline, m) {
  m.doc() = "Quantum spline solver: discrete Riemannian cubics through target states.";

  py::register_exception<Error>(m, "QsplineError", PyExc_ValueError);

  py::class_<ProblemSpec>(m, "Problem")
      .def_property_readonly("n", [](const ProblemSpec& s) { return s.n; })
      .def_property_readonly("steps", [](const ProblemSpec& s) { return s.steps; })
      .def_property_readonly("sigma", [](const ProblemSpec& s) { return static_cast<double>(s.sigma()); })
      .def_property_readonly("h", [](const ProblemSpec& s) { return static_cast<double>(s.h()); })
      .def_property_readonly("times", &path_times)
      .def_property_readonly("psi0", [](const ProblemSpec& s) { return to_double(s.psi0.amplitudes()); })
      .def_property_readonly("h0", [](const ProblemSpec& s) { return to_double(s.h0.matrix()); })
      .def_property_readonly("target_nodes",
                             [](const ProblemSpec& s) {
                               std::vector<int> nodes;
                               for (const auto& t : s.targets.targets) nodes.push_back(t.node);
                               return nodes;
                             })
      .def("refine", [](const ProblemSpec& s, int factor) { return refine(s, factor); }, py::arg("factor"));

  m.def(
      "make_problem",
      [](const VectorD& psi0, const std::vector<std::pair<double, VectorD>>& targets, double sigma, int steps,
         double t0, const std::optional<MatrixD>& h0) {
        std::vector<std::pair<Real, PureState>> t;
        for (const auto& [time, state] : targets) t.emplace_back(time, PureState(to_long(state)));
        std::optional<HermitianOperator> h;
        if (h0) h = HermitianOperator(to_long(*h0));
        return make_problem(PureState(to_long(psi0)), std::move(t), sigma, steps, t0, h);
      },
      py::arg("psi0"), py::arg("targets"), py::arg("sigma"), py::arg("steps"), py::arg("t0") = 0.0,
      py::arg("h0") = py::none(),
      "Targets are (time, state) pairs; states are normalized. Without h0 the geodesic toward the first target "
      "is used.");

  m.def(
      "load_problem",
      [](const std::filesystem::path& path, std::optional<double> sigma, std::optional<int> steps) {
        ProblemFile f = load_problem(path);
        if (sigma) f.sigma = *sigma;
        if (steps) f.steps = *steps;
        return f.spec();
      },
      py::arg("path"), py::arg("sigma") = py::none(), py::arg("steps") = py::none());

  m.def(
      "integrate",
      [](const ProblemSpec& spec, const MatrixD& m0, const MatrixD& l0) {
        const DiscretePath p = integrate(spec, AlgebraElement(to_long(m0)), AlgebraElement(to_long(l0)));
        py::dict d;
        d["times"] = path_times(spec);
        d["states"] = path_states(p);
        d["hamiltonians"] = stack(p.h);
        d["cost"] = static_cast<double>(cost(p));
        d["target_distances"] = to_double(target_distances(p));
        return d;
      },
      py::arg("problem"), py::arg("m0"), py::arg("l0"), "Forward integration from skew-Hermitian (M0, L0).");

  m.def(
      "cost_and_gradient",
      [](const ProblemSpec& spec, const MatrixD& m0, const MatrixD& l0) {
        const auto r = cost_and_gradient(spec, AlgebraElement(to_long(m0)), AlgebraElement(to_long(l0)));
        return py::make_tuple(static_cast<double>(r.cost), to_double(r.grad.wrt_m0.matrix()),
                              to_double(r.grad.wrt_l0.matrix()));
      },
      py::arg("problem"), py::arg("m0"), py::arg("l0"), "Adjoint gradient: (cost, grad_m0, grad_l0).");

  m.def(
      "fd_gradient",
      [](const ProblemSpec& spec, const MatrixD& m0, const MatrixD& l0, double step) {
        const auto r = fd_gradient(spec, AlgebraElement(to_long(m0)), AlgebraElement(to_long(l0)), step);
        return py::make_tuple(to_double(r.grad.wrt_m0.matrix()), to_double(r.grad.wrt_l0.matrix()));
      },
      py::arg("problem"), py::arg("m0"), py::arg("l0"), py::arg("step") = 1e-5);

  m.def(
      "solve",
      [](const ProblemSpec& spec, const py::kwargs& kw) {
        const DescentOptions o = options(kw);
        Solution s;
        {
          py::gil_scoped_release release;
          s = solve(spec, o);
        }
        const CostBreakdown c = cost_breakdown(s.path);
        py::dict d;
        d["converged"] = s.converged;
        d["stationary"] = s.stationary;
        d["iterations"] = s.iterations;
        d["cost"] = static_cast<double>(c.total());
        d["hamiltonian_change"] = static_cast<double>(c.hamiltonian_change);
        d["mismatch"] = static_cast<double>(c.mismatch);
        d["target_distances"] = to_double(target_distances(s.path));
        d["cost_history"] = to_double(s.cost_history);
        d["grad_norm_history"] = to_double(s.grad_norm_history);
        d["continuation_sigmas"] = to_double(s.continuation_sigmas);
        d["report"] = report_dict(s.report);
        d["m0"] = to_double(s.m0.matrix());
        d["l0"] = to_double(s.l0.matrix());
        d["times"] = path_times(spec);
        d["states"] = path_states(s.path);
        d["hamiltonians"] = stack(s.path.h);
        return d;
      },
      py::arg("problem"),
      "Descent from M0 = L0 = 0. Keyword options: max_iters, grad_tol, direction, restrict_m0, lbfgs_memory, "
      "terminal_tol, seed, restarts, continuation_from.");

  m.def(
      "cayley", [](const MatrixD& x) { return to_double(cayley(AlgebraElement(to_long(x))).matrix()); },
      py::arg("x"), "(1 - X/2)^-1 (1 + X/2) for trace-free skew-Hermitian X.");

  m.def(
      "distance",
      [](const VectorD& a, const VectorD& b) {
        return static_cast<double>(distance(PureState(to_long(a)), PureState(to_long(b))));
      },
      py::arg("psi"), py::arg("phi"), "Fubini-Study distance.");

  m.def("symmetric_basis", &symmetric_basis, py::arg("n"), py::arg("k"));
  m.def(
      "veronese", [](const VectorD& psi, int k) { return to_double(veronese(PureState(to_long(psi)), k).amplitudes()); },
      py::arg("psi"), py::arg("k"));
  m.def(
      "lift_hamiltonian",
      [](const MatrixD& h, int k) { return to_double(lift_hamiltonian(HermitianOperator(to_long(h)), k).matrix()); },
      py::arg("h"), py::arg("k"));

  m.def(
      "run_cli",
      [](const std::filesystem::path& config, const std::filesystem::path& out_dir, std::optional<double> sigma,
         std::optional<int> steps, std::optional<int> coherent_k) {
        RunConfig c;
        c.config = config;
        c.out_dir = out_dir;
        if (sigma) c.sigma = *sigma;
        c.steps = steps;
        c.coherent_k = coherent_k;
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run(c, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("config"), py::arg("out_dir"), py::arg("sigma") = py::none(), py::arg("steps") = py::none(),
      py::arg("coherent_k") = py::none(), "Same as the command-line tool: (exit_code, stdout, stderr).");
}
