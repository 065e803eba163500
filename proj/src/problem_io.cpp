#include "qspline/problem_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace qspline {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ProblemFileError("problem file: " + where + ": " + what);
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) fail(where.empty() ? key : where + "." + key, "unknown key");
  }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) fail(where.empty() ? key : where + "." + key, "missing");
  return obj.at(key);
}

Real number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(where, "expected a finite number");
  return static_cast<Real>(d);
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  return v.get<int>();
}

bool boolean(const json& v, const std::string& where) {
  if (!v.is_boolean()) fail(where, "expected true or false");
  return v.get<bool>();
}

Complex complex_number(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) fail(where, "expected a [re, im] pair");
  return {number(v[0], where + "[0]"), number(v[1], where + "[1]")};
}

Vector amplitudes(const json& v, Eigen::Index dim, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of [re, im] pairs");
  if (static_cast<Eigen::Index>(v.size()) != dim) {
    fail(where, "expected " + std::to_string(dim) + " amplitudes, got " + std::to_string(v.size()));
  }
  Vector out(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    out(k) = complex_number(v[static_cast<std::size_t>(k)], where + "[" + std::to_string(k) + "]");
  }
  return out;
}

PureState state(const json& v, Eigen::Index dim, const std::string& where) {
  const Vector a = amplitudes(v, dim, where);
  try {
    return PureState(a);
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

HermitianOperator hamiltonian(const json& v, Eigen::Index dim, const std::string& where) {
  if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != dim) {
    fail(where, "expected \"auto\" or " + std::to_string(dim) + " rows of [re, im] pairs");
  }
  Matrix m(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    m.row(r) = amplitudes(v[static_cast<std::size_t>(r)], dim, where + "[" + std::to_string(r) + "]").transpose();
  }
  try {
    return HermitianOperator(m);
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

DescentDirection direction(const json& v, const std::string& where) {
  if (v == "steepest") return DescentDirection::steepest;
  if (v == "lbfgs") return DescentDirection::lbfgs;
  if (v == "newton") return DescentDirection::newton;
  fail(where, "expected \"steepest\", \"lbfgs\" or \"newton\"");
}

DescentOptions descent(const json& v) {
  const std::string w = "descent";
  if (!v.is_object()) fail(w, "expected an object");
  check_keys(v, w,
             {"max_iters", "grad_tol", "initial_step", "backtracking", "armijo", "max_backtracks",
              "restrict_m0", "direction", "lbfgs_memory", "terminal_tol", "seed", "restarts",
              "restart_scale", "continuation_from", "continuation_ratio", "continuation_grad_tol",
              "continuation_stage_iters"});
  DescentOptions o;
  auto field = [&](const char* key) -> const json* { return v.contains(key) ? &v.at(key) : nullptr; };
  auto at = [&](const char* key) { return w + "." + key; };
  if (auto* f = field("max_iters")) o.max_iters = integer(*f, at("max_iters"));
  if (auto* f = field("grad_tol")) o.grad_tol = number(*f, at("grad_tol"));
  if (auto* f = field("initial_step")) o.initial_step = number(*f, at("initial_step"));
  if (auto* f = field("backtracking")) o.backtracking = number(*f, at("backtracking"));
  if (auto* f = field("armijo")) o.armijo = number(*f, at("armijo"));
  if (auto* f = field("max_backtracks")) o.max_backtracks = integer(*f, at("max_backtracks"));
  if (auto* f = field("restrict_m0")) o.restrict_m0 = boolean(*f, at("restrict_m0"));
  if (auto* f = field("direction")) o.direction = direction(*f, at("direction"));
  if (auto* f = field("lbfgs_memory")) o.lbfgs_memory = integer(*f, at("lbfgs_memory"));
  if (auto* f = field("terminal_tol")) o.terminal_tol = number(*f, at("terminal_tol"));
  if (auto* f = field("seed")) {
    if (!f->is_number_unsigned()) fail(at("seed"), "expected a non-negative integer");
    o.seed = f->get<std::uint64_t>();
  }
  if (auto* f = field("restarts")) o.restarts = integer(*f, at("restarts"));
  if (auto* f = field("restart_scale")) o.restart_scale = number(*f, at("restart_scale"));
  if (auto* f = field("continuation_from")) o.continuation_from = number(*f, at("continuation_from"));
  if (auto* f = field("continuation_ratio")) o.continuation_ratio = number(*f, at("continuation_ratio"));
  if (auto* f = field("continuation_grad_tol")) o.continuation_grad_tol = number(*f, at("continuation_grad_tol"));
  if (auto* f = field("continuation_stage_iters"))
    o.continuation_stage_iters = integer(*f, at("continuation_stage_iters"));
  try {
    o.validate();
  } catch (const Error& e) {
    fail(w, e.what());
  }
  return o;
}

ordered_json complex_json(Complex c) {
  return ordered_json::array({static_cast<double>(c.real()), static_cast<double>(c.imag())});
}

ordered_json vector_json(const Vector& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(complex_json(v(k)));
  return out;
}

ordered_json descent_json(const DescentOptions& o) {
  ordered_json d;
  d["max_iters"] = o.max_iters;
  d["grad_tol"] = static_cast<double>(o.grad_tol);
  d["initial_step"] = static_cast<double>(o.initial_step);
  d["backtracking"] = static_cast<double>(o.backtracking);
  d["armijo"] = static_cast<double>(o.armijo);
  d["max_backtracks"] = o.max_backtracks;
  d["restrict_m0"] = o.restrict_m0;
  d["direction"] = to_string(o.direction);
  d["lbfgs_memory"] = o.lbfgs_memory;
  d["terminal_tol"] = static_cast<double>(o.terminal_tol);
  if (o.seed) d["seed"] = *o.seed;
  d["restarts"] = o.restarts;
  d["restart_scale"] = static_cast<double>(o.restart_scale);
  if (o.continuation_from) d["continuation_from"] = static_cast<double>(*o.continuation_from);
  d["continuation_ratio"] = static_cast<double>(o.continuation_ratio);
  d["continuation_grad_tol"] = static_cast<double>(o.continuation_grad_tol);
  d["continuation_stage_iters"] = o.continuation_stage_iters;
  return d;
}

}  // namespace

const char* to_string(DescentDirection d) {
  switch (d) {
    case DescentDirection::steepest: return "steepest";
    case DescentDirection::lbfgs: return "lbfgs";
    case DescentDirection::newton: return "newton";
  }
  return "unknown";
}

bool ProblemFile::psi0_renormalized() const { return std::abs(psi0_input_norm - 1.0L) > 1e-12L; }

ProblemSpec ProblemFile::spec() const { return make_problem(psi0, targets, sigma, steps, t0, h0); }

ProblemFile parse_problem(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProblemFileError(std::string("problem file: ") + e.what());
  }
  if (!doc.is_object()) fail("document", "expected a JSON object");
  check_keys(doc, "", {"label", "note", "n", "psi0", "targets", "sigma", "t0", "steps", "H0", "descent", "coherent_k"});

  ProblemFile out;
  if (doc.contains("label")) {
    if (!doc["label"].is_string()) fail("label", "expected a string");
    out.label = doc["label"].get<std::string>();
  }
  out.n = integer(require(doc, "n", ""), "n");
  if (out.n < 1) fail("n", "must be at least 1");
  const Eigen::Index dim = out.n + 1;

  const Vector raw = amplitudes(require(doc, "psi0", ""), dim, "psi0");
  out.psi0_input_norm = raw.norm();
  out.psi0 = state(doc["psi0"], dim, "psi0");

  const json& targets = require(doc, "targets", "");
  if (!targets.is_array() || targets.empty()) fail("targets", "expected a non-empty array");
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const std::string w = "targets[" + std::to_string(j) + "]";
    if (!targets[j].is_object()) fail(w, "expected an object with \"time\" and \"state\"");
    check_keys(targets[j], w, {"time", "state"});
    out.targets.emplace_back(number(require(targets[j], "time", w), w + ".time"),
                             state(require(targets[j], "state", w), dim, w + ".state"));
  }

  out.sigma = number(require(doc, "sigma", ""), "sigma");
  if (!(out.sigma > 0.0L)) fail("sigma", "must be positive");
  if (doc.contains("t0")) out.t0 = number(doc["t0"], "t0");
  out.steps = integer(require(doc, "steps", ""), "steps");
  if (out.steps < 1) fail("steps", "must be positive");
  if (doc.contains("H0") && doc["H0"] != "auto") out.h0 = hamiltonian(doc["H0"], dim, "H0");
  if (doc.contains("descent")) out.descent = descent(doc["descent"]);
  if (doc.contains("coherent_k")) {
    out.coherent_k = integer(doc["coherent_k"], "coherent_k");
    if (*out.coherent_k < 1) fail("coherent_k", "must be positive");
  }
  return out;
}

ProblemFile load_problem(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProblemFileError("problem file: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str());
}

std::string format_problem(const ProblemFile& file, const ProblemSpec& resolved) {
  ordered_json doc;
  if (!file.label.empty()) doc["label"] = file.label;
  doc["n"] = resolved.n;
  doc["psi0"] = vector_json(resolved.psi0.amplitudes());
  ordered_json targets = ordered_json::array();
  for (const auto& t : resolved.targets.targets) {
    ordered_json entry;
    entry["time"] = static_cast<double>(t.time);
    entry["state"] = vector_json(t.state.amplitudes());
    targets.push_back(entry);
  }
  doc["targets"] = targets;
  doc["sigma"] = static_cast<double>(resolved.sigma());
  doc["t0"] = static_cast<double>(resolved.t0);
  doc["steps"] = resolved.steps;
  ordered_json h0 = ordered_json::array();
  for (Eigen::Index r = 0; r < resolved.dim(); ++r) h0.push_back(vector_json(resolved.h0.matrix().row(r).transpose()));
  doc["H0"] = h0;
  doc["descent"] = descent_json(file.descent);
  if (file.coherent_k) doc["coherent_k"] = *file.coherent_k;
  return doc.dump(2) + "\n";
}

}  // namespace qspline
