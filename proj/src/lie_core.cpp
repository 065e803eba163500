#include "qspline/lie_core.hpp"

#include <cmath>

namespace qspline {
namespace {

constexpr Real kExactTol = 1e-12L;
constexpr Real kRepairTol = 1e-8L;

void require_same_dim(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.rows()) +
                         " vs " + std::to_string(b.rows()) + ")");
  }
}

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() < 2) {
    throw DimensionError(std::string(what) + ": expected a square matrix of size >= 2");
  }
}

Matrix identity(Eigen::Index d) { return Matrix::Identity(d, d); }

}  // namespace

AlgebraElement::AlgebraElement(Matrix entries) {
  require_square(entries, "AlgebraElement");
  const Real scale = std::max(1.0L, entries.norm());
  const Real skew_defect = (entries + entries.adjoint()).norm() / 2.0L;
  const Real trace_defect = std::abs(entries.trace());
  const Real defect = std::max(skew_defect, trace_defect);
  if (defect <= kExactTol * scale) {
    m_ = std::move(entries);
  } else if (defect <= kRepairTol * scale) {
    m_ = project_su(entries).m_;
  } else {
    throw InvariantError("AlgebraElement: matrix is not trace-free skew-Hermitian (defect " +
                         std::to_string(defect) + ")");
  }
}

AlgebraElement AlgebraElement::zero(Eigen::Index dim) {
  return AlgebraElement(Matrix::Zero(dim, dim), Trusted{});
}

AlgebraElement AlgebraElement::operator+(const AlgebraElement& o) const {
  require_same_dim(m_, o.m_, "AlgebraElement +");
  return AlgebraElement(m_ + o.m_, Trusted{});
}

AlgebraElement AlgebraElement::operator-(const AlgebraElement& o) const {
  require_same_dim(m_, o.m_, "AlgebraElement -");
  return AlgebraElement(m_ - o.m_, Trusted{});
}

AlgebraElement AlgebraElement::operator-() const { return AlgebraElement(-m_, Trusted{}); }

AlgebraElement AlgebraElement::operator*(Real s) const { return AlgebraElement(s * m_, Trusted{}); }

AlgebraElement& AlgebraElement::operator+=(const AlgebraElement& o) {
  require_same_dim(m_, o.m_, "AlgebraElement +=");
  m_ += o.m_;
  return *this;
}

AlgebraElement& AlgebraElement::operator-=(const AlgebraElement& o) {
  require_same_dim(m_, o.m_, "AlgebraElement -=");
  m_ -= o.m_;
  return *this;
}

UnitaryOperator::UnitaryOperator(Matrix entries) {
  require_square(entries, "UnitaryOperator");
  const Eigen::Index d = entries.rows();
  const Real defect = (entries.adjoint() * entries - Matrix::Identity(d, d)).norm();
  if (defect > 1e-10L) {
    throw InvariantError("UnitaryOperator: not unitary (defect " + std::to_string(defect) + ")");
  }
  const Real det_defect = std::abs(std::abs(entries.determinant()) - 1.0L);
  if (det_defect > 1e-10L) {
    throw InvariantError("UnitaryOperator: |det| != 1");
  }
  m_ = std::move(entries);
}

UnitaryOperator UnitaryOperator::identity(Eigen::Index dim) {
  UnitaryOperator u;
  u.m_ = Matrix::Identity(dim, dim);
  return u;
}

UnitaryOperator UnitaryOperator::operator*(const UnitaryOperator& o) const {
  require_same_dim(m_, o.m_, "UnitaryOperator *");
  UnitaryOperator u;
  u.m_ = m_ * o.m_;
  return u;
}

UnitaryOperator UnitaryOperator::inverse() const {
  UnitaryOperator u;
  u.m_ = m_.adjoint();
  return u;
}

HermitianOperator::HermitianOperator(Matrix entries) {
  require_square(entries, "HermitianOperator");
  // Validation and repair are shared with the generator.
  AlgebraElement gen(Complex(0.0L, 1.0L) * entries);
  m_ = Complex(0.0L, -1.0L) * gen.matrix();
}

HermitianOperator HermitianOperator::zero(Eigen::Index dim) {
  HermitianOperator h;
  h.m_ = Matrix::Zero(dim, dim);
  return h;
}

HermitianOperator HermitianOperator::from_generator(const AlgebraElement& a) {
  HermitianOperator h;
  h.m_ = Complex(0.0L, -1.0L) * a.matrix();
  return h;
}

AlgebraElement HermitianOperator::generator() const {
  return project_su(Complex(0.0L, 1.0L) * m_);
}

Real inner_raw(const Matrix& a, const Matrix& b) {
  require_same_dim(a, b, "inner");
  // Re tr(AB) without forming the product.
  return -2.0L * (a.transpose().cwiseProduct(b)).sum().real();
}

Real inner(const AlgebraElement& a, const AlgebraElement& b) {
  return inner_raw(a.matrix(), b.matrix());
}

Real norm(const AlgebraElement& a) { return std::sqrt(std::max(0.0L, inner(a, a))); }

AlgebraElement project_su(const Matrix& a) {
  require_square(a, "project_su");
  const Eigen::Index d = a.rows();
  Matrix s = 0.5L * (a - a.adjoint());
  const Complex tr = s.trace() / static_cast<Real>(d);
  s.diagonal().array() -= tr;
  // Exact skew-symmetry after the trace shift (its diagonal is imaginary).
  s.diagonal() = s.diagonal().imag().cast<Complex>() * Complex(0.0L, 1.0L);
  return AlgebraElement(std::move(s), AlgebraElement::Trusted{});
}

CayleyFactors::CayleyFactors(const AlgebraElement& x) : x_(x) {
  const Eigen::Index d = x.dim();
  const Matrix half = 0.5L * x.matrix();
  minus_ = identity(d) - half;
  plus_ = identity(d) + half;
  minus_inv_ = minus_.partialPivLu().solve(identity(d));
  plus_inv_ = plus_.partialPivLu().solve(identity(d));
  trace_fix_ = minus_ * plus_;
  trace_fix_trace_ = trace_fix_.trace();
}

UnitaryOperator CayleyFactors::cayley() const {
  UnitaryOperator u;
  u.m_ = minus_inv_ * plus_;
  return u;
}

UnitaryOperator CayleyFactors::cayley_negated() const {
  UnitaryOperator u;
  u.m_ = plus_inv_ * minus_;
  return u;
}

AlgebraElement CayleyFactors::dl(const AlgebraElement& y) const { return project_su(dl_raw(y.matrix())); }

AlgebraElement CayleyFactors::dr(const AlgebraElement& y) const { return project_su(dr_raw(y.matrix())); }

// The raw inverse of a projected conjugation map is off by a multiple of the
// raw inverse image of the identity; remove it so the result is trace-free.
AlgebraElement CayleyFactors::projected_inverse(Matrix raw_inverse) const {
  const Complex ratio = raw_inverse.trace() / trace_fix_trace_;
  raw_inverse -= ratio * trace_fix_;
  return project_su(raw_inverse);
}

AlgebraElement CayleyFactors::dl_inverse(const AlgebraElement& w) const {
  return projected_inverse(dl_inverse_raw(w.matrix()));
}

AlgebraElement CayleyFactors::dr_inverse(const AlgebraElement& w) const {
  return projected_inverse(dr_inverse_raw(w.matrix()));
}

UnitaryOperator cayley(const AlgebraElement& x) {
  const Eigen::Index d = x.dim();
  const Matrix half = 0.5L * x.matrix();
  Matrix v = (identity(d) - half).partialPivLu().solve(identity(d) + half);
  return UnitaryOperator(std::move(v));
}

AlgebraElement cayley_inverse(const UnitaryOperator& v) {
  const Eigen::Index d = v.dim();
  Eigen::PartialPivLU<Matrix> lu(v.matrix() + identity(d));
  if (!(lu.rcond() > 1e-12L)) {
    throw Error("cayley_inverse: Cayley chart boundary (-1 in the spectrum)");
  }
  Matrix x = 2.0L * lu.solve(v.matrix() - identity(d));
  return AlgebraElement(std::move(x));
}

namespace raw {

Matrix dl_tau(const Matrix& x, const Matrix& y) {
  const Eigen::Index d = x.rows();
  const Matrix half = 0.5L * x;
  // (1 - X/2)^{-1} Y (1 + X/2)^{-1}; the right factor via a transposed solve.
  Matrix left = (identity(d) - half).partialPivLu().solve(y);
  return (identity(d) + half).transpose().partialPivLu().solve(left.transpose()).transpose();
}

Matrix dl_tau_inverse(const Matrix& x, const Matrix& w) {
  const Eigen::Index d = x.rows();
  const Matrix half = 0.5L * x;
  return (identity(d) - half) * w * (identity(d) + half);
}

Matrix dr_tau(const Matrix& x, const Matrix& y) { return dl_tau(-x, y); }

Matrix dr_tau_inverse(const Matrix& x, const Matrix& w) { return dl_tau_inverse(-x, w); }

}  // namespace raw

AlgebraElement dl_tau(const AlgebraElement& x, const AlgebraElement& y) {
  require_same_dim(x.matrix(), y.matrix(), "dl_tau");
  return project_su(raw::dl_tau(x.matrix(), y.matrix()));
}

AlgebraElement dl_tau_inverse(const AlgebraElement& x, const AlgebraElement& w) {
  require_same_dim(x.matrix(), w.matrix(), "dl_tau_inverse");
  return CayleyFactors(x).dl_inverse(w);
}

AlgebraElement dr_tau(const AlgebraElement& x, const AlgebraElement& y) {
  require_same_dim(x.matrix(), y.matrix(), "dr_tau");
  return project_su(raw::dr_tau(x.matrix(), y.matrix()));
}

AlgebraElement dr_tau_inverse(const AlgebraElement& x, const AlgebraElement& w) {
  require_same_dim(x.matrix(), w.matrix(), "dr_tau_inverse");
  return CayleyFactors(x).dr_inverse(w);
}

AlgebraElement adjoint_action(const UnitaryOperator& u, const AlgebraElement& x) {
  require_same_dim(u.matrix(), x.matrix(), "adjoint_action");
  return project_su(u.matrix() * x.matrix() * u.matrix().adjoint());
}

std::vector<AlgebraElement> su_basis(int n) {
  if (n < 1) throw DimensionError("su_basis: n must be positive");
  const Eigen::Index d = n + 1;
  const Complex i(0.0L, 1.0L);
  std::vector<AlgebraElement> basis;
  basis.reserve(static_cast<std::size_t>(n * (n + 2)));
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a + 1; b < d; ++b) {
      Matrix sym = Matrix::Zero(d, d);
      sym(a, b) = sym(b, a) = 0.5L * i;
      basis.emplace_back(std::move(sym));
      Matrix anti = Matrix::Zero(d, d);
      anti(a, b) = 0.5L;
      anti(b, a) = -0.5L;
      basis.emplace_back(std::move(anti));
    }
  }
  for (Eigen::Index l = 1; l < d; ++l) {
    const Real c = std::sqrt(2.0L / static_cast<Real>(l * (l + 1)));
    Matrix diag = Matrix::Zero(d, d);
    for (Eigen::Index k = 0; k < l; ++k) diag(k, k) = 0.5L * i * c;
    diag(l, l) = -0.5L * i * c * static_cast<Real>(l);
    basis.emplace_back(std::move(diag));
  }
  return basis;
}

RealVector coordinates(const AlgebraElement& a, const std::vector<AlgebraElement>& basis) {
  RealVector c(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    c(static_cast<Eigen::Index>(k)) = inner(a, basis[k]);
  }
  return c;
}

AlgebraElement combine(const RealVector& coeffs, const std::vector<AlgebraElement>& basis,
                       Eigen::Index dim) {
  if (static_cast<std::size_t>(coeffs.size()) != basis.size()) {
    throw DimensionError("combine: coefficient count does not match basis size");
  }
  AlgebraElement out = AlgebraElement::zero(dim);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    out += basis[k] * coeffs(static_cast<Eigen::Index>(k));
  }
  return out;
}

}  // namespace qspline
