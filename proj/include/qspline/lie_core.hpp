#pragma once

// Dense complex matrix arithmetic on su(n+1) and its unitary group.
//
// Conventions: hbar = 1, algebra elements are trace-free skew-Hermitian
// matrices (so a Hamiltonian H enters as iH), and the pairing is
// <A, B> = -2 Re tr(AB).

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qspline {

/// Working precision. Extended precision keeps the gradient noise floor
/// (largest Hessian eigenvalue times the unit round-off of the initial
/// conditions) small enough for tight tolerances on stiff problems.
using Real = long double;
using Complex = std::complex<Real>;
using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using RealVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

inline constexpr Real kPi = 3.141592653589793238462643383279502884L;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Trace-free skew-Hermitian matrix.
///
/// Construction checks both invariants relative to max(1, |entries|_F).
/// Drift up to 1e-8 is removed by projecting back onto su(n+1); anything
/// larger is rejected.
class AlgebraElement {
 public:
  AlgebraElement() = default;
  explicit AlgebraElement(Matrix entries);

  static AlgebraElement zero(Eigen::Index dim);

  const Matrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

  AlgebraElement operator+(const AlgebraElement& o) const;
  AlgebraElement operator-(const AlgebraElement& o) const;
  AlgebraElement operator-() const;
  AlgebraElement operator*(Real s) const;
  AlgebraElement& operator+=(const AlgebraElement& o);
  AlgebraElement& operator-=(const AlgebraElement& o);

 private:
  struct Trusted {};
  AlgebraElement(Matrix entries, Trusted) : m_(std::move(entries)) {}
  friend AlgebraElement project_su(const Matrix& a);

  Matrix m_;
};

inline AlgebraElement operator*(Real s, const AlgebraElement& a) { return a * s; }

/// Unitary matrix; |det| = 1. For n >= 2 the Cayley image of su(n+1) is
/// not contained in SU(n+1), so only the modulus of the determinant is
/// constrained.
class UnitaryOperator {
 public:
  UnitaryOperator() = default;
  explicit UnitaryOperator(Matrix entries);

  static UnitaryOperator identity(Eigen::Index dim);

  const Matrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

  UnitaryOperator operator*(const UnitaryOperator& o) const;
  UnitaryOperator inverse() const;

 private:
  friend class CayleyFactors;
  Matrix m_;
};

/// Trace-free Hermitian matrix (a Hamiltonian).
class HermitianOperator {
 public:
  HermitianOperator() = default;
  explicit HermitianOperator(Matrix entries);

  static HermitianOperator zero(Eigen::Index dim);
  /// H such that iH = a.
  static HermitianOperator from_generator(const AlgebraElement& a);

  const Matrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

  /// iH as an algebra element.
  AlgebraElement generator() const;

 private:
  Matrix m_;
};

Real inner(const AlgebraElement& a, const AlgebraElement& b);
/// -2 Re tr(AB) for arbitrary square matrices of equal size.
Real inner_raw(const Matrix& a, const Matrix& b);
/// sqrt(inner(a, a)).
Real norm(const AlgebraElement& a);

/// (A - A^dagger)/2 with its trace removed. Satisfies
/// inner(project_su(A), Y) = -2 Re tr(A Y) for every Y in su(n+1).
AlgebraElement project_su(const Matrix& a);

/// Cayley map (1 - X/2)^{-1} (1 + X/2).
UnitaryOperator cayley(const AlgebraElement& x);
/// 2 (V - 1)(V + 1)^{-1}; throws on the chart boundary (-1 in the spectrum)
/// or when the result is not trace-free.
AlgebraElement cayley_inverse(const UnitaryOperator& v);

// Trivialized differentials of the Cayley map, projected onto su(n+1).
// The inverses are exact inverses of the projected maps on su(n+1).
AlgebraElement dl_tau(const AlgebraElement& x, const AlgebraElement& y);
AlgebraElement dl_tau_inverse(const AlgebraElement& x, const AlgebraElement& w);
AlgebraElement dr_tau(const AlgebraElement& x, const AlgebraElement& y);
AlgebraElement dr_tau_inverse(const AlgebraElement& x, const AlgebraElement& w);

/// U X U^{-1}.
AlgebraElement adjoint_action(const UnitaryOperator& u, const AlgebraElement& x);

/// Orthonormal basis of su(n+1) under inner(), n(n+2) elements:
/// off-diagonal real and imaginary generators first (row-major over i < j),
/// then the diagonal Cartan elements.
std::vector<AlgebraElement> su_basis(int n);

/// Coefficients of a on an orthonormal basis.
RealVector coordinates(const AlgebraElement& a, const std::vector<AlgebraElement>& basis);
/// Inverse of coordinates().
AlgebraElement combine(const RealVector& coeffs, const std::vector<AlgebraElement>& basis,
                       Eigen::Index dim);

/// Factors 1 - X/2 and 1 + X/2 at a fixed X, shared by the Cayley map and
/// the trivialized differentials at X (and at -X, since d_l tau_{-X} = d_r tau_X).
/// The factor inverses are obtained once per point from an LU solve; both
/// factors are normal with singular values >= 1.
class CayleyFactors {
 public:
  explicit CayleyFactors(const AlgebraElement& x);

  const AlgebraElement& point() const { return x_; }

  /// tau(X) and tau(-X) = tau(X)^{-1}.
  UnitaryOperator cayley() const;
  UnitaryOperator cayley_negated() const;

  // Unprojected maps on u(n+1) matrices.
  Matrix dl_raw(const Matrix& y) const { return minus_inv_ * y * plus_inv_; }
  Matrix dr_raw(const Matrix& y) const { return plus_inv_ * y * minus_inv_; }
  Matrix dl_inverse_raw(const Matrix& w) const { return minus_ * w * plus_; }
  Matrix dr_inverse_raw(const Matrix& w) const { return plus_ * w * minus_; }

  // su(n+1)-projected maps and their exact inverses on su(n+1).
  AlgebraElement dl(const AlgebraElement& y) const;
  AlgebraElement dr(const AlgebraElement& y) const;
  AlgebraElement dl_inverse(const AlgebraElement& w) const;
  AlgebraElement dr_inverse(const AlgebraElement& w) const;

  const Matrix& minus() const { return minus_; }
  const Matrix& plus() const { return plus_; }
  const Matrix& minus_inverse() const { return minus_inv_; }
  const Matrix& plus_inverse() const { return plus_inv_; }

 private:
  AlgebraElement projected_inverse(Matrix raw_inverse) const;

  AlgebraElement x_;
  Matrix minus_, plus_, minus_inv_, plus_inv_;
  Matrix trace_fix_;  // 1 - X^2/4, the raw inverse image of the identity
  Complex trace_fix_trace_;
};

/// Unprojected maps on skew-Hermitian (u(n+1)) matrices.
namespace raw {
Matrix dl_tau(const Matrix& x, const Matrix& y);
Matrix dl_tau_inverse(const Matrix& x, const Matrix& w);
Matrix dr_tau(const Matrix& x, const Matrix& y);
Matrix dr_tau_inverse(const Matrix& x, const Matrix& w);
}  // namespace raw

}  // namespace qspline
