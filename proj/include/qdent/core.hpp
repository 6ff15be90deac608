#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdent {

using Complex = std::complex<double>;

/// Raised for malformed inputs (dimension mismatch, non-Hermitian input, unphysical state).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure cannot complete (step underflow, singular system, no convergence).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Dense square complex matrix stored row-major.
 *
 * Sizes in this code base are 2, 3, 4 and (in test oracles) 9 or 16, so
 * everything is a plain loop over a std::vector.
 */
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  explicit ComplexMatrix(std::size_t dim);
  ComplexMatrix(std::size_t dim, std::vector<Complex> entries);

  static ComplexMatrix identity(std::size_t dim);
  static ComplexMatrix diagonal(std::span<const double> values);
  /// |a⟩⟨b|
  static ComplexMatrix outer(std::span<const Complex> a, std::span<const Complex> b);

  std::size_t dim() const { return dim_; }
  std::span<const Complex> entries() const { return entries_; }
  std::span<Complex> entries() { return entries_; }

  Complex& operator()(std::size_t row, std::size_t col) { return entries_[row * dim_ + col]; }
  const Complex& operator()(std::size_t row, std::size_t col) const { return entries_[row * dim_ + col]; }

  ComplexMatrix& operator+=(const ComplexMatrix& other);
  ComplexMatrix& operator-=(const ComplexMatrix& other);
  ComplexMatrix& operator*=(Complex scalar);

  /// max |M_ij - conj(M_ji)|
  double hermiticity_error() const;
  double max_abs() const;

  bool operator==(const ComplexMatrix&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<Complex> entries_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator*(Complex scalar, ComplexMatrix m);
ComplexMatrix operator*(ComplexMatrix m, Complex scalar);

ComplexMatrix adjoint(const ComplexMatrix& m);
/// Element-wise complex conjugate (no transpose).
ComplexMatrix conjugate(const ComplexMatrix& m);
Complex trace(const ComplexMatrix& m);
ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

struct EigenPair {
  double value;
  std::vector<Complex> vector;
};

/**
 * Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
 *
 * Eigenvalues are returned in descending order with orthonormal eigenvectors.
 * Throws InvalidArgument if the input deviates from Hermitian by more than
 * `hermitian_tol` (the message carries the violation magnitude).
 */
std::vector<EigenPair> eig_hermitian(const ComplexMatrix& m, double hermitian_tol = 1e-9);

/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const ComplexMatrix& m);

/// Applies `f` to the spectrum: V f(Λ) V†. Used for matrix square roots.
template <class F>
ComplexMatrix hermitian_function(const ComplexMatrix& m, F&& f) {
  const auto pairs = eig_hermitian(m);
  ComplexMatrix out(m.dim());
  for (const auto& p : pairs) {
    const double fv = f(p.value);
    for (std::size_t i = 0; i < m.dim(); ++i)
      for (std::size_t j = 0; j < m.dim(); ++j) out(i, j) += fv * p.vector[i] * std::conj(p.vector[j]);
  }
  return out;
}

/// Square root of a positive semidefinite matrix; negative eigenvalues are clipped to zero.
ComplexMatrix psd_sqrt(const ComplexMatrix& m);

/**
 * Solves the dense real system A x = b (A is n×n row-major) by LU with partial
 * pivoting. Throws NumericalError if a pivot falls below `singular_tol` times
 * the largest entry of A.
 */
std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b, double singular_tol = 1e-12);

/// Numerical rank of a real n×m matrix (row-major) via Gaussian elimination with full pivoting.
std::size_t matrix_rank(std::vector<double> a, std::size_t rows, std::size_t cols, double rel_tol = 1e-10);

struct StateCheck {
  double trace_error;
  double hermiticity_error;
  double min_eigenvalue;

  bool ok(double tol) const { return trace_error <= tol && hermiticity_error <= tol && min_eigenvalue >= -tol; }
};

StateCheck check_state(const ComplexMatrix& rho);

/// Three-level density matrix in the fixed basis (g, x, b).
class QdDensityMatrix {
 public:
  enum Level : std::size_t { kGround = 0, kExciton = 1, kBiexciton = 2 };

  QdDensityMatrix();  // |g⟩⟨g|
  explicit QdDensityMatrix(ComplexMatrix m);

  static QdDensityMatrix pure(Level level);

  const ComplexMatrix& matrix() const { return m_; }
  double population(Level level) const { return m_(level, level).real(); }
  Complex operator()(std::size_t r, std::size_t c) const { return m_(r, c); }

 private:
  ComplexMatrix m_;
};

/// Two time-bin qubits (XX first, X second) in the basis (ee, el, le, ll).
class TwoQubitState {
 public:
  enum Index : std::size_t { kEE = 0, kEL = 1, kLE = 2, kLL = 3 };

  TwoQubitState();  // maximally mixed
  explicit TwoQubitState(ComplexMatrix m);

  static TwoQubitState maximally_mixed();
  static TwoQubitState from_pure(std::span<const Complex> amplitudes);

  const ComplexMatrix& matrix() const { return m_; }
  Complex operator()(std::size_t r, std::size_t c) const { return m_(r, c); }

 private:
  ComplexMatrix m_;
};

}  // namespace qdent
