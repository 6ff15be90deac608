#include "qdent/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace qdent {

namespace {

void require_same_dim(const ComplexMatrix& a, const ComplexMatrix& b, const char* op) {
  if (a.dim() != b.dim()) {
    std::ostringstream os;
    os << op << ": dimension mismatch (" << a.dim() << " vs " << b.dim() << ")";
    throw InvalidArgument(os.str());
  }
}

double frobenius(const ComplexMatrix& m) {
  double s = 0.0;
  for (const auto& z : m.entries()) s += std::norm(z);
  return std::sqrt(s);
}

double off_diagonal_norm(const ComplexMatrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j)
      if (i != j) s += std::norm(m(i, j));
  return std::sqrt(s);
}

}  // namespace

ComplexMatrix::ComplexMatrix(std::size_t dim) : dim_(dim), entries_(dim * dim) {}

ComplexMatrix::ComplexMatrix(std::size_t dim, std::vector<Complex> entries) : dim_(dim), entries_(std::move(entries)) {
  if (entries_.size() != dim_ * dim_) {
    std::ostringstream os;
    os << "ComplexMatrix: expected " << dim_ * dim_ << " entries, got " << entries_.size();
    throw InvalidArgument(os.str());
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t dim) {
  ComplexMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> values) {
  ComplexMatrix m(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

ComplexMatrix ComplexMatrix::outer(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) throw InvalidArgument("outer: vector length mismatch");
  ComplexMatrix m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * std::conj(b[j]);
  return m;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& other) {
  require_same_dim(*this, other, "add");
  for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += other.entries_[k];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& other) {
  require_same_dim(*this, other, "subtract");
  for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] -= other.entries_[k];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex scalar) {
  for (auto& z : entries_) z *= scalar;
  return *this;
}

double ComplexMatrix::hermiticity_error() const {
  double err = 0.0;
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i; j < dim_; ++j) err = std::max(err, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
  return err;
}

double ComplexMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& z : entries_) m = std::max(m, std::abs(z));
  return m;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator*(Complex scalar, ComplexMatrix m) { return m *= scalar; }
ComplexMatrix operator*(ComplexMatrix m, Complex scalar) { return m *= scalar; }

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_dim(a, b, "multiply");
  const std::size_t n = a.dim();
  ComplexMatrix c(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const Complex aik = a(i, k);
      if (aik == Complex{}) continue;
      for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

ComplexMatrix adjoint(const ComplexMatrix& m) {
  ComplexMatrix out(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) out(j, i) = std::conj(m(i, j));
  return out;
}

ComplexMatrix conjugate(const ComplexMatrix& m) {
  ComplexMatrix out = m;
  for (auto& z : out.entries()) z = std::conj(z);
  return out;
}

Complex trace(const ComplexMatrix& m) {
  Complex t{};
  for (std::size_t i = 0; i < m.dim(); ++i) t += m(i, i);
  return t;
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) { return a * b - b * a; }

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  const std::size_t na = a.dim(), nb = b.dim();
  ComplexMatrix out(na * nb);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < na; ++j)
      for (std::size_t k = 0; k < nb; ++k)
        for (std::size_t l = 0; l < nb; ++l) out(i * nb + k, j * nb + l) = a(i, j) * b(k, l);
  return out;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_dim(a, b, "max_abs_diff");
  double d = 0.0;
  for (std::size_t k = 0; k < a.entries().size(); ++k) d = std::max(d, std::abs(a.entries()[k] - b.entries()[k]));
  return d;
}

std::vector<EigenPair> eig_hermitian(const ComplexMatrix& m, double hermitian_tol) {
  const double herr = m.hermiticity_error();
  if (herr > hermitian_tol) {
    std::ostringstream os;
    os << "eig_hermitian: input is not Hermitian (max |M_ij - conj(M_ji)| = " << herr << ")";
    throw InvalidArgument(os.str());
  }
  const std::size_t n = m.dim();
  // Work on the exactly Hermitian part.
  ComplexMatrix a(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = m(i, i).real();
    for (std::size_t j = i + 1; j < n; ++j) {
      a(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));
      a(j, i) = std::conj(a(i, j));
    }
  }
  ComplexMatrix v = ComplexMatrix::identity(n);

  const double scale = std::max(frobenius(a), 1e-300);
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && off_diagonal_norm(a) > 1e-12 * scale; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double abs_pq = std::abs(a(p, q));
        if (abs_pq < 1e-300) continue;
        // Phase-rotate q so that a(p,q) is real and positive, then a real Jacobi rotation.
        const Complex phase = a(p, q) / abs_pq;
        const double app = a(p, p).real(), aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * abs_pq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // G = diag(1, conj(phase)) * [[c, s], [-s, c]] on the (p, q) plane.
        const Complex g_pp = c, g_pq = s, g_qp = -s * std::conj(phase), g_qq = c * std::conj(phase);
        // a <- a G
        for (std::size_t k = 0; k < n; ++k) {
          const Complex akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * g_pp + akq * g_qp;
          a(k, q) = akp * g_pq + akq * g_qq;
        }
        // a <- G† a
        for (std::size_t k = 0; k < n; ++k) {
          const Complex apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(g_pp) * apk + std::conj(g_qp) * aqk;
          a(q, k) = std::conj(g_pq) * apk + std::conj(g_qq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (std::size_t k = 0; k < n; ++k) {
          const Complex vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * g_pp + vkq * g_qp;
          v(k, q) = vkp * g_pq + vkq * g_qq;
        }
      }
    }
  }

  std::vector<EigenPair> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    out[j].value = a(j, j).real();
    out[j].vector.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[j].vector[i] = v(i, j);
  }
  std::stable_sort(out.begin(), out.end(), [](const EigenPair& x, const EigenPair& y) { return x.value > y.value; });
  return out;
}

double min_eigenvalue(const ComplexMatrix& m) { return eig_hermitian(m, 1e300).back().value; }

ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
  return hermitian_function(m, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b, double singular_tol) {
  const std::size_t n = b.size();
  if (a.size() != n * n) throw InvalidArgument("solve_linear: matrix is not n x n");
  double amax = 0.0;
  for (double x : a) amax = std::max(amax, std::abs(x));
  const double threshold = singular_tol * std::max(amax, 1e-300);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (std::abs(a[piv * n + col]) <= threshold) {
      std::ostringstream os;
      os << "solve_linear: singular matrix (pivot " << a[piv * n + col] << " in column " << col << ")";
      throw NumericalError(os.str());
    }
    if (piv != col) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[col * n + k], a[piv * n + k]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t k = col; k < n; ++k) a[r * n + k] -= f * a[col * n + k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i * n + k] * x[k];
    x[i] = s / a[i * n + i];
  }
  return x;
}

std::size_t matrix_rank(std::vector<double> a, std::size_t rows, std::size_t cols, double rel_tol) {
  if (a.size() != rows * cols) throw InvalidArgument("matrix_rank: size mismatch");
  double amax = 0.0;
  for (double x : a) amax = std::max(amax, std::abs(x));
  if (amax == 0.0) return 0;
  const double threshold = rel_tol * amax;
  std::vector<std::size_t> col_order(cols);
  std::iota(col_order.begin(), col_order.end(), 0);
  std::size_t rank = 0;
  for (std::size_t step = 0; step < std::min(rows, cols); ++step) {
    std::size_t pr = step, pc = step;
    double best = 0.0;
    for (std::size_t r = step; r < rows; ++r)
      for (std::size_t c = step; c < cols; ++c)
        if (std::abs(a[r * cols + c]) > best) {
          best = std::abs(a[r * cols + c]);
          pr = r;
          pc = c;
        }
    if (best <= threshold) break;
    for (std::size_t c = 0; c < cols; ++c) std::swap(a[step * cols + c], a[pr * cols + c]);
    for (std::size_t r = 0; r < rows; ++r) std::swap(a[r * cols + step], a[r * cols + pc]);
    for (std::size_t r = step + 1; r < rows; ++r) {
      const double f = a[r * cols + step] / a[step * cols + step];
      for (std::size_t c = step; c < cols; ++c) a[r * cols + c] -= f * a[step * cols + c];
    }
    ++rank;
  }
  return rank;
}

StateCheck check_state(const ComplexMatrix& rho) {
  StateCheck c{};
  c.trace_error = std::abs(trace(rho) - 1.0);
  c.hermiticity_error = rho.hermiticity_error();
  c.min_eigenvalue = min_eigenvalue(rho);
  return c;
}

QdDensityMatrix::QdDensityMatrix() : QdDensityMatrix(pure(kGround)) {}

QdDensityMatrix::QdDensityMatrix(ComplexMatrix m) : m_(std::move(m)) {
  if (m_.dim() != 3) throw InvalidArgument("QdDensityMatrix: expected a 3x3 matrix");
}

QdDensityMatrix QdDensityMatrix::pure(Level level) {
  ComplexMatrix m(3);
  m(level, level) = 1.0;
  return QdDensityMatrix(std::move(m));
}

TwoQubitState::TwoQubitState() : TwoQubitState(maximally_mixed()) {}

TwoQubitState::TwoQubitState(ComplexMatrix m) : m_(std::move(m)) {
  if (m_.dim() != 4) throw InvalidArgument("TwoQubitState: expected a 4x4 matrix");
}

TwoQubitState TwoQubitState::maximally_mixed() { return TwoQubitState(0.25 * ComplexMatrix::identity(4)); }

TwoQubitState TwoQubitState::from_pure(std::span<const Complex> amplitudes) {
  if (amplitudes.size() != 4) throw InvalidArgument("TwoQubitState::from_pure: expected 4 amplitudes");
  double norm = 0.0;
  for (const auto& a : amplitudes) norm += std::norm(a);
  if (norm <= 0.0) throw InvalidArgument("TwoQubitState::from_pure: zero vector");
  std::vector<Complex> v(amplitudes.begin(), amplitudes.end());
  for (auto& a : v) a /= std::sqrt(norm);
  return TwoQubitState(ComplexMatrix::outer(v, v));
}

}  // namespace qdent
