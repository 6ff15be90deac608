#pragma once

// Independent reference implementations for tests, built on Eigen.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "qdent/core.hpp"
#include "qdent/dynamics.hpp"

namespace oracle {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using cd = std::complex<double>;

inline Mat to_eigen(const qdent::ComplexMatrix& m) {
  Mat out(m.dim(), m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) out(i, j) = m(i, j);
  return out;
}

inline qdent::ComplexMatrix from_eigen(const Mat& m) {
  qdent::ComplexMatrix out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

inline Mat ket_bra(int n, int i, int j) {
  Mat m = Mat::Zero(n, n);
  m(i, j) = 1.0;
  return m;
}

/// H written out element by element in the (g, x, b) basis.
inline Mat hamiltonian(double omega, double delta_x, double delta_b) {
  Mat h = Mat::Zero(3, 3);
  h(0, 1) = h(1, 0) = h(1, 2) = h(2, 1) = omega / 2.0;
  h(1, 1) = delta_x - delta_b;
  h(2, 2) = -2.0 * delta_b;
  return h;
}

struct Jump {
  Mat op;
  double rate;
};

/// Generator acting on column-stacked vec(ρ): vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ).
inline Mat liouvillian(const Mat& h, const std::vector<Jump>& jumps) {
  const auto n = h.rows();
  const Mat id = Mat::Identity(n, n);
  const cd i(0.0, 1.0);
  Mat l = -i * (Eigen::kroneckerProduct(id, h).eval() - Eigen::kroneckerProduct(h.transpose(), id).eval());
  for (const auto& j : jumps) {
    const Mat jdj = j.op.adjoint() * j.op;
    l += j.rate * (Eigen::kroneckerProduct(j.op.conjugate(), j.op).eval() -
                   0.5 * Eigen::kroneckerProduct(id, jdj).eval() -
                   0.5 * Eigen::kroneckerProduct(jdj.transpose(), id).eval());
  }
  return l;
}

/// Cascade generator for a constant amplitude Ω.
inline Mat cascade_liouvillian(double omega, const qdent::PulseDrive& d, const qdent::DecayRates& decay,
                               const qdent::DephasingModel& deph) {
  const double g_d = deph.gamma_bg + deph.gamma_i0 * std::pow(omega, deph.n_p);
  std::vector<Jump> jumps{{ket_bra(3, 1, 2), decay.gamma_b},
                          {ket_bra(3, 0, 1), decay.gamma_x},
                          {ket_bra(3, 2, 2) - ket_bra(3, 1, 1), g_d},
                          {ket_bra(3, 1, 1) - ket_bra(3, 0, 0), g_d}};
  return liouvillian(hamiltonian(omega, d.delta_x, d.delta_b), jumps);
}

inline Vec vec(const Mat& rho) { return Eigen::Map<const Vec>(rho.data(), rho.size()); }

inline Mat unvec(const Vec& v, Eigen::Index n) { return Eigen::Map<const Mat>(v.data(), n, n); }

inline Mat propagate(const Mat& generator, const Mat& rho0, double t) {
  const Mat prop = (generator * t).exp();
  return unvec(prop * vec(rho0), rho0.rows());
}

/// Wootters concurrence from the non-Hermitian product ρ (σy⊗σy) ρ* (σy⊗σy).
inline double wootters(const Mat& rho) {
  Mat sy(2, 2);
  sy << 0.0, cd(0, -1), cd(0, 1), 0.0;
  const Mat yy = Eigen::kroneckerProduct(sy, sy);
  const Mat r = rho * yy * rho.conjugate() * yy;
  Eigen::ComplexEigenSolver<Mat> es(r);
  std::vector<double> lam;
  for (Eigen::Index k = 0; k < 4; ++k) lam.push_back(std::sqrt(std::max(es.eigenvalues()(k).real(), 0.0)));
  std::sort(lam.rbegin(), lam.rend());
  return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

inline Vec random_ket(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (int k = 0; k < n; ++k) v(k) = cd(g(rng), g(rng));
  return v.normalized();
}

/// Ginibre-distributed full-rank density matrix.
inline Mat random_density(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cd(g(rng), g(rng));
  Mat rho = a * a.adjoint();
  return rho / rho.trace();
}

inline Mat random_hermitian(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cd(g(rng), g(rng));
  return (a + a.adjoint()) / 2.0;
}

}  // namespace oracle
