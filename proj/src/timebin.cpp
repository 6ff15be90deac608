#include "qdent/timebin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qdent {

namespace {

constexpr std::size_t kEE = TwoQubitState::kEE, kLL = TwoQubitState::kLL;

ComplexMatrix superposition_projector(double phase) {
  const Complex e = std::polar(1.0, phase);
  ComplexMatrix p(2);
  p(0, 0) = p(1, 1) = 0.5;
  p(0, 1) = 0.5 * std::conj(e);
  p(1, 0) = 0.5 * e;
  return p;
}

// Joint probability with XX analysed at phase alpha and X at phase phi.
double energy_probability(const TwoQubitState& rho, double alpha, double phi) {
  const ComplexMatrix p = kron(superposition_projector(alpha), superposition_projector(phi));
  return trace(rho.matrix() * p).real();
}

void require_physical(const TwoQubitState& rho, const char* who) {
  const auto c = check_state(rho.matrix());
  if (!c.ok(1e-8)) {
    std::ostringstream os;
    os << who << ": state is not physical (trace error " << c.trace_error << ", Hermiticity error "
       << c.hermiticity_error << ", min eigenvalue " << c.min_eigenvalue << ")";
    throw InvalidArgument(os.str());
  }
}

}  // namespace

void TimeBinModelParams::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidArgument("TimeBinModelParams: epsilon must be in [0, 1]");
  if (!(v_coh >= 0.0 && v_coh <= 1.0)) throw InvalidArgument("TimeBinModelParams: v_coh must be in [0, 1]");
  if (!(pairing_weight >= 0.0)) throw InvalidArgument("TimeBinModelParams: pairing_weight must be >= 0");
}

TwoQubitState ideal_state(double phi_p) {
  const Complex a = 1.0 / std::numbers::sqrt2;
  const std::vector<Complex> psi{a, 0.0, 0.0, a * std::polar(1.0, phi_p)};
  return TwoQubitState(ComplexMatrix::outer(psi, psi));
}

double accidental_fraction(double epsilon, double pairing_weight) {
  const double doubles = pairing_weight * epsilon * epsilon;
  const double singles = 2.0 * epsilon * (1.0 - epsilon);
  if (doubles + singles == 0.0) return 0.0;
  return doubles / (singles + doubles);
}

TwoQubitState model_state(const TimeBinModelParams& params) {
  params.validate();
  const double q = accidental_fraction(params.epsilon, params.pairing_weight);
  ComplexMatrix rho = ideal_state(params.phi_p).matrix();
  rho(kEE, kLL) *= params.v_coh;
  rho(kLL, kEE) *= params.v_coh;
  rho *= 1.0 - q;
  rho += (0.25 * q) * ComplexMatrix::identity(4);
  return TwoQubitState(std::move(rho));
}

double excitation_coherence(const Trajectory& traj, double pulse_end) {
  const ComplexMatrix rho = traj.state_at(pulse_end);
  const double gg = rho(QdDensityMatrix::kGround, QdDensityMatrix::kGround).real();
  const double bb = rho(QdDensityMatrix::kBiexciton, QdDensityMatrix::kBiexciton).real();
  if (!(gg > 1e-9 && bb > 1e-9)) {
    std::ostringstream os;
    os << "excitation_coherence: populations too small at t = " << pulse_end << " (rho_gg " << gg << ", rho_bb "
       << bb << ")";
    throw InvalidArgument(os.str());
  }
  const double v = std::abs(rho(QdDensityMatrix::kGround, QdDensityMatrix::kBiexciton)) / std::sqrt(gg * bb);
  return std::clamp(v, 0.0, 1.0);
}

Visibilities visibilities(const TwoQubitState& rho) {
  const auto& m = rho.matrix();
  Visibilities v{};
  v.time = (m(0, 0) + m(3, 3) - m(1, 1) - m(2, 2)).real();
  // P(α) = A + Re(B e^{iα}); three samples fix A and B.
  auto fringe = [&](double phi) {
    const double p0 = energy_probability(rho, 0.0, phi);
    const double p90 = energy_probability(rho, 0.5 * std::numbers::pi, phi);
    const double p180 = energy_probability(rho, std::numbers::pi, phi);
    const double a = 0.5 * (p0 + p180);
    const Complex b{0.5 * (p0 - p180), a - p90};
    return a > 0.0 ? std::abs(b) / a : 0.0;
  };
  v.energy_0 = fringe(0.0);
  v.energy_90 = fringe(0.5 * std::numbers::pi);
  return v;
}

double concurrence(const TwoQubitState& rho) {
  require_physical(rho, "concurrence");
  // σy ⊗ σy in the (e, l) basis.
  ComplexMatrix flip(4);
  flip(0, 3) = flip(3, 0) = -1.0;
  flip(1, 2) = flip(2, 1) = 1.0;
  // With ρ = W W†, the square roots of the eigenvalues of ρ σ ρ* σ are the singular
  // values of τ = Wᵀ σ W. Round-off eigenvalues are dropped from W so pure states stay exact.
  const auto pairs = eig_hermitian(rho.matrix());
  std::vector<std::vector<Complex>> w;
  for (const auto& p : pairs)
    if (p.value > 1e-13 * pairs.front().value) {
      std::vector<Complex> col(4);
      for (std::size_t i = 0; i < 4; ++i) col[i] = std::sqrt(p.value) * p.vector[i];
      w.push_back(col);
    }
  const std::size_t k = w.size();
  ComplexMatrix tau(k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) tau(a, b) += w[a][i] * flip(i, j) * w[b][j];
  ComplexMatrix tt = adjoint(tau) * tau;
  tt = 0.5 * (tt + adjoint(tt));
  double lambda[4] = {0.0, 0.0, 0.0, 0.0};
  const auto sv = eig_hermitian(tt);
  for (std::size_t i = 0; i < k; ++i) lambda[i] = std::sqrt(std::max(sv[i].value, 0.0));
  return std::max(0.0, lambda[0] - lambda[1] - lambda[2] - lambda[3]);
}

BellFidelity fidelity_bell(const TwoQubitState& rho) {
  const auto& m = rho.matrix();
  const Complex c = m(kEE, kLL);
  return {0.5 * (m(kEE, kEE) + m(kLL, kLL)).real() + std::abs(c), std::abs(c) > 0.0 ? -std::arg(c) : 0.0};
}

CoherenceElement coherence_metric(const TwoQubitState& rho) {
  CoherenceElement best{0.0, 0, 1};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j)
      if (std::abs(rho(i, j)) > std::abs(best.value)) best = {rho(i, j), i, j};
  return best;
}

double state_fidelity(const TwoQubitState& rho, const TwoQubitState& sigma) {
  const ComplexMatrix s = psd_sqrt(rho.matrix());
  ComplexMatrix inner = s * sigma.matrix() * s;
  inner = 0.5 * (inner + adjoint(inner));
  double tr = 0.0;
  for (const auto& p : eig_hermitian(inner)) tr += std::sqrt(std::max(p.value, 0.0));
  return std::min(tr * tr, 1.0);
}

double v_coh_for_fidelity(double target, double epsilon, double pairing_weight) {
  const double q = accidental_fraction(epsilon, pairing_weight);
  const double v = 2.0 * (target - 0.25 * q) / (1.0 - q) - 1.0;
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream os;
    os << "v_coh_for_fidelity: fidelity " << target << " is not reachable at epsilon " << epsilon;
    throw InvalidArgument(os.str());
  }
  return v;
}

}  // namespace qdent
