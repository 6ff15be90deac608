#include "qdent/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace qdent {

namespace {

constexpr std::size_t kG = 0, kX = 1, kB = 2;
using State = std::array<Complex, 9>;

inline Complex& at(State& s, std::size_t i, std::size_t j) { return s[i * 3 + j]; }
inline Complex at(const State& s, std::size_t i, std::size_t j) { return s[i * 3 + j]; }

State to_state(const ComplexMatrix& m) {
  State s;
  std::copy(m.entries().begin(), m.entries().end(), s.begin());
  return s;
}

ComplexMatrix to_matrix(const State& s) { return ComplexMatrix(3, std::vector<Complex>(s.begin(), s.end())); }

// Component form of the Lindblad right-hand side. Equivalent to the operator
// form built from build_hamiltonian() and dissipator(); the unit tests check
// the two against each other.
void rhs(const State& rho, double t, const PulseDrive& drive, const DecayRates& decay, const DephasingModel& deph,
         State& out) {
  const double omega = drive.amplitude(t);
  const double half = 0.5 * omega;
  const double ex = drive.delta_x - drive.delta_b;
  const double eb = -2.0 * drive.delta_b;
  const double gd = deph.rate(omega);

  // H ρ - ρ H with H = [[0, h, 0], [h, ex, h], [0, h, eb]]
  for (std::size_t j = 0; j < 3; ++j) {
    const Complex hg = half * at(rho, kX, j);
    const Complex hx = half * (at(rho, kG, j) + at(rho, kB, j)) + ex * at(rho, kX, j);
    const Complex hb = half * at(rho, kX, j) + eb * at(rho, kB, j);
    at(out, kG, j) = hg;
    at(out, kX, j) = hx;
    at(out, kB, j) = hb;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const Complex rg = half * at(rho, i, kX);
    const Complex rx = half * (at(rho, i, kG) + at(rho, i, kB)) + ex * at(rho, i, kX);
    const Complex rb = half * at(rho, i, kX) + eb * at(rho, i, kB);
    at(out, i, kG) -= rg;
    at(out, i, kX) -= rx;
    at(out, i, kB) -= rb;
  }
  const Complex minus_i{0.0, -1.0};
  for (auto& z : out) z *= minus_i;

  // Population transfer of the cascade.
  const double rbb = at(rho, kB, kB).real();
  const double rxx = at(rho, kX, kX).real();
  at(out, kX, kX) += decay.gamma_b * rbb;
  at(out, kG, kG) += decay.gamma_x * rxx;
  // Anticommutator terms: every element in row/column b loses γ_b/2 per index, likewise x with γ_x.
  const double loss[3] = {0.0, 0.5 * decay.gamma_x, 0.5 * decay.gamma_b};
  // Pure dephasing: -γ/2 (a_i - a_j)² summed over both Hermitian channels.
  // (a_i - a_j)² summed: g-x 5, g-b 2, x-b 5.
  const double deph_w[3][3] = {{0.0, 5.0, 2.0}, {5.0, 0.0, 5.0}, {2.0, 5.0, 0.0}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      at(out, i, j) -= (loss[i] + loss[j] + 0.5 * gd * deph_w[i][j]) * at(rho, i, j);
}

// Smallest eigenvalue of a 3×3 Hermitian matrix from the trigonometric solution of the characteristic cubic.
double min_eig_3x3(const State& a) {
  const double q = (at(a, 0, 0).real() + at(a, 1, 1).real() + at(a, 2, 2).real()) / 3.0;
  double p2 = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const Complex v = at(a, i, j) - (i == j ? q : 0.0);
      p2 += std::norm(v);
    }
  p2 /= 6.0;
  if (p2 <= 1e-300) return q;
  const double p = std::sqrt(p2);
  State b;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) at(b, i, j) = (at(a, i, j) - (i == j ? q : 0.0)) / p;
  const Complex det = at(b, 0, 0) * (at(b, 1, 1) * at(b, 2, 2) - at(b, 1, 2) * at(b, 2, 1)) -
                      at(b, 0, 1) * (at(b, 1, 0) * at(b, 2, 2) - at(b, 1, 2) * at(b, 2, 0)) +
                      at(b, 0, 2) * (at(b, 1, 0) * at(b, 2, 1) - at(b, 1, 1) * at(b, 2, 0));
  const double r = std::clamp(0.5 * det.real(), -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  return q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
}

// The closed form loses about half the digits near a repeated eigenvalue (pure
// states); small results are recomputed with the Jacobi solver.
double min_eigenvalue_checked(const State& a) {
  const double estimate = min_eig_3x3(a);
  if (estimate > 1e-6) return estimate;
  const ComplexMatrix m = to_matrix(a);
  return eig_hermitian(0.5 * (m + adjoint(m)), std::numeric_limits<double>::infinity()).back().value;
}

double hermiticity_error(const State& s) {
  double err = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i; j < 3; ++j) err = std::max(err, std::abs(at(s, i, j) - std::conj(at(s, j, i))));
  return err;
}

// Dormand–Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

double error_norm(const State& err, const State& y0, const State& y1, double tol) {
  double e = 0.0;
  for (std::size_t k = 0; k < 9; ++k) {
    const double sre = tol + tol * std::max(std::abs(y0[k].real()), std::abs(y1[k].real()));
    const double sim = tol + tol * std::max(std::abs(y0[k].imag()), std::abs(y1[k].imag()));
    e = std::max({e, std::abs(err[k].real()) / sre, std::abs(err[k].imag()) / sim});
  }
  return e;
}

struct Hermite {
  double h00, h10, h01, h11;
  explicit Hermite(double s)
      : h00(2 * s * s * s - 3 * s * s + 1),
        h10(s * s * s - 2 * s * s + s),
        h01(-2 * s * s * s + 3 * s * s),
        h11(s * s * s - s * s) {}
};

std::size_t interval_index(const Trajectory& traj, double t) {
  if (traj.times.size() < 2 || t < traj.t_begin() || t > traj.t_end()) {
    std::ostringstream os;
    os << "time " << t << " outside trajectory range";
    if (!traj.times.empty()) os << " [" << traj.t_begin() << ", " << traj.t_end() << "]";
    throw InvalidArgument(os.str());
  }
  auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
  std::size_t k = static_cast<std::size_t>(it - traj.times.begin());
  if (k == 0) k = 1;
  if (k >= traj.times.size()) k = traj.times.size() - 1;
  return k - 1;
}

// Population of x and b on interval k at local coordinate s ∈ [0, 1].
inline std::array<double, 2> pop_xb(const Trajectory& traj, std::size_t k, double s) {
  const double h = traj.times[k + 1] - traj.times[k];
  const Hermite w(s);
  const auto& p0 = traj.populations[k];
  const auto& p1 = traj.populations[k + 1];
  const auto& f0 = traj.derivatives[k];
  const auto& f1 = traj.derivatives[k + 1];
  return {w.h00 * p0[kX] + w.h10 * h * f0(kX, kX).real() + w.h01 * p1[kX] + w.h11 * h * f1(kX, kX).real(),
          w.h00 * p0[kB] + w.h10 * h * f0(kB, kB).real() + w.h01 * p1[kB] + w.h11 * h * f1(kB, kB).real()};
}

// ∫ over [t_k, t_k + frac·h] of (ρ_xx, ρ_bb) by the trapezoid rule with 2^level panels.
std::array<double, 2> interval_trapezoid(const Trajectory& traj, std::size_t k, double frac, int level) {
  const double h = (traj.times[k + 1] - traj.times[k]) * frac;
  const std::size_t panels = std::size_t{1} << level;
  std::array<double, 2> sum{0.0, 0.0};
  for (std::size_t m = 0; m <= panels; ++m) {
    const double w = (m == 0 || m == panels) ? 0.5 : 1.0;
    const auto v = pop_xb(traj, k, frac * static_cast<double>(m) / static_cast<double>(panels));
    sum[0] += w * v[0];
    sum[1] += w * v[1];
  }
  const double dh = h / static_cast<double>(panels);
  return {sum[0] * dh, sum[1] * dh};
}

std::array<double, 2> integral_to(const Trajectory& traj, double t_f, int level) {
  std::array<double, 2> total{0.0, 0.0};
  if (t_f <= traj.t_begin()) return total;
  const std::size_t last = interval_index(traj, t_f);
  for (std::size_t k = 0; k < last; ++k) {
    const auto v = interval_trapezoid(traj, k, 1.0, level);
    total[0] += v[0];
    total[1] += v[1];
  }
  const double frac = (t_f - traj.times[last]) / (traj.times[last + 1] - traj.times[last]);
  if (frac > 0.0) {
    const auto v = interval_trapezoid(traj, last, frac, level);
    total[0] += v[0];
    total[1] += v[1];
  }
  return total;
}

constexpr double kQuadratureTol = 1e-7;
constexpr int kMaxRefinement = 16;

int converged_level(const Trajectory& traj, const DecayRates& decay, double t_f) {
  auto prev = integral_to(traj, t_f, 0);
  for (int level = 1; level <= kMaxRefinement; ++level) {
    const auto cur = integral_to(traj, t_f, level);
    const double dx = decay.gamma_x * std::abs(cur[0] - prev[0]);
    const double db = decay.gamma_b * std::abs(cur[1] - prev[1]);
    if (dx < kQuadratureTol && db < kQuadratureTol) return level;
    prev = cur;
  }
  throw NumericalError("emission_probabilities: quadrature refinement did not converge");
}

}  // namespace

double PulseDrive::amplitude(double t) const {
  const double u = (t - t0) / sigma;
  return omega0 * std::exp(-std::numbers::ln2 * u * u);
}

void PulseDrive::validate() const {
  if (!(sigma > 0.0)) throw InvalidArgument("PulseDrive: sigma must be > 0");
  if (!(omega0 >= 0.0)) throw InvalidArgument("PulseDrive: omega0 must be >= 0");
}

void DecayRates::validate() const {
  if (!(gamma_b >= 0.0) || !(gamma_x >= 0.0)) throw InvalidArgument("DecayRates: rates must be >= 0");
}

double DephasingModel::rate(double omega_t) const {
  if (gamma_i0 == 0.0) return gamma_bg;
  return gamma_bg + gamma_i0 * std::pow(omega_t, n_p);
}

void DephasingModel::validate() const {
  if (!(gamma_bg >= 0.0)) throw InvalidArgument("DephasingModel: gamma_bg must be >= 0");
  if (!(gamma_i0 >= 0.0)) throw InvalidArgument("DephasingModel: gamma_i0 must be >= 0");
  if (n_p < 0) throw InvalidArgument("DephasingModel: n_p must be >= 0");
}

double pulse_area(const PulseDrive& drive) {
  return drive.omega0 * drive.sigma * std::sqrt(std::numbers::pi / std::numbers::ln2);
}

double omega0_for_area(double area, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("omega0_for_area: sigma must be > 0");
  if (!(area >= 0.0)) throw InvalidArgument("omega0_for_area: area must be >= 0");
  return area / (sigma * std::sqrt(std::numbers::pi / std::numbers::ln2));
}

double pulse_energy_axis(const PulseDrive& drive) { return drive.omega0 * drive.omega0 * drive.sigma; }

ComplexMatrix build_hamiltonian(double omega_t, const PulseDrive& drive) {
  if (!(omega_t >= 0.0)) throw InvalidArgument("build_hamiltonian: omega_t must be >= 0");
  ComplexMatrix h(3);
  const double half = 0.5 * omega_t;
  h(kG, kX) = h(kX, kG) = half;
  h(kX, kB) = h(kB, kX) = half;
  h(kX, kX) = drive.delta_x - drive.delta_b;
  h(kB, kB) = -2.0 * drive.delta_b;
  return h;
}

ComplexMatrix dissipator(const ComplexMatrix& jump, double rate, const ComplexMatrix& rho) {
  const ComplexMatrix jd = adjoint(jump);
  const ComplexMatrix jdj = jd * jump;
  ComplexMatrix out = 2.0 * (jump * rho * jd);
  out -= jdj * rho;
  out -= rho * jdj;
  out *= 0.5 * rate;
  return out;
}

const JumpOperators& jump_operators() {
  static const JumpOperators ops = [] {
    JumpOperators o{ComplexMatrix(3), ComplexMatrix(3), ComplexMatrix(3), ComplexMatrix(3)};
    o.biexciton_decay(kX, kB) = 1.0;
    o.exciton_decay(kG, kX) = 1.0;
    o.dephasing_bb(kB, kB) = 1.0;
    o.dephasing_bb(kX, kX) = -1.0;
    o.dephasing_xx(kX, kX) = 1.0;
    o.dephasing_xx(kG, kG) = -1.0;
    return o;
  }();
  return ops;
}

ComplexMatrix lindblad_rhs(const ComplexMatrix& rho, double t, const PulseDrive& drive, const DecayRates& decay,
                           const DephasingModel& deph) {
  if (rho.dim() != 3) throw InvalidArgument("lindblad_rhs: expected a 3x3 density matrix");
  State out;
  rhs(to_state(rho), t, drive, decay, deph, out);
  return to_matrix(out);
}

ComplexMatrix Trajectory::state_at(double t) const {
  const std::size_t k = interval_index(*this, t);
  const double h = times[k + 1] - times[k];
  const Hermite w((t - times[k]) / h);
  ComplexMatrix out = w.h00 * states[k].matrix();
  out += w.h10 * h * derivatives[k];
  out += w.h01 * states[k + 1].matrix();
  out += w.h11 * h * derivatives[k + 1];
  return out;
}

std::array<double, 3> Trajectory::populations_at(double t) const {
  const ComplexMatrix m = state_at(t);
  return {m(0, 0).real(), m(1, 1).real(), m(2, 2).real()};
}

std::pair<double, double> default_time_span(const PulseDrive& drive, const DecayRates& decay) {
  if (!(decay.gamma_x > 0.0)) throw InvalidArgument("default_time_span: gamma_x must be > 0");
  return {drive.t0 - 5.0 * drive.sigma, drive.t0 + 5.0 * drive.sigma + 10.0 / decay.gamma_x};
}

Trajectory evolve(const QdDensityMatrix& rho0, const PulseDrive& drive, const DecayRates& decay,
                  const DephasingModel& deph, std::pair<double, double> t_span, const EvolveOptions& opts) {
  drive.validate();
  decay.validate();
  deph.validate();
  const auto [t_begin, t_end] = t_span;
  if (!(t_end > t_begin)) throw InvalidArgument("evolve: t_span must be increasing");
  const double tol = opts.tol;
  if (!(tol > 0.0 && tol <= 1e-3)) throw InvalidArgument("evolve: tol must be in (0, 1e-3]");

  const double window_lo = drive.t0 - 5.0 * drive.sigma;
  const double window_hi = drive.t0 + 5.0 * drive.sigma;
  const double h_pulse = opts.max_step_in_pulse > 0.0 ? opts.max_step_in_pulse : 0.25 * drive.sigma;
  const double violation = 100.0 * tol;

  Trajectory traj;
  auto record = [&](double t, const State& y, const State& f) {
    traj.times.push_back(t);
    traj.states.emplace_back(to_matrix(y));
    traj.derivatives.push_back(to_matrix(f));
    traj.populations.push_back({at(y, kG, kG).real(), at(y, kX, kX).real(), at(y, kB, kB).real()});
    traj.gb_coherence.push_back(at(y, kG, kB));

    const double tr_err = std::abs(at(y, 0, 0) + at(y, 1, 1) + at(y, 2, 2) - 1.0);
    const double h_err = hermiticity_error(y);
    const double lam = min_eigenvalue_checked(y);
    traj.max_trace_error = std::max(traj.max_trace_error, tr_err);
    traj.max_hermiticity_error = std::max(traj.max_hermiticity_error, h_err);
    traj.min_eigenvalue = std::min(traj.min_eigenvalue, lam);
    if (tr_err > violation || h_err > violation || lam < -violation) {
      std::ostringstream os;
      os << "evolve: density-matrix invariant violated at t = " << t << " (trace error " << tr_err
         << ", Hermiticity error " << h_err << ", min eigenvalue " << lam << ")";
      throw NumericalError(os.str());
    }
  };

  State y = to_state(rho0.matrix());
  State k1, k2, k3, k4, k5, k6, k7, tmp, y_new, err;
  traj.min_eigenvalue = min_eigenvalue_checked(y);
  double t = t_begin;
  rhs(y, t, drive, decay, deph, k1);
  record(t, y, k1);

  auto clamp_step = [&](double t_now, double h) {
    if (t_now < window_hi && t_now + h > window_lo) h = std::min(h, h_pulse);
    return std::min(h, t_end - t_now);
  };

  // Initial step (Hairer, Nørsett & Wanner II.4).
  double h;
  {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t k = 0; k < 9; ++k) {
      d0 = std::max(d0, std::abs(y[k]));
      d1 = std::max(d1, std::abs(k1[k]));
    }
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    for (std::size_t k = 0; k < 9; ++k) tmp[k] = y[k] + h * k1[k];
    rhs(tmp, t + h, drive, decay, deph, k2);
    double d2 = 0.0;
    for (std::size_t k = 0; k < 9; ++k) d2 = std::max(d2, std::abs(k2[k] - k1[k]) / h);
    const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, 1e-3 * h) : std::pow(0.01 / std::max(d1, d2), 0.2);
    h = clamp_step(t, std::min(100.0 * h, h1));
  }

  bool last_rejected = false;
  while (t < t_end) {
    h = clamp_step(t, h);
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      std::ostringstream os;
      os << "evolve: step size underflow at t = " << t << " ps";
      throw NumericalError(os.str());
    }
    for (std::size_t k = 0; k < 9; ++k) tmp[k] = y[k] + h * (a21 * k1[k]);
    rhs(tmp, t + c2 * h, drive, decay, deph, k2);
    for (std::size_t k = 0; k < 9; ++k) tmp[k] = y[k] + h * (a31 * k1[k] + a32 * k2[k]);
    rhs(tmp, t + c3 * h, drive, decay, deph, k3);
    for (std::size_t k = 0; k < 9; ++k) tmp[k] = y[k] + h * (a41 * k1[k] + a42 * k2[k] + a43 * k3[k]);
    rhs(tmp, t + c4 * h, drive, decay, deph, k4);
    for (std::size_t k = 0; k < 9; ++k) tmp[k] = y[k] + h * (a51 * k1[k] + a52 * k2[k] + a53 * k3[k] + a54 * k4[k]);
    rhs(tmp, t + c5 * h, drive, decay, deph, k5);
    for (std::size_t k = 0; k < 9; ++k)
      tmp[k] = y[k] + h * (a61 * k1[k] + a62 * k2[k] + a63 * k3[k] + a64 * k4[k] + a65 * k5[k]);
    const double t_next = (t + h >= t_end) ? t_end : t + h;
    rhs(tmp, t_next, drive, decay, deph, k6);
    for (std::size_t k = 0; k < 9; ++k)
      y_new[k] = y[k] + h * (b1 * k1[k] + b3 * k3[k] + b4 * k4[k] + b5 * k5[k] + b6 * k6[k]);
    rhs(y_new, t_next, drive, decay, deph, k7);
    for (std::size_t k = 0; k < 9; ++k)
      err[k] = h * (e1 * k1[k] + e3 * k3[k] + e4 * k4[k] + e5 * k5[k] + e6 * k6[k] + e7 * k7[k]);

    const double en = error_norm(err, y, y_new, tol);
    if (en <= 1.0) {
      t = t_next;
      y = y_new;
      k1 = k7;
      record(t, y, k1);
      double factor = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
      factor = std::clamp(factor, 0.2, last_rejected ? 1.0 : 5.0);
      h *= factor;
      last_rejected = false;
    } else {
      ++traj.rejected_steps;
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      last_rejected = true;
    }
  }
  return traj;
}

EmissionProbabilities emission_probabilities(const Trajectory& traj, const DecayRates& decay, double t_f) {
  if (traj.times.size() < 2) throw InvalidArgument("emission_probabilities: trajectory has fewer than two points");
  if (t_f < traj.t_begin() || t_f > traj.t_end()) {
    std::ostringstream os;
    os << "emission_probabilities: t_f = " << t_f << " outside trajectory [" << traj.t_begin() << ", "
       << traj.t_end() << "]";
    throw InvalidArgument(os.str());
  }
  const int level = converged_level(traj, decay, t_f);
  const auto v = integral_to(traj, t_f, level);
  return {decay.gamma_x * v[0], decay.gamma_b * v[1]};
}

std::vector<EmissionProbabilities> emission_curve(const Trajectory& traj, const DecayRates& decay) {
  if (traj.times.size() < 2) throw InvalidArgument("emission_curve: trajectory has fewer than two points");
  const int level = converged_level(traj, decay, traj.t_end());
  std::vector<EmissionProbabilities> out(traj.size());
  std::array<double, 2> acc{0.0, 0.0};
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const auto v = interval_trapezoid(traj, k, 1.0, level);
    acc[0] += v[0];
    acc[1] += v[1];
    out[k + 1] = {decay.gamma_x * acc[0], decay.gamma_b * acc[1]};
  }
  return out;
}

}  // namespace qdent
