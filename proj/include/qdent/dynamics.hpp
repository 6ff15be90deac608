#pragma once

#include <array>
#include <utility>
#include <vector>

#include "qdent/core.hpp"

namespace qdent {

// Units throughout: hbar = 1, time in ps, rates and energies in 1/ps.

/// Gaussian two-photon drive Ω(t) = Ω₀ exp(-ln2 (t - t₀)² / σ²) plus detunings.
struct PulseDrive {
  double omega0 = 0.0;   ///< peak Rabi amplitude
  double sigma = 1.0;    ///< half width at half maximum of Ω(t)
  double t0 = 0.0;       ///< pulse centre
  double delta_x = 0.0;  ///< virtual level to exciton energy difference
  double delta_b = 0.0;  ///< two-photon detuning

  double amplitude(double t) const;
  void validate() const;
};

struct DecayRates {
  double gamma_b = 0.002;  ///< b -> x
  double gamma_x = 0.001;  ///< x -> g

  void validate() const;
};

/// Dephasing rate γ(t) = γ_bg + γ_I0 Ω(t)^n_p applied to both dephasing channels.
struct DephasingModel {
  double gamma_bg = 0.0;
  double gamma_i0 = 0.0;
  int n_p = 0;

  double rate(double omega_t) const;
  void validate() const;
};

/// Pulse area ∫Ω dt = Ω₀ σ sqrt(π / ln2).
double pulse_area(const PulseDrive& drive);
/// Ω₀ giving the requested area at the drive's σ.
double omega0_for_area(double area, double sigma);
/// Ω₀² σ, proportional to the pulse energy.
double pulse_energy_axis(const PulseDrive& drive);

ComplexMatrix build_hamiltonian(double omega_t, const PulseDrive& drive);

/// γ/2 (2 L ρ L† - L†L ρ - ρ L†L)
ComplexMatrix dissipator(const ComplexMatrix& jump, double rate, const ComplexMatrix& rho);

/// Jump operators in standard Lindblad form: |x⟩⟨b|, |g⟩⟨x|, and the dephasing pair |b⟩⟨b|-|x⟩⟨x|, |x⟩⟨x|-|g⟩⟨g|.
struct JumpOperators {
  ComplexMatrix biexciton_decay;
  ComplexMatrix exciton_decay;
  ComplexMatrix dephasing_bb;
  ComplexMatrix dephasing_xx;
};
const JumpOperators& jump_operators();

/// dρ/dt = -i[H(t), ρ] + Σ D[L_k](ρ)
ComplexMatrix lindblad_rhs(const ComplexMatrix& rho, double t, const PulseDrive& drive, const DecayRates& decay,
                           const DephasingModel& deph);

struct EvolveOptions {
  double tol = 1e-9;
  /// Upper bound on the step inside [t0 - 5σ, t0 + 5σ]; 0 means σ/4.
  double max_step_in_pulse = 0.0;
};

/**
 * Master-equation trajectory on the accepted-step grid of the integrator.
 *
 * `derivatives` holds dρ/dt at every stored time so that the solution can be
 * interpolated between grid points with cubic Hermite polynomials.
 */
struct Trajectory {
  std::vector<double> times;
  std::vector<QdDensityMatrix> states;
  std::vector<ComplexMatrix> derivatives;
  std::vector<std::array<double, 3>> populations;
  std::vector<Complex> gb_coherence;

  double max_trace_error = 0.0;
  double max_hermiticity_error = 0.0;
  double min_eigenvalue = 0.0;
  std::size_t rejected_steps = 0;

  std::size_t size() const { return times.size(); }
  double t_begin() const { return times.front(); }
  double t_end() const { return times.back(); }

  /// Cubic Hermite interpolation of ρ(t).
  ComplexMatrix state_at(double t) const;
  std::array<double, 3> populations_at(double t) const;
};

/// [t0 - 5σ, t0 + 5σ + 10/γ_x]
std::pair<double, double> default_time_span(const PulseDrive& drive, const DecayRates& decay);

/**
 * Integrates the master equation with an embedded Dormand–Prince 5(4) pair.
 *
 * The dephasing rate is evaluated at every stage time. Trace is not
 * renormalised. Throws NumericalError on step-size underflow (the message
 * carries the time) or when trace, Hermiticity or positivity drift beyond
 * 100 × tol.
 */
Trajectory evolve(const QdDensityMatrix& rho0, const PulseDrive& drive, const DecayRates& decay,
                  const DephasingModel& deph, std::pair<double, double> t_span, const EvolveOptions& opts = {});

struct EmissionProbabilities {
  double p_x = 0.0;
  double p_b = 0.0;
};

/**
 * P_i(t_f) = γ_i ∫ ρ_ii dt from the start of the trajectory to t_f.
 *
 * Trapezoid rule on the stored grid, refined by interval halving on the
 * Hermite interpolant until both integrals change by less than 1e-7.
 */
EmissionProbabilities emission_probabilities(const Trajectory& traj, const DecayRates& decay, double t_f);

/// Cumulative P_x(t), P_b(t) at every stored time (same quadrature as above).
std::vector<EmissionProbabilities> emission_curve(const Trajectory& traj, const DecayRates& decay);

}  // namespace qdent
