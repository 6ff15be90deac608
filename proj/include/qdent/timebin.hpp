#pragma once

#include <cstddef>

#include "qdent/core.hpp"
#include "qdent/dynamics.hpp"

namespace qdent {

struct TimeBinModelParams {
  double phi_p = 0.0;           ///< pump interferometer phase
  double epsilon = 0.0;         ///< excitation probability per pulse
  double v_coh = 1.0;           ///< contrast factor on the ee-ll coherence
  double pairing_weight = 4.0;  ///< post-selected XX-X pairings per double excitation

  void validate() const;
};

/// (|ee⟩ + e^{iφ}|ll⟩)/√2
TwoQubitState ideal_state(double phi_p);

/// Fraction of post-selected coincidences coming from double excitations.
double accidental_fraction(double epsilon, double pairing_weight = 4.0);

/// (1 - q) ρ_damped(φ, v_coh) + q I/4
TwoQubitState model_state(const TimeBinModelParams& params);

/// |⟨g|ρ|b⟩| / sqrt(ρ_gg ρ_bb) at `pulse_end`, clamped to [0, 1].
double excitation_coherence(const Trajectory& traj, double pulse_end);

struct Visibilities {
  double time;
  double energy_0;
  double energy_90;
};

/**
 * Fringe visibilities. The time-basis value is P_ee + P_ll - P_el - P_le.
 * An energy-basis value projects the X photon on (|e⟩ + e^{iφ}|l⟩)/√2 with
 * φ = 0 or π/2 and scans the XX analysis phase α over a full period;
 * visibility = (max - min)/(max + min) of the joint probability.
 */
Visibilities visibilities(const TwoQubitState& rho);

/// Wootters concurrence. Throws InvalidArgument for states that are not PSD within 1e-8.
double concurrence(const TwoQubitState& rho);

struct BellFidelity {
  double fidelity;
  double phi_opt;
};

/// max over φ of ⟨Φ(φ)|ρ|Φ(φ)⟩ with |Φ(φ)⟩ = (|ee⟩ + e^{iφ}|ll⟩)/√2.
BellFidelity fidelity_bell(const TwoQubitState& rho);

struct CoherenceElement {
  Complex value;
  std::size_t row;
  std::size_t col;
};

/// Off-diagonal element of largest magnitude (upper triangle).
CoherenceElement coherence_metric(const TwoQubitState& rho);

/// Uhlmann fidelity (tr sqrt(sqrt(ρ) σ sqrt(ρ)))².
double state_fidelity(const TwoQubitState& rho, const TwoQubitState& sigma);

/// v_coh for which fidelity_bell(model_state) equals `target` at the given ε and pairing weight.
double v_coh_for_fidelity(double target, double epsilon, double pairing_weight = 4.0);

}  // namespace qdent
