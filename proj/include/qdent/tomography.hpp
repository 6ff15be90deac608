#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qdent/core.hpp"

namespace qdent {

/// Single-photon analysis projector: early, late, or (|e⟩ + e^{iφ}|l⟩)/√2.
struct Projector {
  enum class Kind { kEarly, kLate, kSuperposition };
  Kind kind = Kind::kEarly;
  double phase = 0.0;

  static Projector early() { return {Kind::kEarly, 0.0}; }
  static Projector late() { return {Kind::kLate, 0.0}; }
  static Projector superposition(double phase) { return {Kind::kSuperposition, phase}; }

  ComplexMatrix matrix() const;
  /// "E", "L" or "S(<phase>)"
  std::string label() const;
  static Projector parse(const std::string& label);

  bool operator==(const Projector&) const = default;
};

struct MeasurementSetting {
  Projector xx;
  Projector x;

  /// P_xx ⊗ P_x
  ComplexMatrix joint() const;
  bool operator==(const MeasurementSetting&) const = default;
};

/// {E, L, S(0), S(π/2)} on each photon, XX-major order.
std::vector<MeasurementSetting> standard_settings();

/// Real matrix A (rows = settings) with p_k = Σ_j A_kj x_j for the Hermitian
/// coordinates x = (ρ_00..ρ_33, Re ρ_01, Im ρ_01, Re ρ_02, ...).
std::vector<double> design_matrix(const std::vector<MeasurementSetting>& settings);

/// Rank of the Gram matrix tr(P_k P_l) of the joint projectors.
std::size_t gram_rank(const std::vector<MeasurementSetting>& settings);

/**
 * Coincidence counts per setting. Counts are stored as doubles: Poisson draws
 * are integral, while noiseless (expected-value) datasets are not.
 */
struct TomographyDataset {
  std::vector<MeasurementSetting> settings;
  std::vector<double> counts;
  double n_mean = 0.0;

  void validate() const;
};

std::vector<double> expected_counts(const TwoQubitState& rho, const std::vector<MeasurementSetting>& settings,
                                    double n_mean);

/// Noiseless dataset holding the expected counts.
TomographyDataset expected_dataset(const TwoQubitState& rho, const std::vector<MeasurementSetting>& settings,
                                   double n_mean);

/// Independent Poisson draws per setting from a 64-bit Mersenne Twister seeded with `seed`.
TomographyDataset simulate_counts(const TwoQubitState& rho, const std::vector<MeasurementSetting>& settings,
                                  double n_mean, std::uint64_t seed);

struct LinearReconstruction {
  TwoQubitState state;
  bool physical;
  double min_eigenvalue;
  double n_hat;  ///< normalisation from the time-basis counts
};

/// Linear inversion of ⟨P_k, ρ⟩ = counts_k / n̂, followed by trace normalisation.
LinearReconstruction reconstruct_linear(const TomographyDataset& data);

/// Eigenvalue clipping of a Hermitian estimate onto the unit-trace PSD cone.
TwoQubitState project_to_physical(const ComplexMatrix& m);

struct MleOptions {
  double rel_tol = 1e-10;
  int max_iterations = 5000;
};

struct MleReconstruction {
  TwoQubitState state;
  double log_likelihood;          ///< Σ c_k ln μ_k - μ_k at the optimum (constant terms dropped)
  double initial_log_likelihood;  ///< same, at the projected linear estimate
  int iterations;
  bool converged;
  bool degenerate;  ///< all counts zero: flat likelihood, returns I/4
};

/**
 * Maximum-likelihood estimate ρ = T†T / tr(T†T), T lower-triangular.
 *
 * Maximises the Poisson likelihood over the 16 real Cholesky parameters (the
 * unnormalised T†T also absorbs the count scale) by BFGS with backtracking,
 * starting from the projected linear estimate.
 */
MleReconstruction reconstruct_mle(const TomographyDataset& data, const MleOptions& opts = {});

/// Poisson log-likelihood Σ c_k ln μ_k - μ_k with μ_k = scale · tr(ρ P_k).
double poisson_log_likelihood(const TomographyDataset& data, const ComplexMatrix& rho, double scale);

}  // namespace qdent
