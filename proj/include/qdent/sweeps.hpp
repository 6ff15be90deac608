#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdent/dynamics.hpp"

namespace qdent {

/// Everything except the pulse amplitude needed to run one excitation pulse from |g⟩.
struct SweepSetup {
  double sigma = 8.0;
  double t0 = 0.0;
  double delta_x = 2.0;
  double delta_b = 0.0;
  DecayRates decay{};
  DephasingModel dephasing{};
  double tol = 1e-7;
  unsigned threads = 1;

  PulseDrive drive(double omega0) const { return {omega0, sigma, t0, delta_x, delta_b}; }
};

/// Floor on the direct-exciton yield P_x - P_b used by the ratio.
inline constexpr double kDirectExcitonFloor = 1e-6;

enum class Abscissa { kPulseArea, kPulseEnergy };

/**
 * One curve of a sweep. Points that failed to integrate keep NaN entries and
 * carry their error message; the remaining points are still valid.
 */
struct SweepResult {
  Abscissa abscissa_kind = Abscissa::kPulseArea;
  std::vector<double> abscissa;
  std::vector<double> omega0;
  std::vector<double> p_b;
  std::vector<double> p_x;
  std::vector<double> ratio;
  std::vector<std::uint8_t> saturated;  ///< P_x - P_b hit the floor (bytes: written from worker threads)
  std::vector<std::string> failure;  ///< empty when the point succeeded
  SweepSetup setup;

  std::size_t size() const { return abscissa.size(); }
  bool failed(std::size_t i) const { return !failure[i].empty(); }
  bool any_failed() const;
  /// P_x above one only happens through re-excitation within the pulse.
  bool px_above_one() const;
};

/// Runs a single pulse from |g⟩ over the default span and returns (P_x, P_b).
EmissionProbabilities pulse_emission(const SweepSetup& setup, double omega0);

SweepResult rabi_sweep(const SweepSetup& setup, std::span<const double> areas);

/// Pulse area of the coherent two-photon π rotation from adiabatic elimination of |x⟩.
double two_photon_pi_area(double sigma, double delta_x);

struct RabiExtrema {
  double area_max;
  double p_b_max;
  double area_min;
  double p_b_min;

  double ratio() const { return p_b_max / p_b_min; }
};

/**
 * First local maximum of P_b(area) and the first local minimum after it.
 *
 * Samples `samples` uniform areas on (0, area_range] and refines each extremum
 * by golden-section search. Returns nullopt when the curve has no interior
 * maximum followed by a minimum (overdamped).
 */
std::optional<RabiExtrema> first_rabi_extrema(const SweepSetup& setup, double area_range, int samples = 200);

struct FitOptions {
  double area_range = 0.0;  ///< 0: twice two_photon_pi_area
  int samples = 60;
  double ratio_rel_tol = 1e-3;
  double bracket_limit = 10.0;
  int max_iterations = 80;
};

struct FitResult {
  double gamma_i0;
  RabiExtrema extrema;
  int evaluations;
};

/**
 * Finds γ_I0 such that the first-maximum / first-minimum ratio of P_b equals
 * `target_ratio`. The ratio decreases monotonically with γ_I0, so the search
 * is a bracket expansion followed by bisection. `base.dephasing.n_p` and
 * `gamma_i0` are overridden.
 */
FitResult fit_gamma_i0(int n_p, double target_ratio, const SweepSetup& base, const FitOptions& opts = {});

struct RatioMaximum {
  bool interior = false;
  std::size_t index = 0;
  double energy = 0.0;  ///< Ω₀²σ at the maximum (golden-section refined when interior)
  double ratio = 0.0;
};

struct RatioCurve {
  SweepResult sweep;
  RatioMaximum maximum;
  std::size_t local_maxima = 0;
};

/// For each σ, P_b/(P_x - P_b) against the energy axis Ω₀²σ.
std::vector<RatioCurve> ratio_sweep(std::span<const double> sigmas, std::span<const double> energies,
                                    const SweepSetup& base);

/// Number of strict interior local maxima, skipping NaN entries.
std::size_t count_local_maxima(std::span<const double> values);

/// Evaluates `fn(i)` for i in [0, n) on up to `threads` threads; results land in index order.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn);

}  // namespace qdent

#include "qdent/detail/parallel.hpp"
