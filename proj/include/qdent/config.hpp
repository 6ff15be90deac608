#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdent/dynamics.hpp"
#include "qdent/sweeps.hpp"

namespace qdent {

/// Bad configuration; `key` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct Grid {
  double start = 0.0;
  double stop = 1.0;
  int count = 2;

  /// count evenly spaced values, both ends included
  std::vector<double> values() const;
};

/**
 * Resolved run configuration. Parsed from JSON; every section and key is
 * optional (defaults below) but unknown keys are fatal.
 */
struct RunConfig {
  struct Dot {
    double gamma_x = 0.001;
    double gamma_b = 0.002;
    double delta_x = 2.0;
    double delta_b = 0.0;
  } dot;

  struct Pulse {
    double sigma = 8.0;
    double t0 = 0.0;
    std::optional<double> area;    ///< default: the two-photon π area
    std::optional<double> omega0;  ///< mutually exclusive with area
  } pulse;

  struct Dephasing {
    double gamma_bg = 0.01;
    std::optional<double> gamma_i0 = 0.0349;  ///< null: ratio fits it from the fit section
    int n_p = 2;
  } dephasing;

  /// Models compared by `rabi`; gamma_bg falls back to dephasing.gamma_bg.
  std::vector<Dephasing> dephasing_models;

  struct Integrator {
    double tolerance = 1e-9;
    double sweep_tolerance = 1e-7;
  } integrator;

  struct Rabi {
    std::optional<Grid> areas;  ///< default: 200 points on [0, 2 × π area]
    bool round_trip_fit = false;
  } rabi;

  struct Ratio {
    std::vector<double> sigmas{4.0, 12.0};
    Grid energies{0.25, 12.0, 48};
  } ratio;

  struct Fit {
    int n_p = 2;
    std::optional<double> target_ratio;
    /// Target taken from a reference model run when target_ratio is absent.
    std::optional<int> reference_n_p;
    std::optional<double> reference_gamma_i0;
    int samples = 60;
  } fit;

  struct TimeBin {
    double phi_p = 3.141592653589793;
    double epsilon = 0.06;
    double pairing_weight = 4.0;
    std::optional<double> v_coh;
    std::optional<double> target_fidelity;
    bool v_coh_from_dynamics = false;
  } timebin;

  struct Tomography {
    double n_mean = 1e5;
    std::uint64_t seed = 1;
    int batch = 20;
  } tomography;

  unsigned threads = 1;

  DecayRates decay() const { return {dot.gamma_b, dot.gamma_x}; }
  PulseDrive drive() const;
  SweepSetup sweep_setup(const Dephasing& model) const;
  DephasingModel dephasing_model(const Dephasing& model) const;
  std::vector<Dephasing> resolved_dephasing_models() const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
/// Complete resolved configuration as compact JSON with sorted keys.
std::string config_to_json(const RunConfig& config);

}  // namespace qdent
