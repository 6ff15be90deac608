#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracle.hpp"
#include "qdent/config.hpp"
#include "qdent/sweeps.hpp"
#include "qdent/timebin.hpp"
#include "qdent/tomography.hpp"

using namespace qdent;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

Outcome integrator_conservation() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) { return lo * std::pow(hi / lo, u(rng)); };
  double trace_drift = 0.0, herm_drift = 0.0, min_eig = 1.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double sigma = 0.5 + 9.5 * u(rng);
    const double omega0 = 3.0 * u(rng);
    const PulseDrive d{omega0, sigma, 0.0, 10.0 * u(rng) - 5.0, 2.0 * u(rng) - 1.0};
    const DecayRates decay{log_uniform(1e-2, 10.0), log_uniform(1e-2, 10.0)};
    const int n_p = 2 * (trial % 3);
    const double cap = n_p == 0 ? 0.0 : std::min(1.0, 10.0 / std::pow(std::max(omega0, 1e-12), n_p));
    const DephasingModel deph{u(rng) < 0.2 ? 0.0 : log_uniform(1e-3, 5.0), cap * u(rng), n_p};
    const oracle::Mat rho0 = trial % 2 ? oracle::random_density(rng, 3) : oracle::to_eigen(QdDensityMatrix{}.matrix());
    const auto traj = evolve(QdDensityMatrix(oracle::from_eigen(rho0)), d, decay, deph, default_time_span(d, decay));
    const double tr0 = rho0.trace().real();
    for (const auto& s : traj.states) {
      const oracle::Mat m = oracle::to_eigen(s.matrix());
      trace_drift = std::max(trace_drift, std::abs(m.trace().real() - tr0));
      herm_drift = std::max(herm_drift, (m - m.adjoint()).cwiseAbs().maxCoeff());
      const oracle::Mat h = 0.5 * (m + m.adjoint());
      min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<oracle::Mat>(h).eigenvalues()(0));
    }
  }
  const double elapsed = seconds_since(start);
  return {trace_drift < 1e-7 && herm_drift < 1e-8 && min_eig > -1e-6 && elapsed < 60.0,
          fmt("trace drift %.2e, hermiticity drift %.2e, min eigenvalue %.2e, %.1f s", trace_drift, herm_drift, min_eig,
              elapsed)};
}

Outcome superoperator_equivalence() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double omega = 3.0 * u(rng);
    // σ far beyond the window: Ω(t) is constant to 1e-13
    const PulseDrive d{omega, 1e7, 0.0, 4.0 * u(rng) - 2.0, 2.0 * u(rng) - 1.0};
    const DecayRates decay{2.0 * u(rng), 2.0 * u(rng)};
    const DephasingModel deph{u(rng), 0.0, 0};
    const oracle::Mat rho0 = oracle::random_density(rng, 3);
    const auto traj = evolve(QdDensityMatrix(oracle::from_eigen(rho0)), d, decay, deph, {0.0, 5.0});
    const oracle::Mat gen = oracle::cascade_liouvillian(omega, d, decay, deph);
    for (int k = 0; k <= 50; ++k) {
      const double t = 0.1 * k;
      worst = std::max(worst, max_abs_diff(traj.state_at(t), oracle::from_eigen(oracle::propagate(gen, rho0, t))));
    }
  }
  return {worst < 1e-6, fmt("max deviation %.2e over 20 sets", worst)};
}

Outcome closed_form_cascade() {
  double pop_err = 0.0, emit_err = 0.0;
  for (const auto& decay : {DecayRates{0.002, 0.001}, DecayRates{0.5, 0.2}, DecayRates{1.3, 1.3 - 1e-3},
                            DecayRates{3.0, 0.7}}) {
    const PulseDrive none{0.0, 1.0, 0.0, 2.0, 0.0};
    const double tf = 20.0 / decay.gamma_x;
    const auto traj = evolve(QdDensityMatrix::pure(QdDensityMatrix::kBiexciton), none, decay, DephasingModel{0.05, 0, 0},
                             {0.0, tf});
    const double gb = decay.gamma_b, gx = decay.gamma_x;
    for (int k = 0; k <= 400; ++k) {
      const double t = tf * k / 400.0;
      const double bb = std::exp(-gb * t);
      const double xx = gb / (gx - gb) * (std::exp(-gb * t) - std::exp(-gx * t));
      const auto p = traj.populations_at(t);
      pop_err = std::max({pop_err, std::abs(p[2] - bb), std::abs(p[1] - xx), std::abs(p[0] - (1.0 - bb - xx))});
    }
    const auto em = emission_probabilities(traj, decay, tf);
    emit_err = std::max({emit_err, std::abs(em.p_x - 1.0), std::abs(em.p_b - 1.0)});
  }
  return {pop_err < 1e-6 && emit_err < 1e-5, fmt("population error %.2e, emission error %.2e", pop_err, emit_err)};
}

Outcome coherent_rabi() {
  SweepSetup s;
  s.dephasing = {};
  s.tol = 1e-9;
  const auto ex = first_rabi_extrema(s, 2.0 * two_photon_pi_area(s.sigma, s.delta_x));
  if (!ex) return {false, "no Rabi cycle found"};
  return {ex->p_b_max > 0.95 && ex->p_b_min < 0.05,
          fmt("first maximum %.4f at area %.3f, first minimum %.2e at area %.3f", ex->p_b_max, ex->area_max,
              ex->p_b_min, ex->area_min)};
}

Outcome dephasing_fit_regime() {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig c = parse_config("{}");
  const double range = 2.0 * two_photon_pi_area(c.pulse.sigma, c.dot.delta_x);
  double worst = 0.0;
  double ratio2 = 0.0, ratio4 = 0.0;
  for (const auto& planted : {RunConfig::Dephasing{0.01, 0.0349, 2}, RunConfig::Dephasing{0.01, 0.0219, 4}}) {
    const SweepSetup s = c.sweep_setup(planted);
    const auto ex = first_rabi_extrema(s, range);
    if (!ex) return {false, "planted model has no Rabi cycle"};
    (planted.n_p == 2 ? ratio2 : ratio4) = ex->ratio();
    const auto fit = fit_gamma_i0(planted.n_p, ex->ratio(), s);
    worst = std::max(worst, std::abs(fit.gamma_i0 / *planted.gamma_i0 - 1.0));
  }
  const double spread = std::abs(ratio2 - ratio4) / std::min(ratio2, ratio4);
  const double elapsed = seconds_since(start);
  return {worst < 0.02 && spread < 0.10 && elapsed < 300.0,
          fmt("round-trip error %.2e, ratios %.3f (n_p=2) vs %.3f (n_p=4), spread %.1f%%, %.1f s", worst, ratio2,
              ratio4, 100.0 * spread, elapsed)};
}

Outcome ratio_regime() {
  const RunConfig c = parse_config("{}");
  const SweepSetup s = c.sweep_setup(c.dephasing);
  const auto energies = c.ratio.energies.values();
  const std::vector<double> sigmas{4.0, 12.0};
  const auto curves = ratio_sweep(sigmas, energies, s);
  const auto& short_pulse = curves[0].maximum;
  const auto& long_pulse = curves[1].maximum;
  const bool interior = short_pulse.interior && long_pulse.interior;
  const bool ordered = long_pulse.ratio > short_pulse.ratio;
  const bool magnitude = long_pulse.ratio >= 4.0 && long_pulse.ratio <= 16.0;
  return {interior && ordered && magnitude,
          fmt("gamma_i0 %.4f: max %.2f at E=%.2f (sigma 4), max %.2f at E=%.2f (sigma 12)", *c.dephasing.gamma_i0,
              short_pulse.ratio, short_pulse.energy, long_pulse.ratio, long_pulse.energy)};
}

Outcome entanglement_metrics() {
  std::mt19937_64 rng(707);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const oracle::Vec k = oracle::random_ket(rng, 4);
    const double expected = 2.0 * std::abs(k(0) * k(3) - k(1) * k(2));
    worst = std::max(worst, std::abs(concurrence(TwoQubitState(oracle::from_eigen(k * k.adjoint()))) - expected));
  }
  const double p = 0.84;
  const oracle::Mat w = p * oracle::to_eigen(ideal_state(0.0).matrix()) + (1.0 - p) * oracle::Mat::Identity(4, 4) / 4.0;
  const TwoQubitState werner(oracle::from_eigen(w));
  const double c_err = std::abs(concurrence(werner) - (3.0 * p - 1.0) / 2.0);
  const double f_err = std::abs(fidelity_bell(werner).fidelity - (1.0 + 3.0 * p) / 4.0);
  return {worst < 1e-10 && c_err < 1e-10 && f_err < 1e-10,
          fmt("pure-state error %.2e, Werner C error %.2e, F error %.2e", worst, c_err, f_err)};
}

TwoQubitState calibrated_state() {
  const double v = v_coh_for_fidelity(0.88, 0.06);
  return model_state({std::numbers::pi, 0.06, v, 4.0});
}

Outcome table_consistency() {
  const auto rho = calibrated_state();
  const double c = concurrence(rho);
  const double coh = std::abs(coherence_metric(rho).value);
  const double f = fidelity_bell(rho).fidelity;
  return {std::abs(c - 0.78) <= 0.06 && std::abs(coh - 0.39) <= 0.03 && std::abs(f - 0.88) < 1e-12,
          fmt("F %.4f, v_coh %.4f, C %.4f, |coherence| %.4f", f, v_coh_for_fidelity(0.88, 0.06), c, coh)};
}

double stddev(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= x.size();
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / (x.size() - 1));
}

Outcome tomography_round_trip() {
  const auto truth = calibrated_state();
  const auto settings = standard_settings();
  double worst = 1.0;
  std::vector<double> high, low;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = reconstruct_mle(simulate_counts(truth, settings, 1e5, seed));
    worst = std::min(worst, state_fidelity(r.state, truth));
    high.push_back(fidelity_bell(r.state).fidelity);
    low.push_back(fidelity_bell(reconstruct_mle(simulate_counts(truth, settings, 1e3, 100 + seed)).state).fidelity);
  }
  // order 0.03: within a factor of three
  const double scatter = stddev(low);
  return {worst > 0.99 && scatter >= 0.01 && scatter <= 0.1,
          fmt("worst state fidelity %.5f at n_mean 1e5 (Bell fidelity scatter %.4f); Bell fidelity scatter %.4f at "
              "n_mean 1e3",
              worst, stddev(high), scatter)};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome cli_determinism() {
  std::random_device rd;
  const fs::path root = fs::temp_directory_path() / ("qdent_acceptance_" + std::to_string(rd()));
  fs::create_directories(root);
  const std::vector<std::pair<std::string, std::string>> runs{
      {"evolve", "{}"},
      {"rabi", R"({"rabi": {"areas": {"start": 0, "stop": 12, "count": 16}}})"},
      {"ratio", R"({"ratio": {"sigmas": [4], "energies": {"start": 0.5, "stop": 8, "count": 8}}})"},
      {"fit-dephasing", R"({"fit": {"target_ratio": 5, "samples": 30}})"},
      {"entangle", R"({"tomography": {"batch": 4, "n_mean": 5000}})"},
  };
  std::size_t files = 0;
  std::string mismatch;
  for (const auto& [cmd, config] : runs) {
    const fs::path cfg = root / (cmd + ".json");
    std::ofstream(cfg) << config;
    for (const char* tag : {"a", "b"}) {
      const std::string line = std::string(QDENT_CLI_PATH) + " " + cmd + " --config " + cfg.string() + " --out " +
                               (root / tag / cmd).string() + " --seed 42 > /dev/null 2>&1";
      const int status = std::system(line.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        fs::remove_all(root);
        return {false, cmd + " exited with status " + std::to_string(status)};
      }
    }
    for (const auto& e : fs::directory_iterator(root / "a" / cmd)) {
      ++files;
      const fs::path other = root / "b" / cmd / e.path().filename();
      if (!fs::exists(other) || slurp(e.path()) != slurp(other)) mismatch += " " + cmd + "/" + e.path().filename().string();
    }
  }
  fs::remove_all(root);
  return {mismatch.empty() && files > 0,
          mismatch.empty() ? fmt("%zu output files identical across reruns", files) : "differing:" + mismatch};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"integrator conservation", integrator_conservation},
      {"superoperator oracle equivalence", superoperator_equivalence},
      {"closed-form cascade", closed_form_cascade},
      {"coherent two-photon Rabi", coherent_rabi},
      {"dephasing fit round trip and model agreement", dephasing_fit_regime},
      {"ratio maximum", ratio_regime},
      {"entanglement metric oracles", entanglement_metrics},
      {"calibrated model state", table_consistency},
      {"tomography round trip", tomography_round_trip},
      {"CLI determinism", cli_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
