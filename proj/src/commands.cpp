#include "qdent/commands.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "qdent/io.hpp"
#include "qdent/timebin.hpp"
#include "qdent/tomography.hpp"

namespace qdent::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Stream : std::uint32_t { kTomographyStream = 1 };

std::vector<std::string> header(const std::string& command, const RunConfig& c) {
  return {"qdent " + command, "config " + config_to_json(c)};
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  return os;
}

void write_json(const fs::path& path, const std::string& command, const RunConfig& c, json body) {
  body["command"] = command;
  body["config"] = json::parse(config_to_json(c));
  auto os = open_output(path);
  os << body.dump(2) << '\n';
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double default_area_range(const RunConfig& c) {
  return c.rabi.areas ? c.rabi.areas->stop : 2.0 * two_photon_pi_area(c.pulse.sigma, c.dot.delta_x);
}

std::vector<double> rabi_areas(const RunConfig& c) {
  const Grid g = c.rabi.areas.value_or(Grid{0.0, default_area_range(c), 200});
  return g.values();
}

RunConfig::Dephasing require_gamma(RunConfig::Dephasing m, const std::string& key) {
  if (!m.gamma_i0) {
    if (m.n_p != 0) throw ConfigError(key + ".gamma_i0", "required when n_p > 0");
    m.gamma_i0 = 0.0;
  }
  return m;
}

json extrema_json(const std::optional<RabiExtrema>& ex) {
  if (!ex) return nullptr;
  return {{"area_max", ex->area_max},
          {"p_b_max", ex->p_b_max},
          {"area_min", ex->area_min},
          {"p_b_min", ex->p_b_min},
          {"ratio", ex->ratio()}};
}

// First local maximum of the sampled P_b and the first local minimum after it.
std::optional<RabiExtrema> sampled_extrema(const SweepResult& s) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!s.failed(i)) idx.push_back(i);
  std::optional<std::size_t> imax;
  for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
    const double p = s.p_b[idx[k]];
    if (!imax && p > s.p_b[idx[k - 1]] && p >= s.p_b[idx[k + 1]]) {
      imax = idx[k];
    } else if (imax && p < s.p_b[idx[k - 1]] && p <= s.p_b[idx[k + 1]]) {
      return RabiExtrema{s.abscissa[*imax], s.p_b[*imax], s.abscissa[idx[k]], p};
    }
  }
  return std::nullopt;
}

struct FitTarget {
  double ratio;
  std::string source;
  std::optional<RabiExtrema> reference;
};

bool has_fit_target(const RunConfig& c) {
  return c.fit.target_ratio || (c.fit.reference_n_p && c.fit.reference_gamma_i0);
}

FitTarget resolve_fit_target(const RunConfig& c) {
  if (c.fit.target_ratio) return {*c.fit.target_ratio, "target_ratio", std::nullopt};
  if (c.fit.reference_n_p.has_value() != c.fit.reference_gamma_i0.has_value())
    throw ConfigError(c.fit.reference_n_p ? "fit.reference_gamma_i0" : "fit.reference_n_p",
                      "reference_n_p and reference_gamma_i0 go together");
  if (!c.fit.reference_n_p)
    throw ConfigError("fit.target_ratio", "no fit target; set target_ratio or reference_n_p with reference_gamma_i0");
  const RunConfig::Dephasing ref{c.dephasing.gamma_bg, c.fit.reference_gamma_i0, *c.fit.reference_n_p};
  const auto ex = first_rabi_extrema(c.sweep_setup(ref), default_area_range(c), c.fit.samples);
  if (!ex) throw NumericalError("reference model shows no Rabi maximum followed by a minimum");
  return {ex->ratio(), "reference", ex};
}

FitOptions fit_options(const RunConfig& c) {
  FitOptions o;
  o.area_range = default_area_range(c);
  o.samples = c.fit.samples;
  return o;
}

json metrics_json(const TwoQubitState& s) {
  const auto f = fidelity_bell(s);
  const auto coh = coherence_metric(s);
  const auto v = visibilities(s);
  return {{"concurrence", concurrence(s)},
          {"fidelity", f.fidelity},
          {"phi_opt", f.phi_opt},
          {"coherence",
           {{"abs", std::abs(coh.value)},
            {"re", coh.value.real()},
            {"im", coh.value.imag()},
            {"row", coh.row},
            {"col", coh.col}}},
          {"visibility", {{"time", v.time}, {"energy_0", v.energy_0}, {"energy_90", v.energy_90}}}};
}

struct SeedResult {
  std::uint64_t seed = 0;
  TomographyDataset data;
  LinearReconstruction linear;
  MleReconstruction mle;
  double mle_fidelity = 0, mle_concurrence = 0, mle_coherence = 0, mle_state_fidelity = 0;
  Visibilities mle_vis{};
  double linear_fidelity = 0, linear_concurrence = 0;
};

json mean_std(const std::vector<SeedResult>& r, double SeedResult::*field) {
  double mean = 0.0;
  for (const auto& x : r) mean += x.*field;
  mean /= static_cast<double>(r.size());
  double var = 0.0;
  for (const auto& x : r) var += (x.*field - mean) * (x.*field - mean);
  const double sd = r.size() > 1 ? std::sqrt(var / static_cast<double>(r.size() - 1)) : 0.0;
  return {{"mean", mean}, {"std", sd}};
}

}  // namespace

RunConfig resolve(RunConfig config, const CommandOptions& opts) {
  if (opts.seed) config.tomography.seed = *opts.seed;
  if (opts.threads) {
    if (*opts.threads == 0) throw ConfigError("threads", "must be >= 1");
    config.threads = *opts.threads;
  }
  return config;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint32_t stream, std::uint32_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32), stream, index};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::vector<fs::path> cmd_evolve(const RunConfig& c, const fs::path& out_dir) {
  const auto drive = c.drive();
  const auto decay = c.decay();
  const auto deph = c.dephasing_model(require_gamma(c.dephasing, "dephasing"));
  const auto traj = evolve(QdDensityMatrix{}, drive, decay, deph, default_time_span(drive, decay),
                           EvolveOptions{c.integrator.tolerance, 0.0});
  fs::create_directories(out_dir);
  const fs::path path = out_dir / "trajectory.csv";
  auto os = open_output(path);
  io::write_trajectory_csv(os, traj, decay, header("evolve", c));
  return {path};
}

std::vector<fs::path> cmd_rabi(const RunConfig& c, const fs::path& out_dir) {
  const auto areas = rabi_areas(c);
  const auto models = c.resolved_dephasing_models();
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  json curves = json::array();
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto model = require_gamma(models[m], "dephasing_models[" + std::to_string(m) + "]");
    const auto setup = c.sweep_setup(model);
    const auto sweep = rabi_sweep(setup, areas);
    const fs::path path = out_dir / ("rabi_" + std::to_string(m) + "_np" + std::to_string(model.n_p) + ".csv");
    {
      auto os = open_output(path);
      auto h = header("rabi", c);
      h.push_back("model gamma_bg=" + io::format_double(model.gamma_bg) +
                  " gamma_i0=" + io::format_double(*model.gamma_i0) + " n_p=" + std::to_string(model.n_p));
      io::write_sweep_csv(os, sweep, h);
    }
    written.push_back(path);

    std::size_t failed = 0;
    for (std::size_t i = 0; i < sweep.size(); ++i) failed += sweep.failed(i);
    json entry = {{"file", path.filename().string()},
                  {"gamma_bg", model.gamma_bg},
                  {"gamma_i0", *model.gamma_i0},
                  {"n_p", model.n_p},
                  {"failed_points", failed},
                  {"p_x_above_one", sweep.px_above_one()},
                  {"sampled_extrema", extrema_json(sampled_extrema(sweep))}};
    if (c.rabi.round_trip_fit && model.n_p > 0 && *model.gamma_i0 > 0.0) {
      const auto opts = fit_options(c);
      const auto ex = first_rabi_extrema(setup, opts.area_range, opts.samples);
      if (ex) {
        const auto fit = fit_gamma_i0(model.n_p, ex->ratio(), setup, opts);
        entry["round_trip"] = {{"target_ratio", ex->ratio()},
                               {"gamma_i0", fit.gamma_i0},
                               {"relative_error", std::abs(fit.gamma_i0 / *model.gamma_i0 - 1.0)}};
      } else {
        entry["round_trip"] = nullptr;
      }
    }
    curves.push_back(entry);
  }
  const fs::path summary = out_dir / "rabi_summary.json";
  write_json(summary, "rabi", c, {{"curves", curves}});
  written.push_back(summary);
  return written;
}

std::vector<fs::path> cmd_ratio(const RunConfig& c, const fs::path& out_dir) {
  RunConfig::Dephasing model = c.dephasing;
  std::string gamma_source = "configured";
  json fit_json = nullptr;
  if (!model.gamma_i0) {
    if (!has_fit_target(c))
      throw ConfigError("dephasing.gamma_i0", "not set and no fit target configured (fit.target_ratio or reference)");
    const auto target = resolve_fit_target(c);
    const auto fit = fit_gamma_i0(model.n_p, target.ratio, c.sweep_setup(model), fit_options(c));
    model.gamma_i0 = fit.gamma_i0;
    gamma_source = "fit";
    fit_json = {{"target_ratio", target.ratio}, {"gamma_i0", fit.gamma_i0}, {"evaluations", fit.evaluations}};
  }
  const auto energies = c.ratio.energies.values();
  const auto curves = ratio_sweep(c.ratio.sigmas, energies, c.sweep_setup(model));

  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  json summary = json::array();
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const double sigma = c.ratio.sigmas[k];
    const auto& curve = curves[k];
    const fs::path path = out_dir / ("ratio_sigma" + io::format_double(sigma) + ".csv");
    {
      auto os = open_output(path);
      auto h = header("ratio", c);
      h.push_back("sigma " + io::format_double(sigma) + " gamma_i0 " + io::format_double(*model.gamma_i0));
      io::write_sweep_csv(os, curve.sweep, h);
    }
    written.push_back(path);
    std::size_t saturated = 0, failed = 0;
    for (std::size_t i = 0; i < curve.sweep.size(); ++i) {
      saturated += curve.sweep.saturated[i];
      failed += curve.sweep.failed(i);
    }
    summary.push_back({{"sigma", sigma},
                       {"file", path.filename().string()},
                       {"interior_maximum", curve.maximum.interior},
                       {"max_energy", curve.maximum.energy},
                       {"max_ratio", number_or_null(curve.maximum.ratio)},
                       {"local_maxima", curve.local_maxima},
                       {"saturated_points", saturated},
                       {"failed_points", failed}});
  }
  const fs::path path = out_dir / "ratio_summary.json";
  write_json(path, "ratio", c,
             {{"gamma_i0", *model.gamma_i0},
              {"gamma_i0_source", gamma_source},
              {"n_p", model.n_p},
              {"fit", fit_json},
              {"curves", summary}});
  written.push_back(path);
  return written;
}

std::vector<fs::path> cmd_fit_dephasing(const RunConfig& c, const fs::path& out_dir) {
  const auto target = resolve_fit_target(c);
  const RunConfig::Dephasing model{c.dephasing.gamma_bg, 0.0, c.fit.n_p};
  const auto fit = fit_gamma_i0(c.fit.n_p, target.ratio, c.sweep_setup(model), fit_options(c));
  fs::create_directories(out_dir);
  const fs::path path = out_dir / "fit_report.json";
  write_json(path, "fit-dephasing", c,
             {{"n_p", c.fit.n_p},
              {"target_ratio", target.ratio},
              {"target_source", target.source},
              {"reference_extrema", extrema_json(target.reference)},
              {"gamma_i0", fit.gamma_i0},
              {"extrema", extrema_json(fit.extrema)},
              {"evaluations", fit.evaluations}});
  return {path};
}

std::vector<fs::path> cmd_entangle(const RunConfig& c, const fs::path& out_dir) {
  const auto& tb = c.timebin;
  double v_coh = 1.0;
  std::string v_source = "default";
  if (tb.v_coh) {
    v_coh = *tb.v_coh;
    v_source = "configured";
  } else if (tb.target_fidelity) {
    v_coh = v_coh_for_fidelity(*tb.target_fidelity, tb.epsilon, tb.pairing_weight);
    v_source = "target_fidelity";
  } else if (tb.v_coh_from_dynamics) {
    const auto drive = c.drive();
    const double pulse_end = drive.t0 + 5.0 * drive.sigma;
    const auto traj = evolve(QdDensityMatrix{}, drive, c.decay(),
                             c.dephasing_model(require_gamma(c.dephasing, "dephasing")),
                             {drive.t0 - 5.0 * drive.sigma, pulse_end}, EvolveOptions{c.integrator.tolerance, 0.0});
    v_coh = excitation_coherence(traj, pulse_end);
    v_source = "dynamics";
  }
  const TimeBinModelParams params{tb.phi_p, tb.epsilon, v_coh, tb.pairing_weight};
  const auto truth = model_state(params);

  const auto settings = standard_settings();
  const auto batch = static_cast<std::size_t>(c.tomography.batch);
  std::vector<SeedResult> runs(batch);
  parallel_for(batch, c.threads, [&](std::size_t i) {
    SeedResult& r = runs[i];
    r.seed = derive_seed(c.tomography.seed, kTomographyStream, static_cast<std::uint32_t>(i));
    r.data = simulate_counts(truth, settings, c.tomography.n_mean, r.seed);
    r.linear = reconstruct_linear(r.data);
    r.mle = reconstruct_mle(r.data);
    r.mle_fidelity = fidelity_bell(r.mle.state).fidelity;
    r.mle_concurrence = concurrence(r.mle.state);
    r.mle_coherence = std::abs(coherence_metric(r.mle.state).value);
    r.mle_state_fidelity = state_fidelity(r.mle.state, truth);
    r.mle_vis = visibilities(r.mle.state);
    r.linear_fidelity = fidelity_bell(r.linear.state).fidelity;
    r.linear_concurrence = concurrence(project_to_physical(r.linear.state.matrix()));
  });

  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  const auto h = header("entangle", c);

  const fs::path seeds_path = out_dir / "entangle_seeds.csv";
  {
    auto os = open_output(seeds_path);
    io::write_header(os, h);
    os << "index,seed,mle_fidelity,mle_concurrence,mle_coherence_abs,mle_state_fidelity,mle_vis_time,"
          "mle_vis_energy_0,mle_vis_energy_90,mle_iterations,mle_converged,linear_fidelity,linear_concurrence,"
          "linear_physical,linear_min_eigenvalue\n";
    for (std::size_t i = 0; i < batch; ++i) {
      const auto& r = runs[i];
      os << i << ',' << r.seed << ',' << io::format_double(r.mle_fidelity) << ','
         << io::format_double(r.mle_concurrence) << ',' << io::format_double(r.mle_coherence) << ','
         << io::format_double(r.mle_state_fidelity) << ',' << io::format_double(r.mle_vis.time) << ','
         << io::format_double(r.mle_vis.energy_0) << ',' << io::format_double(r.mle_vis.energy_90) << ','
         << r.mle.iterations << ',' << (r.mle.converged ? 1 : 0) << ',' << io::format_double(r.linear_fidelity)
         << ',' << io::format_double(r.linear_concurrence) << ',' << (r.linear.physical ? 1 : 0) << ','
         << io::format_double(r.linear.min_eigenvalue) << '\n';
    }
  }
  written.push_back(seeds_path);

  const auto write_matrix = [&](const std::string& name, const ComplexMatrix& m) {
    const fs::path p = out_dir / name;
    auto os = open_output(p);
    io::write_density_matrix_csv(os, m, h);
    written.push_back(p);
  };
  write_matrix("rho_model.csv", truth.matrix());
  write_matrix("rho_mle_0.csv", runs.front().mle.state.matrix());
  write_matrix("rho_linear_0.csv", runs.front().linear.state.matrix());

  const fs::path data_path = out_dir / "dataset_0.txt";
  {
    auto os = open_output(data_path);
    auto dh = h;
    dh.push_back("seed " + std::to_string(runs.front().seed));
    io::write_dataset(os, runs.front().data, dh);
  }
  written.push_back(data_path);

  std::size_t unconverged = 0, unphysical = 0;
  for (const auto& r : runs) {
    unconverged += !r.mle.converged;
    unphysical += !r.linear.physical;
  }
  const fs::path report = out_dir / "entangle_report.json";
  write_json(report, "entangle", c,
             {{"v_coh", v_coh},
              {"v_coh_source", v_source},
              {"accidental_fraction", accidental_fraction(tb.epsilon, tb.pairing_weight)},
              {"model", metrics_json(truth)},
              {"batch", batch},
              {"mle",
               {{"fidelity", mean_std(runs, &SeedResult::mle_fidelity)},
                {"concurrence", mean_std(runs, &SeedResult::mle_concurrence)},
                {"coherence_abs", mean_std(runs, &SeedResult::mle_coherence)},
                {"state_fidelity", mean_std(runs, &SeedResult::mle_state_fidelity)},
                {"unconverged", unconverged}}},
              {"linear",
               {{"fidelity", mean_std(runs, &SeedResult::linear_fidelity)},
                {"concurrence_projected", mean_std(runs, &SeedResult::linear_concurrence)},
                {"unphysical", unphysical}}}});
  written.push_back(report);
  return written;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidArgument*>(&e)) return kConfigError;
  return kNumericalFailure;
}

}  // namespace qdent::cli
