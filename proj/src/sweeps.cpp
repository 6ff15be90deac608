#include "qdent/sweeps.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace qdent {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_increasing(std::span<const double> xs, const char* what) {
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) {
      std::ostringstream os;
      os << what << " must be strictly increasing (entry " << i << ")";
      throw InvalidArgument(os.str());
    }
}

// Fills one sweep point; integration failures are recorded, not thrown.
void fill_point(SweepResult& out, std::size_t i, const SweepSetup& setup, double omega0) {
  out.omega0[i] = omega0;
  try {
    const auto e = pulse_emission(setup, omega0);
    out.p_b[i] = e.p_b;
    out.p_x[i] = e.p_x;
    const double direct = e.p_x - e.p_b;
    out.saturated[i] = direct < kDirectExcitonFloor;
    out.ratio[i] = e.p_b / std::max(direct, kDirectExcitonFloor);
  } catch (const std::exception& ex) {
    out.failure[i] = ex.what();
    out.p_b[i] = out.p_x[i] = out.ratio[i] = kNaN;
  }
}

SweepResult make_result(const SweepSetup& setup, Abscissa kind, std::span<const double> abscissa) {
  SweepResult r;
  r.abscissa_kind = kind;
  r.setup = setup;
  r.abscissa.assign(abscissa.begin(), abscissa.end());
  const std::size_t n = abscissa.size();
  r.omega0.assign(n, 0.0);
  r.p_b.assign(n, 0.0);
  r.p_x.assign(n, 0.0);
  r.ratio.assign(n, 0.0);
  r.saturated.assign(n, 0);
  r.failure.assign(n, std::string{});
  return r;
}

double p_b_at_area(const SweepSetup& setup, double area) {
  return pulse_emission(setup, omega0_for_area(area, setup.sigma)).p_b;
}

// Golden-section search for an extremum of f on [a, b]; sign = +1 maximises, -1 minimises.
template <class F>
std::pair<double, double> golden_section(F&& f, double a, double b, double sign, double x_tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = sign * f(c), fd = sign * f(d);
  while (b - a > x_tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = sign * f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = sign * f(d);
    }
  }
  return fc > fd ? std::pair{c, sign * fc} : std::pair{d, sign * fd};
}

}  // namespace

bool SweepResult::any_failed() const {
  for (const auto& f : failure)
    if (!f.empty()) return true;
  return false;
}

bool SweepResult::px_above_one() const {
  for (double p : p_x)
    if (p > 1.0) return true;
  return false;
}

EmissionProbabilities pulse_emission(const SweepSetup& setup, double omega0) {
  const PulseDrive drive = setup.drive(omega0);
  const auto traj = evolve(QdDensityMatrix{}, drive, setup.decay, setup.dephasing,
                           default_time_span(drive, setup.decay), {setup.tol});
  return emission_probabilities(traj, setup.decay, traj.t_end());
}

SweepResult rabi_sweep(const SweepSetup& setup, std::span<const double> areas) {
  if (areas.empty()) throw InvalidArgument("rabi_sweep: empty area grid");
  require_increasing(areas, "rabi_sweep: areas");
  for (double a : areas)
    if (a < 0.0) throw InvalidArgument("rabi_sweep: areas must be >= 0");
  SweepResult r = make_result(setup, Abscissa::kPulseArea, areas);
  parallel_for(areas.size(), setup.threads,
               [&](std::size_t i) { fill_point(r, i, setup, omega0_for_area(areas[i], setup.sigma)); });
  return r;
}

double two_photon_pi_area(double sigma, double delta_x) {
  // Effective g-b Rabi frequency Ω²/(2Δx); ∫Ω² dt = Ω₀² σ sqrt(π / (2 ln2)).
  const double omega0_sq = 2.0 * std::numbers::pi * std::abs(delta_x) /
                           (sigma * std::sqrt(std::numbers::pi / (2.0 * std::numbers::ln2)));
  return std::sqrt(omega0_sq) * sigma * std::sqrt(std::numbers::pi / std::numbers::ln2);
}

std::optional<RabiExtrema> first_rabi_extrema(const SweepSetup& setup, double area_range, int samples) {
  if (samples < 5) throw InvalidArgument("first_rabi_extrema: need at least 5 samples");
  if (!(area_range > 0.0)) throw InvalidArgument("first_rabi_extrema: area range must be > 0");
  std::vector<double> areas(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) areas[i] = area_range * (i + 1) / samples;
  std::vector<double> pb(areas.size());
  parallel_for(areas.size(), setup.threads, [&](std::size_t i) { pb[i] = p_b_at_area(setup, areas[i]); });

  std::size_t i_max = 0, i_min = 0;
  for (std::size_t i = 1; i + 1 < pb.size(); ++i)
    if (pb[i] > pb[i - 1] && pb[i] >= pb[i + 1]) {
      i_max = i;
      break;
    }
  if (i_max == 0) return std::nullopt;
  for (std::size_t i = i_max + 1; i + 1 < pb.size(); ++i)
    if (pb[i] < pb[i - 1] && pb[i] <= pb[i + 1]) {
      i_min = i;
      break;
    }
  if (i_min == 0) return std::nullopt;

  const double x_tol = 1e-4 * area_range;
  auto f = [&](double a) { return p_b_at_area(setup, a); };
  const auto [a_max, p_max] = golden_section(f, areas[i_max - 1], areas[i_max + 1], +1.0, x_tol);
  const auto [a_min, p_min] = golden_section(f, areas[i_min - 1], areas[i_min + 1], -1.0, x_tol);
  return RabiExtrema{a_max, std::max(p_max, pb[i_max]), a_min, std::min(p_min, pb[i_min])};
}

FitResult fit_gamma_i0(int n_p, double target_ratio, const SweepSetup& base, const FitOptions& opts) {
  if (!(target_ratio > 1.0)) throw InvalidArgument("fit_gamma_i0: target_ratio must be > 1");
  if (n_p < 0 || n_p > 4) throw InvalidArgument("fit_gamma_i0: n_p must be in {0, ..., 4}");
  const double range = opts.area_range > 0.0 ? opts.area_range
                       : base.delta_x != 0.0 ? 2.0 * two_photon_pi_area(base.sigma, base.delta_x)
                                             : 4.0 * std::numbers::pi;
  int evaluations = 0;
  auto extrema_at = [&](double gamma) {
    SweepSetup s = base;
    s.dephasing.n_p = n_p;
    s.dephasing.gamma_i0 = gamma;
    ++evaluations;
    return first_rabi_extrema(s, range, opts.samples);
  };
  // An overdamped curve counts as "more damped than any target".
  auto ratio_of = [](const std::optional<RabiExtrema>& e) { return e ? e->ratio() : 1.0; };
  auto close_enough = [&](double r) { return std::abs(r / target_ratio - 1.0) <= opts.ratio_rel_tol; };

  const auto at_zero = extrema_at(0.0);
  if (!at_zero) throw NumericalError("fit_gamma_i0: no interior extrema found even without intensity dephasing");
  if (ratio_of(at_zero) < target_ratio) {
    std::ostringstream os;
    os << "fit_gamma_i0: target ratio " << target_ratio << " unreachable; undamped ratio is only "
       << at_zero->ratio();
    throw NumericalError(os.str());
  }
  if (close_enough(at_zero->ratio())) return {0.0, *at_zero, evaluations};

  double lo = 0.0, hi = 1e-3;
  auto e_hi = extrema_at(hi);
  while (ratio_of(e_hi) > target_ratio) {
    if (close_enough(ratio_of(e_hi))) return {hi, *e_hi, evaluations};
    lo = hi;
    hi *= 4.0;
    if (hi > opts.bracket_limit) {
      std::ostringstream os;
      os << "fit_gamma_i0: target ratio " << target_ratio << " not reached for gamma_i0 in [0, "
         << opts.bracket_limit << "]";
      throw NumericalError(os.str());
    }
    e_hi = extrema_at(hi);
  }

  std::optional<RabiExtrema> best = e_hi;
  double best_gamma = hi;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const double mid = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi;
    const auto e = extrema_at(mid);
    const double r = ratio_of(e);
    if (e && (!best || std::abs(r / target_ratio - 1.0) < std::abs(best->ratio() / target_ratio - 1.0))) {
      best = e;
      best_gamma = mid;
    }
    if (e && close_enough(r)) return {mid, *e, evaluations};
    if (r > target_ratio)
      lo = mid;
    else
      hi = mid;
    if ((hi - lo) <= 1e-9 * hi) break;
  }
  if (!best) throw NumericalError("fit_gamma_i0: no interior extrema found (overdamped)");
  std::ostringstream os;
  os << "fit_gamma_i0: bisection did not reach the ratio tolerance (best gamma_i0 " << best_gamma << ", ratio "
     << best->ratio() << ")";
  throw NumericalError(os.str());
}

std::size_t count_local_maxima(std::span<const double> values) {
  std::vector<double> v;
  for (double x : values)
    if (!std::isnan(x)) v.push_back(x);
  std::size_t count = 0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i)
    if (v[i] > v[i - 1] && v[i] >= v[i + 1]) ++count;
  return count;
}

std::vector<RatioCurve> ratio_sweep(std::span<const double> sigmas, std::span<const double> energies,
                                    const SweepSetup& base) {
  if (sigmas.empty()) throw InvalidArgument("ratio_sweep: no pulse widths given");
  if (energies.empty()) throw InvalidArgument("ratio_sweep: empty energy grid");
  require_increasing(energies, "ratio_sweep: energies");
  std::vector<RatioCurve> curves;
  for (double sigma : sigmas) {
    if (!(sigma > 0.0)) throw InvalidArgument("ratio_sweep: sigma must be > 0");
    SweepSetup setup = base;
    setup.sigma = sigma;
    RatioCurve curve;
    curve.sweep = make_result(setup, Abscissa::kPulseEnergy, energies);
    auto& r = curve.sweep;
    parallel_for(energies.size(), setup.threads,
                 [&](std::size_t i) { fill_point(r, i, setup, std::sqrt(std::max(energies[i], 0.0) / sigma)); });

    std::vector<double> usable(r.size(), kNaN);
    for (std::size_t i = 0; i < r.size(); ++i)
      if (!r.failed(i) && !r.saturated[i]) usable[i] = r.ratio[i];
    curve.local_maxima = count_local_maxima(usable);

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < r.size(); ++i)
      if (!std::isnan(usable[i]) && (!best || usable[i] > usable[*best])) best = i;
    if (best) {
      auto& m = curve.maximum;
      m.index = *best;
      m.energy = energies[*best];
      m.ratio = usable[*best];
      m.interior = *best > 0 && *best + 1 < r.size() && !std::isnan(usable[*best - 1]) &&
                   !std::isnan(usable[*best + 1]);
      if (m.interior) {
        auto f = [&](double energy) {
          const auto e = pulse_emission(setup, std::sqrt(energy / sigma));
          return e.p_b / std::max(e.p_x - e.p_b, kDirectExcitonFloor);
        };
        const double lo = energies[*best - 1], hi = energies[*best + 1];
        const auto [e_opt, r_opt] = golden_section(f, lo, hi, +1.0, 1e-3 * (hi - lo));
        if (r_opt > m.ratio) {
          m.energy = e_opt;
          m.ratio = r_opt;
        }
      }
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

}  // namespace qdent
