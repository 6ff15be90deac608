#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracle.hpp"
#include "qdent/sweeps.hpp"

using namespace qdent;

namespace {

SweepSetup coherent_setup() {
  SweepSetup s;
  s.sigma = 5.0;
  s.delta_x = 3.0;
  s.dephasing = {};
  s.tol = 1e-8;
  return s;
}

// P_b by exponential-midpoint propagation through the pulse: ρ_bb left at the end
// plus what already decayed during the pulse.
double oracle_biexciton(const SweepSetup& s, double area) {
  const PulseDrive d = s.drive(omega0_for_area(area, s.sigma));
  const double t0 = d.t0 - 5.0 * d.sigma, t1 = d.t0 + 5.0 * d.sigma;
  const int n = 8000;
  const double dt = (t1 - t0) / n;
  oracle::Mat rho = oracle::to_eigen(QdDensityMatrix{}.matrix());
  double emitted = 0.0;
  for (int k = 0; k < n; ++k) {
    const double tm = t0 + (k + 0.5) * dt;
    const double before = rho(2, 2).real();
    rho = oracle::propagate(oracle::cascade_liouvillian(d.amplitude(tm), d, s.decay, s.dephasing), rho, dt);
    emitted += s.decay.gamma_b * 0.5 * (before + rho(2, 2).real()) * dt;
  }
  return rho(2, 2).real() + emitted;
}

}  // namespace

TEST_CASE("zero area gives no emission") {
  SweepSetup s;
  const std::vector<double> areas{0.0};
  const auto r = rabi_sweep(s, areas);
  REQUIRE(r.size() == 1);
  CHECK(r.p_b[0] == 0.0);
  CHECK(r.p_x[0] == 0.0);
  CHECK(r.saturated[0]);
  CHECK_FALSE(r.failed(0));
}

TEST_CASE("rabi_sweep argument checks") {
  SweepSetup s;
  CHECK_THROWS_AS(rabi_sweep(s, std::vector<double>{}), InvalidArgument);
  CHECK_THROWS_AS(rabi_sweep(s, std::vector<double>{1.0, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(rabi_sweep(s, std::vector<double>{-1.0, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(rabi_sweep(s, std::vector<double>{1.0, 1.0}), InvalidArgument);
}

TEST_CASE("integration failures become per-point markers") {
  SweepSetup s;
  s.tol = 1e-2;  // rejected by the integrator
  const auto r = rabi_sweep(s, std::vector<double>{1.0, 2.0});
  CHECK(r.any_failed());
  CHECK(r.failed(1));
  CHECK(std::isnan(r.p_b[0]));
  CHECK(std::isnan(r.ratio[1]));
}

TEST_CASE("coherent two-photon Rabi oscillation") {
  const auto s = coherent_setup();
  const double pi_area = two_photon_pi_area(s.sigma, s.delta_x);
  const auto ex = first_rabi_extrema(s, 2.0 * pi_area, 80);
  REQUIRE(ex.has_value());
  CHECK(ex->p_b_max > 0.95);
  CHECK(ex->p_b_min < 0.05);
  CHECK(ex->area_min > ex->area_max);
  // adiabatic-elimination estimate of the π area is only approximate
  CHECK(ex->area_max == doctest::Approx(pi_area).epsilon(0.25));

  CHECK(ex->p_b_max == doctest::Approx(oracle_biexciton(s, ex->area_max)).epsilon(1e-4));
  CHECK(ex->p_b_min == doctest::Approx(oracle_biexciton(s, ex->area_min)).scale(1.0).epsilon(1e-4));
}

TEST_CASE("sweeps are independent of the thread count") {
  SweepSetup s;
  s.dephasing = {0.01, 0.0349, 2};
  const std::vector<double> areas{3.0, 9.0, 15.0, 21.0, 27.0};
  const auto one = rabi_sweep(s, areas);
  s.threads = 3;
  const auto three = rabi_sweep(s, areas);
  CHECK(one.p_b == three.p_b);
  CHECK(one.p_x == three.p_x);
  CHECK(one.ratio == three.ratio);
}

TEST_CASE("stronger intensity dephasing never sharpens the first Rabi cycle") {
  SweepSetup s;
  s.dephasing = {0.01, 0.0, 2};
  const double range = 2.0 * two_photon_pi_area(s.sigma, s.delta_x);
  double previous = std::numeric_limits<double>::infinity();
  for (double g : {0.0, 0.005, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1}) {
    s.dephasing.gamma_i0 = g;
    const auto ex = first_rabi_extrema(s, range, 40);
    const double r = ex ? ex->ratio() : 1.0;
    CHECK(r <= previous * (1.0 + 1e-6));
    previous = r;
  }
}

TEST_CASE("fit_gamma_i0 limits and errors") {
  SweepSetup s;
  s.dephasing = {0.01, 0.0, 2};
  const double range = 2.0 * two_photon_pi_area(s.sigma, s.delta_x);
  const auto undamped = first_rabi_extrema(s, range, 40);
  REQUIRE(undamped.has_value());

  FitOptions opts;
  opts.samples = 40;
  const auto near_undamped = fit_gamma_i0(2, undamped->ratio() * 0.999, s, opts);
  CHECK(near_undamped.gamma_i0 < 1e-3);
  const auto weaker = fit_gamma_i0(2, undamped->ratio() * 0.9, s, opts);
  CHECK(weaker.gamma_i0 > near_undamped.gamma_i0);

  CHECK_THROWS_AS(fit_gamma_i0(2, undamped->ratio() * 2.0, s, opts), NumericalError);
  CHECK_THROWS_AS(fit_gamma_i0(2, 0.9, s, opts), InvalidArgument);
  CHECK_THROWS_AS(fit_gamma_i0(5, 3.0, s, opts), InvalidArgument);
}

TEST_CASE("ratio sweep basics") {
  SweepSetup s;
  s.dephasing = {0.01, 0.0349, 2};
  const std::vector<double> sigmas{6.0};
  const std::vector<double> energies{0.0, 1.0, 3.0, 5.0, 8.0, 12.0};
  const auto curves = ratio_sweep(sigmas, energies, s);
  REQUIRE(curves.size() == 1);
  const auto& c = curves[0];
  CHECK(c.sweep.abscissa_kind == Abscissa::kPulseEnergy);
  CHECK(c.sweep.abscissa == energies);
  CHECK(c.sweep.setup.sigma == 6.0);
  CHECK(c.sweep.saturated[0]);
  CHECK(c.sweep.ratio[0] == 0.0);
  CHECK(c.sweep.omega0[3] == doctest::Approx(std::sqrt(5.0 / 6.0)));
  for (std::size_t i = 1; i < energies.size(); ++i) {
    CHECK_FALSE(c.sweep.saturated[i]);
    CHECK(c.sweep.ratio[i] ==
          doctest::Approx(c.sweep.p_b[i] / (c.sweep.p_x[i] - c.sweep.p_b[i])).epsilon(1e-12));
  }
  CHECK(c.maximum.ratio >= c.sweep.ratio[c.maximum.index]);

  CHECK_THROWS_AS(ratio_sweep(std::vector<double>{}, energies, s), InvalidArgument);
  CHECK_THROWS_AS(ratio_sweep(std::vector<double>{-1.0}, energies, s), InvalidArgument);
}

TEST_CASE("count_local_maxima") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(count_local_maxima(std::vector<double>{1, 2, 1}) == 1);
  CHECK(count_local_maxima(std::vector<double>{1, 2, 3}) == 0);
  CHECK(count_local_maxima(std::vector<double>{1, 3, 2, 4, 1}) == 2);
  CHECK(count_local_maxima(std::vector<double>{1, nan, 3, nan, 2}) == 1);
}
