#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracle.hpp"
#include "qdent/timebin.hpp"
#include "qdent/tomography.hpp"

using namespace qdent;

namespace {

constexpr double pi = std::numbers::pi;

oracle::Mat projector(char kind, double phase = 0.0) {
  oracle::Vec v = oracle::Vec::Zero(2);
  if (kind == 'E') v(0) = 1.0;
  if (kind == 'L') v(1) = 1.0;
  if (kind == 'S') {
    v(0) = 1.0 / std::sqrt(2.0);
    v(1) = std::polar(1.0 / std::sqrt(2.0), phase);
  }
  return v * v.adjoint();
}

// {E, L, S(0), S(π/2)} ⊗ {E, L, S(0), S(π/2)}, first photon major.
std::vector<oracle::Mat> oracle_projectors() {
  const std::vector<oracle::Mat> single{projector('E'), projector('L'), projector('S', 0.0), projector('S', pi / 2)};
  std::vector<oracle::Mat> out;
  for (const auto& a : single)
    for (const auto& b : single) out.push_back(Eigen::kroneckerProduct(a, b).eval());
  return out;
}

TwoQubitState random_state(std::mt19937_64& rng) { return TwoQubitState(oracle::from_eigen(oracle::random_density(rng, 4))); }

TwoQubitState random_pure(std::mt19937_64& rng) {
  const oracle::Vec k = oracle::random_ket(rng, 4);
  return TwoQubitState(oracle::from_eigen(k * k.adjoint()));
}

double min_eig(const ComplexMatrix& m) {
  return Eigen::SelfAdjointEigenSolver<oracle::Mat>(oracle::to_eigen(m)).eigenvalues()(0);
}

TwoQubitState reference_state() { return model_state({0.0, 0.06, 1.0, 4.0}); }

}  // namespace

TEST_CASE("projectors and labels") {
  CHECK(Projector::early().label() == "E");
  CHECK(Projector::parse("L") == Projector::late());
  const auto s = Projector::parse(Projector::superposition(pi / 2).label());
  CHECK(s.kind == Projector::Kind::kSuperposition);
  CHECK(s.phase == doctest::Approx(pi / 2).epsilon(1e-15));
  CHECK_THROWS_AS(Projector::parse("X"), InvalidArgument);
  CHECK_THROWS_AS(Projector::parse("S()"), InvalidArgument);

  const auto e = oracle::to_eigen(Projector::early().matrix());
  const auto l = oracle::to_eigen(Projector::late().matrix());
  const auto s0 = oracle::to_eigen(Projector::superposition(0.0).matrix());
  CHECK(std::abs((e * l).trace()) < 1e-15);
  CHECK(std::abs((s0 * e).trace() - 0.5) < 1e-15);
  CHECK((s0 * s0 - s0).norm() < 1e-15);
}

TEST_CASE("standard settings match the product projectors") {
  const auto settings = standard_settings();
  REQUIRE(settings.size() == 16);
  const auto expected = oracle_projectors();
  for (std::size_t k = 0; k < 16; ++k)
    CHECK((oracle::to_eigen(settings[k].joint()) - expected[k]).norm() < 1e-15);
  CHECK(gram_rank(settings) == 16);

  const std::vector<MeasurementSetting> time_only(settings.begin(), settings.begin() + 2);
  CHECK(gram_rank(time_only) == 2);
}

TEST_CASE("design matrix reproduces tr(rho P)") {
  const auto settings = standard_settings();
  const auto a = design_matrix(settings);
  REQUIRE(a.size() == 16 * 16);
  std::mt19937_64 rng(41);
  const auto rho = oracle::random_density(rng, 4);
  std::vector<double> x;
  for (int i = 0; i < 4; ++i) x.push_back(rho(i, i).real());
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      x.push_back(rho(i, j).real());
      x.push_back(rho(i, j).imag());
    }
  const auto projectors = oracle_projectors();
  for (std::size_t k = 0; k < 16; ++k) {
    double p = 0.0;
    for (std::size_t j = 0; j < 16; ++j) p += a[k * 16 + j] * x[j];
    CHECK(p == doctest::Approx((rho * projectors[k]).trace().real()).epsilon(1e-13));
  }
}

TEST_CASE("expected counts") {
  std::mt19937_64 rng(17);
  const auto settings = standard_settings();
  const auto projectors = oracle_projectors();
  for (int trial = 0; trial < 10; ++trial) {
    const auto rho = random_state(rng);
    const auto counts = expected_counts(rho, settings, 1234.5);
    for (std::size_t k = 0; k < 16; ++k)
      CHECK(counts[k] == doctest::Approx(1234.5 * (oracle::to_eigen(rho.matrix()) * projectors[k]).trace().real())
                             .epsilon(1e-12));
  }
  CHECK_THROWS_AS(expected_dataset(TwoQubitState{}, settings, 0.0), InvalidArgument);
}

TEST_CASE("simulated counts are deterministic per seed and Poisson-distributed") {
  const auto rho = reference_state();
  const auto settings = standard_settings();
  const auto a = simulate_counts(rho, settings, 500.0, 9);
  const auto b = simulate_counts(rho, settings, 500.0, 9);
  const auto c = simulate_counts(rho, settings, 500.0, 10);
  CHECK(a.counts == b.counts);
  CHECK(a.counts != c.counts);
  for (double n : a.counts) CHECK(n == std::floor(n));

  // mean and variance of the first setting over many seeds
  const double mu = expected_counts(rho, settings, 500.0)[0];
  double sum = 0.0, sum2 = 0.0;
  const int draws = 4000;
  for (int s = 0; s < draws; ++s) {
    const double n = simulate_counts(rho, settings, 500.0, 1000 + s).counts[0];
    sum += n;
    sum2 += n * n;
  }
  const double mean = sum / draws, var = sum2 / draws - mean * mean;
  CHECK(std::abs(mean - mu) < 5.0 * std::sqrt(mu / draws));
  CHECK(var == doctest::Approx(mu).epsilon(0.1));
}

TEST_CASE("linear inversion of noiseless data is exact") {
  std::mt19937_64 rng(23);
  const auto settings = standard_settings();
  for (int trial = 0; trial < 50; ++trial) {
    const auto rho = trial % 2 ? random_state(rng) : random_pure(rng);
    const auto r = reconstruct_linear(expected_dataset(rho, settings, 1e4));
    CHECK(max_abs_diff(r.state.matrix(), rho.matrix()) < 1e-10);
    CHECK(r.n_hat == doctest::Approx(1e4).epsilon(1e-12));
  }
  const auto r = reconstruct_linear(expected_dataset(reference_state(), settings, 1e4));
  CHECK(r.physical);
  CHECK(r.min_eigenvalue == doctest::Approx(min_eig(reference_state().matrix())).epsilon(1e-10));
}

TEST_CASE("project_to_physical") {
  ComplexMatrix m = ComplexMatrix::diagonal(std::vector<double>{0.7, 0.5, -0.1, -0.1});
  const auto p = project_to_physical(m);
  CHECK(min_eig(p.matrix()) >= -1e-15);
  CHECK(trace(p.matrix()).real() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(max_abs_diff(project_to_physical(reference_state().matrix()).matrix(), reference_state().matrix()) < 1e-14);
}

TEST_CASE("MLE of noiseless data recovers the state") {
  const auto settings = standard_settings();
  const auto ideal = ideal_state(0.0);
  const auto r = reconstruct_mle(expected_dataset(ideal, settings, 1e5));
  CHECK(r.converged);
  CHECK_FALSE(r.degenerate);
  CHECK(state_fidelity(r.state, ideal) > 1.0 - 1e-8);

  const auto mixed = reference_state();
  const auto m = reconstruct_mle(expected_dataset(mixed, settings, 1e5));
  CHECK(max_abs_diff(m.state.matrix(), mixed.matrix()) < 1e-5);
}

TEST_CASE("MLE output is always a density matrix") {
  const auto settings = standard_settings();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    TomographyDataset data;
    data.settings = settings;
    data.n_mean = 100.0;
    data.counts.resize(16);
    // adversarial: arbitrary, mostly non-physical count patterns
    for (auto& c : data.counts) c = std::floor(200.0 * u(rng) * u(rng));
    const auto r = reconstruct_mle(data);
    CHECK(min_eig(r.state.matrix()) >= -1e-12);
    CHECK(trace(r.state.matrix()).real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.state.matrix().hermiticity_error() < 1e-12);
    CHECK(r.log_likelihood >= r.initial_log_likelihood - 1e-9 * std::abs(r.initial_log_likelihood));
  }
}

TEST_CASE("MLE never loses likelihood against the linear start") {
  const auto settings = standard_settings();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = simulate_counts(reference_state(), settings, 50.0, seed);
    const auto r = reconstruct_mle(data);
    CHECK(r.log_likelihood >= r.initial_log_likelihood - 1e-9 * std::abs(r.initial_log_likelihood));
  }
}

TEST_CASE("all-zero counts are flagged as degenerate") {
  TomographyDataset data;
  data.settings = standard_settings();
  data.n_mean = 10.0;
  data.counts.assign(16, 0.0);
  const auto r = reconstruct_mle(data);
  CHECK(r.degenerate);
  CHECK(max_abs_diff(r.state.matrix(), TwoQubitState{}.matrix()) < 1e-15);
}

TEST_CASE("dataset validation") {
  TomographyDataset data;
  data.settings = standard_settings();
  data.counts.assign(15, 1.0);
  CHECK_THROWS_AS(data.validate(), InvalidArgument);
  data.counts.assign(16, 1.0);
  data.counts[3] = -1.0;
  CHECK_THROWS_AS(data.validate(), InvalidArgument);
  data.counts[3] = std::nan("");
  CHECK_THROWS_AS(data.validate(), InvalidArgument);
}

TEST_CASE("MLE concurrence scatter at high counts") {
  const auto truth = reference_state();
  const double c_true = concurrence(truth);
  const auto settings = standard_settings();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = reconstruct_mle(simulate_counts(truth, settings, 1e5, seed));
    CHECK(std::abs(concurrence(r.state) - c_true) < 0.03);
    CHECK(state_fidelity(r.state, truth) > 0.99);
  }
}

TEST_CASE("reconstruction error shrinks with counts") {
  const auto truth = reference_state();
  const auto settings = standard_settings();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = reconstruct_mle(simulate_counts(truth, settings, 1e6, seed));
    worst = std::max(worst, max_abs_diff(r.state.matrix(), truth.matrix()));
  }
  CHECK(worst < 5e-3);
}

TEST_CASE("reconstruction is deterministic") {
  const auto data = simulate_counts(reference_state(), standard_settings(), 300.0, 5);
  const auto a = reconstruct_mle(data);
  const auto b = reconstruct_mle(data);
  CHECK(a.state.matrix() == b.state.matrix());
  CHECK(a.iterations == b.iterations);
}
