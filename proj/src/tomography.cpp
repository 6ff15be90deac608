#include "qdent/tomography.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace qdent {

namespace {

constexpr std::size_t kDim = 4;
constexpr std::size_t kParams = 16;
// Lower-triangle positions in parameter order.
constexpr std::array<std::pair<std::size_t, std::size_t>, 6> kOffDiagonal{
    {{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}}};

using Params = std::array<double, kParams>;

bool is_time_basis(const MeasurementSetting& s) {
  return s.xx.kind != Projector::Kind::kSuperposition && s.x.kind != Projector::Kind::kSuperposition;
}

ComplexMatrix params_to_t(const Params& p) {
  ComplexMatrix t(kDim);
  for (std::size_t i = 0; i < kDim; ++i) t(i, i) = p[i];
  for (std::size_t m = 0; m < kOffDiagonal.size(); ++m) {
    const auto [i, j] = kOffDiagonal[m];
    t(i, j) = Complex{p[4 + 2 * m], p[5 + 2 * m]};
  }
  return t;
}

// Cholesky ρ = L L† for Hermitian positive definite ρ.
ComplexMatrix cholesky(const ComplexMatrix& rho) {
  const std::size_t n = rho.dim();
  ComplexMatrix l(n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = rho(j, j).real();
    for (std::size_t k = 0; k < j; ++k) d -= std::norm(l(j, k));
    if (!(d > 0.0)) throw NumericalError("cholesky: matrix is not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      Complex s = rho(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = s / l(j, j).real();
    }
  }
  return l;
}

// Lower-triangular T with T†T = ρ: Cholesky of the index-reversed matrix.
Params t_params_for(const ComplexMatrix& rho) {
  ComplexMatrix reversed(kDim);
  for (std::size_t i = 0; i < kDim; ++i)
    for (std::size_t j = 0; j < kDim; ++j) reversed(i, j) = rho(kDim - 1 - i, kDim - 1 - j);
  const ComplexMatrix l = cholesky(reversed);
  // T = J L† J
  ComplexMatrix t(kDim);
  for (std::size_t i = 0; i < kDim; ++i)
    for (std::size_t j = 0; j < kDim; ++j) t(i, j) = std::conj(l(kDim - 1 - j, kDim - 1 - i));
  Params p{};
  for (std::size_t i = 0; i < kDim; ++i) p[i] = t(i, i).real();
  for (std::size_t m = 0; m < kOffDiagonal.size(); ++m) {
    const auto [i, j] = kOffDiagonal[m];
    p[4 + 2 * m] = t(i, j).real();
    p[5 + 2 * m] = t(i, j).imag();
  }
  return p;
}

struct Objective {
  const TomographyDataset& data;
  std::vector<ComplexMatrix> projectors;
  double scale;

  Objective(const TomographyDataset& d, double s) : data(d), scale(s) {
    for (const auto& setting : d.settings) projectors.push_back(setting.joint());
  }

  // Poisson deviance from the saturated model (negative log-likelihood up to a
  // constant, zero when μ = c); +inf outside the support of the counts.
  double value(const Params& p) const {
    const ComplexMatrix t = params_to_t(p);
    const ComplexMatrix rho = scale * (adjoint(t) * t);
    double f = 0.0;
    for (std::size_t k = 0; k < projectors.size(); ++k) {
      const double mu = trace(rho * projectors[k]).real();
      const double c = data.counts[k];
      if (c > 0.0) {
        if (!(mu > 0.0)) return std::numeric_limits<double>::infinity();
        f += mu - c - c * std::log(mu / c);
      } else {
        f += mu;
      }
    }
    return f;
  }

  Params gradient(const Params& p) const {
    const ComplexMatrix t = params_to_t(p);
    const ComplexMatrix rho = scale * (adjoint(t) * t);
    ComplexMatrix g(kDim);
    for (std::size_t k = 0; k < projectors.size(); ++k) {
      const double mu = trace(rho * projectors[k]).real();
      const double c = data.counts[k];
      const double w = c > 0.0 ? 1.0 - c / mu : 1.0;
      g += (scale * w) * projectors[k];
    }
    // df = 2 Re tr(G T† dT)
    const ComplexMatrix m = g * adjoint(t);
    Params grad{};
    for (std::size_t i = 0; i < kDim; ++i) grad[i] = 2.0 * m(i, i).real();
    for (std::size_t q = 0; q < kOffDiagonal.size(); ++q) {
      const auto [i, j] = kOffDiagonal[q];
      grad[4 + 2 * q] = 2.0 * m(j, i).real();
      grad[5 + 2 * q] = -2.0 * m(j, i).imag();
    }
    return grad;
  }
};

double dot(const Params& a, const Params& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kParams; ++i) s += a[i] * b[i];
  return s;
}

TwoQubitState normalised_state(const Params& p) {
  const ComplexMatrix t = params_to_t(p);
  ComplexMatrix rho = adjoint(t) * t;
  rho = 0.5 * (rho + adjoint(rho));
  rho *= 1.0 / trace(rho).real();
  return TwoQubitState(std::move(rho));
}

double optimal_scale(const TomographyDataset& data, const ComplexMatrix& rho) {
  double total = 0.0, probs = 0.0;
  for (std::size_t k = 0; k < data.settings.size(); ++k) {
    total += data.counts[k];
    probs += trace(rho * data.settings[k].joint()).real();
  }
  return probs > 0.0 ? total / probs : 0.0;
}

}  // namespace

ComplexMatrix Projector::matrix() const {
  ComplexMatrix p(2);
  switch (kind) {
    case Kind::kEarly:
      p(0, 0) = 1.0;
      break;
    case Kind::kLate:
      p(1, 1) = 1.0;
      break;
    case Kind::kSuperposition: {
      const Complex e = std::polar(1.0, phase);
      p(0, 0) = p(1, 1) = 0.5;
      p(0, 1) = 0.5 * std::conj(e);
      p(1, 0) = 0.5 * e;
      break;
    }
  }
  return p;
}

std::string Projector::label() const {
  switch (kind) {
    case Kind::kEarly:
      return "E";
    case Kind::kLate:
      return "L";
    case Kind::kSuperposition:
      break;
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, phase);
  return "S(" + std::string(buf, res.ptr) + ")";
}

Projector Projector::parse(const std::string& label) {
  if (label == "E") return early();
  if (label == "L") return late();
  if (label.size() > 3 && label.starts_with("S(") && label.back() == ')') {
    const std::string body = label.substr(2, label.size() - 3);
    double phase = 0.0;
    auto res = std::from_chars(body.data(), body.data() + body.size(), phase);
    if (res.ec == std::errc{} && res.ptr == body.data() + body.size()) return superposition(phase);
  }
  throw InvalidArgument("Projector::parse: unrecognised projector '" + label + "'");
}

ComplexMatrix MeasurementSetting::joint() const { return kron(xx.matrix(), x.matrix()); }

std::vector<MeasurementSetting> standard_settings() {
  const std::array<Projector, 4> single{Projector::early(), Projector::late(), Projector::superposition(0.0),
                                        Projector::superposition(0.5 * std::numbers::pi)};
  std::vector<MeasurementSetting> out;
  for (const auto& a : single)
    for (const auto& b : single) out.push_back({a, b});
  return out;
}

std::vector<double> design_matrix(const std::vector<MeasurementSetting>& settings) {
  std::vector<double> a(settings.size() * kParams, 0.0);
  for (std::size_t k = 0; k < settings.size(); ++k) {
    const ComplexMatrix p = settings[k].joint();
    double* row = &a[k * kParams];
    // tr(ρP) = Σ_i ρ_ii P_ii + Σ_{i<j} 2 (Re ρ_ij Re P_ji - Im ρ_ij Im P_ji)
    for (std::size_t i = 0; i < kDim; ++i) row[i] = p(i, i).real();
    std::size_t col = kDim;
    for (std::size_t i = 0; i < kDim; ++i)
      for (std::size_t j = i + 1; j < kDim; ++j) {
        row[col++] = 2.0 * p(j, i).real();
        row[col++] = -2.0 * p(j, i).imag();
      }
  }
  return a;
}

std::size_t gram_rank(const std::vector<MeasurementSetting>& settings) {
  const std::size_t n = settings.size();
  std::vector<ComplexMatrix> ps;
  for (const auto& s : settings) ps.push_back(s.joint());
  std::vector<double> gram(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) gram[i * n + j] = trace(ps[i] * ps[j]).real();
  return matrix_rank(std::move(gram), n, n);
}

void TomographyDataset::validate() const {
  if (settings.size() != counts.size())
    throw InvalidArgument("TomographyDataset: settings and counts differ in length");
  for (double c : counts)
    if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidArgument("TomographyDataset: counts must be finite and >= 0");
}

std::vector<double> expected_counts(const TwoQubitState& rho, const std::vector<MeasurementSetting>& settings,
                                    double n_mean) {
  std::vector<double> out;
  out.reserve(settings.size());
  for (const auto& s : settings) out.push_back(n_mean * std::max(trace(rho.matrix() * s.joint()).real(), 0.0));
  return out;
}

TomographyDataset expected_dataset(const TwoQubitState& rho, const std::vector<MeasurementSetting>& settings,
                                   double n_mean) {
  if (!(n_mean > 0.0)) throw InvalidArgument("expected_dataset: n_mean must be > 0");
  return {settings, expected_counts(rho, settings, n_mean), n_mean};
}

TomographyDataset simulate_counts(const TwoQubitState& rho, const std::vector<MeasurementSetting>& settings,
                                  double n_mean, std::uint64_t seed) {
  if (!(n_mean > 0.0)) throw InvalidArgument("simulate_counts: n_mean must be > 0");
  std::mt19937_64 rng(seed);
  TomographyDataset d{settings, {}, n_mean};
  for (double mean : expected_counts(rho, settings, n_mean)) {
    if (mean <= 0.0) {
      d.counts.push_back(0.0);
      continue;
    }
    std::poisson_distribution<long long> poisson(mean);
    d.counts.push_back(static_cast<double>(poisson(rng)));
  }
  return d;
}

LinearReconstruction reconstruct_linear(const TomographyDataset& data) {
  data.validate();
  if (data.settings.size() != kParams) throw InvalidArgument("reconstruct_linear: expected 16 settings");
  double n_hat = 0.0;
  std::size_t time_settings = 0;
  for (std::size_t k = 0; k < data.settings.size(); ++k)
    if (is_time_basis(data.settings[k])) {
      n_hat += data.counts[k];
      ++time_settings;
    }
  if (time_settings != 4) throw InvalidArgument("reconstruct_linear: settings must contain the full time basis");
  if (!(n_hat > 0.0)) throw NumericalError("reconstruct_linear: no counts in the time basis");

  std::vector<double> b(kParams);
  for (std::size_t k = 0; k < kParams; ++k) b[k] = data.counts[k] / n_hat;
  const auto x = solve_linear(design_matrix(data.settings), std::move(b));

  ComplexMatrix rho(kDim);
  for (std::size_t i = 0; i < kDim; ++i) rho(i, i) = x[i];
  std::size_t col = kDim;
  for (std::size_t i = 0; i < kDim; ++i)
    for (std::size_t j = i + 1; j < kDim; ++j) {
      rho(i, j) = Complex{x[col], x[col + 1]};
      rho(j, i) = std::conj(rho(i, j));
      col += 2;
    }
  const double tr = trace(rho).real();
  if (!(tr > 0.0)) throw NumericalError("reconstruct_linear: reconstructed trace is not positive");
  rho *= 1.0 / tr;
  const double lam = min_eigenvalue(rho);
  return {TwoQubitState(std::move(rho)), lam >= -1e-12, lam, n_hat};
}

TwoQubitState project_to_physical(const ComplexMatrix& m) {
  const auto pairs = eig_hermitian(m, 1e-6);
  double total = 0.0;
  for (const auto& p : pairs) total += std::max(p.value, 0.0);
  if (!(total > 0.0)) return TwoQubitState::maximally_mixed();
  ComplexMatrix out(m.dim());
  for (const auto& p : pairs) {
    const double w = std::max(p.value, 0.0) / total;
    if (w == 0.0) continue;
    out += w * ComplexMatrix::outer(p.vector, p.vector);
  }
  out = 0.5 * (out + adjoint(out));
  return TwoQubitState(std::move(out));
}

double poisson_log_likelihood(const TomographyDataset& data, const ComplexMatrix& rho, double scale) {
  double ll = 0.0;
  for (std::size_t k = 0; k < data.settings.size(); ++k) {
    const double mu = scale * trace(rho * data.settings[k].joint()).real();
    const double c = data.counts[k];
    if (c > 0.0) {
      if (!(mu > 0.0)) return -std::numeric_limits<double>::infinity();
      ll += c * std::log(mu) - mu;
    } else {
      ll -= mu;
    }
  }
  return ll;
}

MleReconstruction reconstruct_mle(const TomographyDataset& data, const MleOptions& opts) {
  data.validate();
  double total = 0.0;
  for (double c : data.counts) total += c;
  if (total == 0.0) return {TwoQubitState::maximally_mixed(), 0.0, 0.0, 0, true, true};

  TwoQubitState start = TwoQubitState::maximally_mixed();
  try {
    start = project_to_physical(reconstruct_linear(data).state.matrix());
  } catch (const std::exception&) {
    // No usable linear estimate (e.g. empty time basis); start from I/4.
  }
  const double start_scale = optimal_scale(data, start.matrix());
  const double initial_ll = poisson_log_likelihood(data, start.matrix(), start_scale);

  // Strictly positive definite start so that the Cholesky factor exists.
  constexpr double kMix = 1e-3;
  ComplexMatrix init = (1.0 - kMix) * start.matrix();
  init += (0.25 * kMix) * ComplexMatrix::identity(kDim);
  const double scale = optimal_scale(data, init);
  const Objective obj(data, scale);

  Params x = t_params_for(init);
  double f = obj.value(x);
  Params g = obj.gradient(x);
  std::array<double, kParams * kParams> h{};
  auto reset_h = [&](double diag) {
    h.fill(0.0);
    for (std::size_t i = 0; i < kParams; ++i) h[i * kParams + i] = diag;
  };
  const double g_norm0 = std::sqrt(dot(g, g));
  reset_h(g_norm0 > 0.0 ? 1e-2 / g_norm0 : 1.0);

  int iterations = 0;
  bool converged = false;
  bool just_reset = true;
  while (iterations < opts.max_iterations) {
    ++iterations;
    Params p{};
    for (std::size_t i = 0; i < kParams; ++i)
      for (std::size_t j = 0; j < kParams; ++j) p[i] -= h[i * kParams + j] * g[j];
    double slope = dot(g, p);
    if (!(slope < 0.0)) {
      reset_h(g_norm0 > 0.0 ? 1e-2 / g_norm0 : 1.0);
      for (std::size_t i = 0; i < kParams; ++i) p[i] = -h[i * kParams + i] * g[i];
      slope = dot(g, p);
      just_reset = true;
    }
    // -g·p = g H g estimates twice the remaining gain.
    if (-slope <= opts.rel_tol * std::max(1.0, std::abs(f))) {
      converged = true;
      break;
    }

    double alpha = 1.0;
    Params x_new{};
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < kParams; ++i) x_new[i] = x[i] + alpha * p[i];
      f_new = obj.value(x_new);
      if (f_new <= f + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (just_reset) {
        converged = true;  // no descent left at machine precision
        break;
      }
      reset_h(g_norm0 > 0.0 ? 1e-2 / g_norm0 : 1.0);
      just_reset = true;
      continue;
    }
    just_reset = false;

    const Params g_new = obj.gradient(x_new);
    Params s{}, y{};
    for (std::size_t i = 0; i < kParams; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
    }
    x = x_new;
    g = g_new;
    f = f_new;

    // BFGS update of the inverse Hessian.
    const double sy = dot(s, y);
    if (sy > 1e-300) {
      if (iterations == 1) {
        const double yy = dot(y, y);
        if (yy > 0.0) reset_h(sy / yy);
      }
      Params hy{};
      for (std::size_t i = 0; i < kParams; ++i)
        for (std::size_t j = 0; j < kParams; ++j) hy[i] += h[i * kParams + j] * y[j];
      const double yhy = dot(y, hy);
      const double rho_k = 1.0 / sy;
      for (std::size_t i = 0; i < kParams; ++i)
        for (std::size_t j = 0; j < kParams; ++j)
          h[i * kParams + j] += (1.0 + yhy * rho_k) * rho_k * s[i] * s[j] - rho_k * (hy[i] * s[j] + s[i] * hy[j]);
    }
  }

  TwoQubitState result = normalised_state(x);
  const double ll = poisson_log_likelihood(data, result.matrix(), optimal_scale(data, result.matrix()));
  return {std::move(result), ll, initial_ll, iterations, converged, false};
}

}  // namespace qdent
