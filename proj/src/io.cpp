#include "qdent/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace qdent::io {

namespace {

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text) {
  const std::string s = strip(text);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw InvalidArgument("cannot parse number '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_header(std::ostream& os, const std::vector<std::string>& lines) {
  for (const auto& l : lines) os << "# " << l << '\n';
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const DecayRates& decay,
                          const std::vector<std::string>& header) {
  write_header(os, header);
  const auto emitted = emission_curve(traj, decay);
  os << "t,rho_gg,rho_xx,rho_bb,re_rho_gb,im_rho_gb,p_x,p_b\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& p = traj.populations[k];
    os << format_double(traj.times[k]) << ',' << format_double(p[0]) << ',' << format_double(p[1]) << ','
       << format_double(p[2]) << ',' << format_double(traj.gb_coherence[k].real()) << ','
       << format_double(traj.gb_coherence[k].imag()) << ',' << format_double(emitted[k].p_x) << ','
       << format_double(emitted[k].p_b) << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const SweepResult& sweep, const std::vector<std::string>& header) {
  write_header(os, header);
  os << "theta,omega0,energy,p_b,p_x,ratio,saturated,status\n";
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const double omega0 = sweep.omega0[i];
    const double sigma = sweep.setup.sigma;
    const PulseDrive d{omega0, sigma};
    const bool by_area = sweep.abscissa_kind == Abscissa::kPulseArea;
    const double theta = by_area ? sweep.abscissa[i] : pulse_area(d);
    const double energy = by_area ? pulse_energy_axis(d) : sweep.abscissa[i];
    os << format_double(theta) << ',' << format_double(omega0) << ',' << format_double(energy)
       << ',' << format_double(sweep.p_b[i]) << ',' << format_double(sweep.p_x[i]) << ','
       << format_double(sweep.ratio[i]) << ',' << (sweep.saturated[i] ? 1 : 0) << ','
       << (sweep.failed(i) ? "failed" : "ok") << '\n';
  }
}

void write_density_matrix_csv(std::ostream& os, const ComplexMatrix& m, const std::vector<std::string>& header) {
  write_header(os, header);
  for (int part = 0; part < 2; ++part)
    for (std::size_t i = 0; i < m.dim(); ++i) {
      for (std::size_t j = 0; j < m.dim(); ++j) {
        if (j) os << ',';
        os << format_double(part == 0 ? m(i, j).real() : m(i, j).imag());
      }
      os << '\n';
    }
}

ComplexMatrix read_density_matrix_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    const std::string s = strip(line);
    if (s.empty() || s[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell));
    rows.push_back(std::move(row));
  }
  const std::size_t n = rows.size() / 2;
  if (n == 0 || rows.size() != 2 * n) throw InvalidArgument("density matrix CSV: expected 2n rows");
  ComplexMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n || rows[n + i].size() != n)
      throw InvalidArgument("density matrix CSV: row " + std::to_string(i) + " has the wrong length");
    for (std::size_t j = 0; j < n; ++j) m(i, j) = Complex{rows[i][j], rows[n + i][j]};
  }
  return m;
}

void write_dataset(std::ostream& os, const TomographyDataset& data, const std::vector<std::string>& header) {
  write_header(os, header);
  os << "# n_mean " << format_double(data.n_mean) << '\n';
  os << "# id xx_projector x_projector counts\n";
  for (std::size_t k = 0; k < data.settings.size(); ++k)
    os << k << ' ' << data.settings[k].xx.label() << ' ' << data.settings[k].x.label() << ' '
       << format_double(data.counts[k]) << '\n';
}

TomographyDataset read_dataset(std::istream& is) {
  TomographyDataset d;
  std::string line;
  while (std::getline(is, line)) {
    const std::string s = strip(line);
    if (s.empty()) continue;
    if (s[0] == '#') {
      std::istringstream hs(s.substr(1));
      std::string key;
      hs >> key;
      if (key == "n_mean") {
        std::string v;
        hs >> v;
        d.n_mean = parse_double(v);
      }
      continue;
    }
    std::istringstream ls(s);
    std::size_t id = 0;
    std::string xx, x, counts;
    if (!(ls >> id >> xx >> x >> counts)) throw InvalidArgument("dataset: malformed line '" + s + "'");
    if (id != d.settings.size()) throw InvalidArgument("dataset: setting ids must be consecutive from 0");
    d.settings.push_back({Projector::parse(xx), Projector::parse(x)});
    d.counts.push_back(parse_double(counts));
  }
  d.validate();
  return d;
}

}  // namespace qdent::io
