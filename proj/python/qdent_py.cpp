#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qdent/commands.hpp"
#include "qdent/config.hpp"
#include "qdent/dynamics.hpp"
#include "qdent/sweeps.hpp"
#include "qdent/timebin.hpp"
#include "qdent/tomography.hpp"

namespace py = pybind11;
using namespace qdent;

namespace {

using CArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

py::array_t<std::complex<double>> to_numpy(const ComplexMatrix& m) {
  py::array_t<std::complex<double>> out({m.dim(), m.dim()});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) v(i, j) = m(i, j);
  return out;
}

ComplexMatrix from_numpy(const CArray& a) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw InvalidArgument("expected a square matrix");
  const auto n = static_cast<std::size_t>(a.shape(0));
  ComplexMatrix m(n);
  auto v = a.unchecked<2>();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = v(i, j);
  return m;
}

TwoQubitState two_qubit(const CArray& a) {
  auto m = from_numpy(a);
  if (m.dim() != 4) throw InvalidArgument("expected a 4x4 density matrix");
  return TwoQubitState(std::move(m));
}

template <class T>
py::array_t<double> vec(const std::vector<T>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

}  // namespace

PYBIND11_MODULE(_qdent, m) {
  m.doc() = "Quantum-dot cascade dynamics and time-bin entanglement";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<PulseDrive>(m, "PulseDrive")
      .def(py::init([](double omega0, double sigma, double t0, double delta_x, double delta_b) {
             return PulseDrive{omega0, sigma, t0, delta_x, delta_b};
           }),
           py::arg("omega0") = 0.0, py::arg("sigma") = 1.0, py::arg("t0") = 0.0, py::arg("delta_x") = 0.0,
           py::arg("delta_b") = 0.0)
      .def_readwrite("omega0", &PulseDrive::omega0)
      .def_readwrite("sigma", &PulseDrive::sigma)
      .def_readwrite("t0", &PulseDrive::t0)
      .def_readwrite("delta_x", &PulseDrive::delta_x)
      .def_readwrite("delta_b", &PulseDrive::delta_b)
      .def("amplitude", &PulseDrive::amplitude);

  py::class_<DecayRates>(m, "DecayRates")
      .def(py::init([](double gamma_b, double gamma_x) { return DecayRates{gamma_b, gamma_x}; }),
           py::arg("gamma_b") = 0.002, py::arg("gamma_x") = 0.001)
      .def_readwrite("gamma_b", &DecayRates::gamma_b)
      .def_readwrite("gamma_x", &DecayRates::gamma_x);

  py::class_<DephasingModel>(m, "DephasingModel")
      .def(py::init([](double gamma_bg, double gamma_i0, int n_p) { return DephasingModel{gamma_bg, gamma_i0, n_p}; }),
           py::arg("gamma_bg") = 0.0, py::arg("gamma_i0") = 0.0, py::arg("n_p") = 0)
      .def_readwrite("gamma_bg", &DephasingModel::gamma_bg)
      .def_readwrite("gamma_i0", &DephasingModel::gamma_i0)
      .def_readwrite("n_p", &DephasingModel::n_p)
      .def("rate", &DephasingModel::rate);

  m.def("pulse_area", &pulse_area);
  m.def("omega0_for_area", &omega0_for_area, py::arg("area"), py::arg("sigma"));
  m.def("two_photon_pi_area", &two_photon_pi_area, py::arg("sigma"), py::arg("delta_x"));
  m.def("default_time_span", &default_time_span);

  m.def(
      "evolve",
      [](const DecayRates& decay, const PulseDrive& drive, const DephasingModel& deph,
         std::optional<std::pair<double, double>> t_span, const std::optional<CArray>& rho0, double tol) {
        QdDensityMatrix initial = rho0 ? QdDensityMatrix(from_numpy(*rho0)) : QdDensityMatrix{};
        const auto span = t_span.value_or(default_time_span(drive, decay));
        Trajectory traj;
        {
          py::gil_scoped_release release;
          traj = evolve(initial, drive, decay, deph, span, EvolveOptions{tol, 0.0});
        }
        const auto emitted = emission_probabilities(traj, decay, traj.t_end());
        py::array_t<double> pops({traj.size(), std::size_t{3}});
        auto p = pops.mutable_unchecked<2>();
        for (std::size_t k = 0; k < traj.size(); ++k)
          for (std::size_t l = 0; l < 3; ++l) p(k, l) = traj.populations[k][l];
        py::dict out;
        out["times"] = vec(traj.times);
        out["populations"] = pops;
        out["final_state"] = to_numpy(traj.states.back().matrix());
        out["p_x"] = emitted.p_x;
        out["p_b"] = emitted.p_b;
        out["max_trace_error"] = traj.max_trace_error;
        out["min_eigenvalue"] = traj.min_eigenvalue;
        return out;
      },
      py::arg("decay") = DecayRates{}, py::arg("drive") = PulseDrive{}, py::arg("dephasing") = DephasingModel{},
      py::arg("t_span") = py::none(), py::arg("rho0") = py::none(), py::arg("tol") = 1e-9,
      "Evolve from rho0 (default |g><g|); returns times, populations (g, x, b), final state and P_x, P_b.");

  py::class_<SweepSetup>(m, "SweepSetup")
      .def(py::init([](double sigma, double t0, double delta_x, double delta_b, const DecayRates& decay,
                       const DephasingModel& deph, double tol, unsigned threads) {
             return SweepSetup{sigma, t0, delta_x, delta_b, decay, deph, tol, threads};
           }),
           py::arg("sigma") = 8.0, py::arg("t0") = 0.0, py::arg("delta_x") = 2.0, py::arg("delta_b") = 0.0,
           py::arg("decay") = DecayRates{}, py::arg("dephasing") = DephasingModel{}, py::arg("tol") = 1e-7,
           py::arg("threads") = 1u)
      .def_readwrite("sigma", &SweepSetup::sigma)
      .def_readwrite("delta_x", &SweepSetup::delta_x)
      .def_readwrite("dephasing", &SweepSetup::dephasing)
      .def_readwrite("threads", &SweepSetup::threads);

  m.def(
      "rabi_sweep",
      [](const SweepSetup& setup, const std::vector<double>& areas) {
        SweepResult r;
        {
          py::gil_scoped_release release;
          r = rabi_sweep(setup, areas);
        }
        py::dict out;
        out["area"] = vec(r.abscissa);
        out["p_b"] = vec(r.p_b);
        out["p_x"] = vec(r.p_x);
        out["ratio"] = vec(r.ratio);
        return out;
      },
      py::arg("setup"), py::arg("areas"));

  py::class_<RabiExtrema>(m, "RabiExtrema")
      .def_readonly("area_max", &RabiExtrema::area_max)
      .def_readonly("p_b_max", &RabiExtrema::p_b_max)
      .def_readonly("area_min", &RabiExtrema::area_min)
      .def_readonly("p_b_min", &RabiExtrema::p_b_min)
      .def("ratio", &RabiExtrema::ratio);
  m.def("first_rabi_extrema", &first_rabi_extrema, py::arg("setup"), py::arg("area_range"), py::arg("samples") = 200,
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "fit_gamma_i0",
      [](int n_p, double target_ratio, const SweepSetup& base, int samples) {
        FitOptions opts;
        opts.samples = samples;
        py::gil_scoped_release release;
        return fit_gamma_i0(n_p, target_ratio, base, opts).gamma_i0;
      },
      py::arg("n_p"), py::arg("target_ratio"), py::arg("base"), py::arg("samples") = 60);
  m.def(
      "ratio_sweep",
      [](const std::vector<double>& sigmas, const std::vector<double>& energies, const SweepSetup& base) {
        std::vector<RatioCurve> curves;
        {
          py::gil_scoped_release release;
          curves = ratio_sweep(sigmas, energies, base);
        }
        py::list out;
        for (const auto& c : curves) {
          py::dict d;
          d["energy"] = vec(c.sweep.abscissa);
          d["ratio"] = vec(c.sweep.ratio);
          d["interior_maximum"] = c.maximum.interior;
          d["max_energy"] = c.maximum.energy;
          d["max_ratio"] = c.maximum.ratio;
          out.append(d);
        }
        return out;
      },
      py::arg("sigmas"), py::arg("energies"), py::arg("base"));

  m.def(
      "model_state",
      [](double phi_p, double epsilon, double v_coh, double pairing_weight) {
        return to_numpy(model_state({phi_p, epsilon, v_coh, pairing_weight}).matrix());
      },
      py::arg("phi_p") = 0.0, py::arg("epsilon") = 0.0, py::arg("v_coh") = 1.0, py::arg("pairing_weight") = 4.0);
  m.def("accidental_fraction", &accidental_fraction, py::arg("epsilon"), py::arg("pairing_weight") = 4.0);
  m.def("v_coh_for_fidelity", &v_coh_for_fidelity, py::arg("target"), py::arg("epsilon"),
        py::arg("pairing_weight") = 4.0);
  m.def("concurrence", [](const CArray& rho) { return concurrence(two_qubit(rho)); });
  m.def("fidelity_bell", [](const CArray& rho) {
    const auto f = fidelity_bell(two_qubit(rho));
    return py::make_tuple(f.fidelity, f.phi_opt);
  });
  m.def("coherence_metric", [](const CArray& rho) {
    const auto c = coherence_metric(two_qubit(rho));
    return py::make_tuple(c.value, c.row, c.col);
  });
  m.def("visibilities", [](const CArray& rho) {
    const auto v = visibilities(two_qubit(rho));
    py::dict d;
    d["time"] = v.time;
    d["energy_0"] = v.energy_0;
    d["energy_90"] = v.energy_90;
    return d;
  });
  m.def("state_fidelity", [](const CArray& a, const CArray& b) { return state_fidelity(two_qubit(a), two_qubit(b)); });

  m.def(
      "simulate_counts",
      [](const CArray& rho, double n_mean, std::uint64_t seed) {
        return vec(simulate_counts(two_qubit(rho), standard_settings(), n_mean, seed).counts);
      },
      py::arg("rho"), py::arg("n_mean"), py::arg("seed"), "Poisson counts for the 16 standard settings.");
  m.def(
      "setting_labels",
      [] {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& s : standard_settings()) out.emplace_back(s.xx.label(), s.x.label());
        return out;
      },
      "(XX, X) projector labels of the 16 standard settings, in count order.");
  const auto dataset = [](const std::vector<double>& counts, double n_mean) {
    return TomographyDataset{standard_settings(), counts, n_mean};
  };
  m.def(
      "reconstruct_linear",
      [dataset](const std::vector<double>& counts, double n_mean) {
        return to_numpy(reconstruct_linear(dataset(counts, n_mean)).state.matrix());
      },
      py::arg("counts"), py::arg("n_mean") = 0.0);
  m.def(
      "reconstruct_mle",
      [dataset](const std::vector<double>& counts, double n_mean) {
        return to_numpy(reconstruct_mle(dataset(counts, n_mean)).state.matrix());
      },
      py::arg("counts"), py::arg("n_mean") = 0.0);

  m.def("parse_config", [](const std::string& text) { return config_to_json(parse_config(text)); },
        "Validate a JSON config and return the fully resolved configuration as JSON.");
  m.def(
      "run_command",
      [](const std::string& name, const std::string& config_json, const std::filesystem::path& out_dir) {
        const RunConfig c = config_json.empty() ? RunConfig{} : parse_config(config_json);
        py::gil_scoped_release release;
        if (name == "evolve") return cli::cmd_evolve(c, out_dir);
        if (name == "rabi") return cli::cmd_rabi(c, out_dir);
        if (name == "ratio") return cli::cmd_ratio(c, out_dir);
        if (name == "entangle") return cli::cmd_entangle(c, out_dir);
        if (name == "fit-dephasing") return cli::cmd_fit_dephasing(c, out_dir);
        throw InvalidArgument("unknown command '" + name + "'");
      },
      py::arg("name"), py::arg("config_json") = "", py::arg("out_dir") = ".");
}
