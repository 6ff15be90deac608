#include "qdent/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace qdent {

namespace {

using nlohmann::json;

// Reads keys from one JSON object and rejects whatever was not consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  // A null value counts as absent (and as consumed).
  bool has(const std::string& key) {
    if (!j_.contains(key)) return false;
    if (j_.at(key).is_null()) {
      seen_.insert(key);
      return false;
    }
    return true;
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void number(const std::string& key, double& out, bool non_negative = false) {
    if (!j_.contains(key)) return;
    out = as_number(key);
    if (non_negative && out < 0.0) throw ConfigError(key_path(key), "must be >= 0");
  }

  void number(const std::string& key, std::optional<double>& out, bool non_negative = false) {
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      seen_.insert(key);
      out.reset();
      return;
    }
    out = as_number(key);
    if (non_negative && *out < 0.0) throw ConfigError(key_path(key), "must be >= 0");
  }

  void integer(const std::string& key, int& out, int min_value) {
    if (!j_.contains(key)) return;
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(key_path(key), "expected an integer");
    const auto x = v.get<long long>();
    if (x < min_value) throw ConfigError(key_path(key), "must be >= " + std::to_string(min_value));
    out = static_cast<int>(x);
  }

  void integer(const std::string& key, std::optional<int>& out, int min_value) {
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      seen_.insert(key);
      out.reset();
      return;
    }
    int v = 0;
    integer(key, v, min_value);
    out = v;
  }

  void boolean(const std::string& key, bool& out) {
    if (!j_.contains(key)) return;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(key_path(key), "expected true or false");
    out = v.get<bool>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
  }

 private:
  double as_number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(key_path(key), "expected a number");
    return v.get<double>();
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Grid parse_grid(const json& j, const std::string& path) {
  Grid g;
  Section s(j, path);
  s.number("start", g.start);
  s.number("stop", g.stop);
  s.integer("count", g.count, 1);
  s.finish();
  if (!(g.stop >= g.start)) throw ConfigError(path, "stop must be >= start");
  if (g.count > 1 && g.stop == g.start) throw ConfigError(path, "empty grid");
  return g;
}

// A section that changes n_p must also give gamma_i0; the default strength belongs to the default n_p.
RunConfig::Dephasing parse_dephasing(const json& j, const std::string& path, RunConfig::Dephasing d) {
  Section s(j, path);
  if (s.has("n_p") && !j.contains("gamma_i0")) d.gamma_i0.reset();
  s.number("gamma_bg", d.gamma_bg, true);
  s.number("gamma_i0", d.gamma_i0, true);
  s.integer("n_p", d.n_p, 0);
  s.finish();
  if (d.n_p > 4) throw ConfigError(path + ".n_p", "must be in {0, ..., 4}");
  return d;
}

json grid_json(const Grid& g) { return {{"start", g.start}, {"stop", g.stop}, {"count", g.count}}; }

json dephasing_json(const RunConfig::Dephasing& d) {
  return {{"gamma_bg", d.gamma_bg}, {"gamma_i0", d.gamma_i0 ? json(*d.gamma_i0) : json(nullptr)}, {"n_p", d.n_p}};
}

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

std::vector<double> Grid::values() const {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[i] = count == 1 ? start : start + (stop - start) * i / (count - 1);
  return out;
}

PulseDrive RunConfig::drive() const {
  double omega0 = 0.0;
  if (pulse.omega0)
    omega0 = *pulse.omega0;
  else if (pulse.area)
    omega0 = omega0_for_area(*pulse.area, pulse.sigma);
  else
    omega0 = omega0_for_area(two_photon_pi_area(pulse.sigma, dot.delta_x), pulse.sigma);
  return {omega0, pulse.sigma, pulse.t0, dot.delta_x, dot.delta_b};
}

DephasingModel RunConfig::dephasing_model(const Dephasing& model) const {
  return {model.gamma_bg, model.gamma_i0.value_or(0.0), model.n_p};
}

SweepSetup RunConfig::sweep_setup(const Dephasing& model) const {
  SweepSetup s;
  s.sigma = pulse.sigma;
  s.t0 = pulse.t0;
  s.delta_x = dot.delta_x;
  s.delta_b = dot.delta_b;
  s.decay = decay();
  s.dephasing = dephasing_model(model);
  s.tol = integrator.sweep_tolerance;
  s.threads = threads;
  return s;
}

std::vector<RunConfig::Dephasing> RunConfig::resolved_dephasing_models() const {
  if (!dephasing_models.empty()) return dephasing_models;
  const double bg = dephasing.gamma_bg;
  return {{bg, 0.0, 0}, {bg, 0.0349, 2}, {bg, 0.0219, 4}};
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  RunConfig c;
  Section top(root, "");

  if (top.has("dot")) {
    Section s(top.raw("dot"), "dot");
    s.number("gamma_x", c.dot.gamma_x, true);
    s.number("gamma_b", c.dot.gamma_b, true);
    s.number("delta_x", c.dot.delta_x);
    s.number("delta_b", c.dot.delta_b);
    s.finish();
  }
  if (top.has("pulse")) {
    Section s(top.raw("pulse"), "pulse");
    s.number("sigma", c.pulse.sigma);
    s.number("t0", c.pulse.t0);
    s.number("area", c.pulse.area, true);
    s.number("omega0", c.pulse.omega0, true);
    s.finish();
    if (!(c.pulse.sigma > 0.0)) throw ConfigError("pulse.sigma", "must be > 0");
    if (c.pulse.area && c.pulse.omega0) throw ConfigError("pulse.omega0", "give either area or omega0, not both");
  }
  if (top.has("dephasing")) c.dephasing = parse_dephasing(top.raw("dephasing"), "dephasing", c.dephasing);
  if (top.has("dephasing_models")) {
    const json& list = top.raw("dephasing_models");
    if (!list.is_array()) throw ConfigError("dephasing_models", "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i)
      c.dephasing_models.push_back(
          parse_dephasing(list[i], "dephasing_models[" + std::to_string(i) + "]",
                          RunConfig::Dephasing{c.dephasing.gamma_bg, std::nullopt, 0}));
  }
  if (top.has("integrator")) {
    Section s(top.raw("integrator"), "integrator");
    s.number("tolerance", c.integrator.tolerance);
    s.number("sweep_tolerance", c.integrator.sweep_tolerance);
    s.finish();
    for (auto [key, v] : {std::pair{"integrator.tolerance", c.integrator.tolerance},
                          std::pair{"integrator.sweep_tolerance", c.integrator.sweep_tolerance}})
      if (!(v > 0.0 && v <= 1e-3)) throw ConfigError(key, "must be in (0, 1e-3]");
  }
  if (top.has("rabi")) {
    Section s(top.raw("rabi"), "rabi");
    if (s.has("areas")) c.rabi.areas = parse_grid(s.raw("areas"), "rabi.areas");
    s.boolean("round_trip_fit", c.rabi.round_trip_fit);
    s.finish();
    if (c.rabi.areas && c.rabi.areas->count < 2) throw ConfigError("rabi.areas.count", "need at least 2 points");
  }
  if (top.has("ratio")) {
    Section s(top.raw("ratio"), "ratio");
    if (s.has("sigmas")) {
      const json& list = s.raw("sigmas");
      if (!list.is_array() || list.empty()) throw ConfigError("ratio.sigmas", "expected a non-empty array");
      c.ratio.sigmas.clear();
      for (const auto& v : list) {
        if (!v.is_number() || !(v.get<double>() > 0.0)) throw ConfigError("ratio.sigmas", "entries must be > 0");
        c.ratio.sigmas.push_back(v.get<double>());
      }
    }
    if (s.has("energies")) c.ratio.energies = parse_grid(s.raw("energies"), "ratio.energies");
    s.finish();
  }
  if (top.has("fit")) {
    Section s(top.raw("fit"), "fit");
    s.integer("n_p", c.fit.n_p, 0);
    s.number("target_ratio", c.fit.target_ratio);
    s.integer("reference_n_p", c.fit.reference_n_p, 0);
    s.number("reference_gamma_i0", c.fit.reference_gamma_i0, true);
    s.integer("samples", c.fit.samples, 5);
    s.finish();
    if (c.fit.n_p > 4) throw ConfigError("fit.n_p", "must be in {0, ..., 4}");
    if (c.fit.target_ratio && !(*c.fit.target_ratio > 1.0)) throw ConfigError("fit.target_ratio", "must be > 1");
  }
  if (top.has("timebin")) {
    Section s(top.raw("timebin"), "timebin");
    s.number("phi_p", c.timebin.phi_p);
    s.number("epsilon", c.timebin.epsilon, true);
    s.number("pairing_weight", c.timebin.pairing_weight, true);
    s.number("v_coh", c.timebin.v_coh, true);
    s.number("target_fidelity", c.timebin.target_fidelity, true);
    s.boolean("v_coh_from_dynamics", c.timebin.v_coh_from_dynamics);
    s.finish();
    if (c.timebin.epsilon > 1.0) throw ConfigError("timebin.epsilon", "must be in [0, 1]");
    if (c.timebin.v_coh && *c.timebin.v_coh > 1.0) throw ConfigError("timebin.v_coh", "must be in [0, 1]");
  }
  if (top.has("tomography")) {
    Section s(top.raw("tomography"), "tomography");
    s.number("n_mean", c.tomography.n_mean);
    if (s.has("seed")) {
      const json& v = s.raw("seed");
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw ConfigError("tomography.seed", "expected a non-negative integer");
      c.tomography.seed = v.get<std::uint64_t>();
    }
    s.integer("batch", c.tomography.batch, 1);
    s.finish();
    if (!(c.tomography.n_mean > 0.0)) throw ConfigError("tomography.n_mean", "must be > 0");
  }
  if (top.has("threads")) {
    int t = 1;
    top.integer("threads", t, 1);
    c.threads = static_cast<unsigned>(t);
  }
  top.finish();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c) {
  json models = json::array();
  for (const auto& m : c.resolved_dephasing_models()) models.push_back(dephasing_json(m));
  json j = {
      {"dot",
       {{"gamma_x", c.dot.gamma_x}, {"gamma_b", c.dot.gamma_b}, {"delta_x", c.dot.delta_x}, {"delta_b", c.dot.delta_b}}},
      {"pulse",
       {{"sigma", c.pulse.sigma}, {"t0", c.pulse.t0}, {"area", opt(c.pulse.area)}, {"omega0", opt(c.pulse.omega0)}}},
      {"dephasing", dephasing_json(c.dephasing)},
      {"dephasing_models", models},
      {"integrator", {{"tolerance", c.integrator.tolerance}, {"sweep_tolerance", c.integrator.sweep_tolerance}}},
      {"rabi",
       {{"areas", c.rabi.areas ? grid_json(*c.rabi.areas) : json(nullptr)}, {"round_trip_fit", c.rabi.round_trip_fit}}},
      {"ratio", {{"sigmas", c.ratio.sigmas}, {"energies", grid_json(c.ratio.energies)}}},
      {"fit",
       {{"n_p", c.fit.n_p},
        {"target_ratio", opt(c.fit.target_ratio)},
        {"reference_n_p", opt(c.fit.reference_n_p)},
        {"reference_gamma_i0", opt(c.fit.reference_gamma_i0)},
        {"samples", c.fit.samples}}},
      {"timebin",
       {{"phi_p", c.timebin.phi_p},
        {"epsilon", c.timebin.epsilon},
        {"pairing_weight", c.timebin.pairing_weight},
        {"v_coh", opt(c.timebin.v_coh)},
        {"target_fidelity", opt(c.timebin.target_fidelity)},
        {"v_coh_from_dynamics", c.timebin.v_coh_from_dynamics}}},
      {"threads", c.threads},
      {"tomography", {{"n_mean", c.tomography.n_mean}, {"seed", c.tomography.seed}, {"batch", c.tomography.batch}}},
  };
  return j.dump();
}

}  // namespace qdent
