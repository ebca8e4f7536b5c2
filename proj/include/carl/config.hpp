#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "carl/errors.hpp"
#include "carl/units.hpp"

// JSON configuration with explicit SI units in the key names. Unknown keys
// are rejected with a nearest-key suggestion; all units-module invariants are
// checked on load with field-level diagnostics.

namespace carl {

struct RunSection {
  std::string mode = "overdamped";  // or "inertial"
  double duration_s = 1e-3;
  double dt_s = 0.0;  // 0 = choose from rates
  std::uint64_t seed = 12345;
  int sample_every = 16;
  std::size_t sim_atoms = 0;  // 0 = atom_number (macro-particle weighting otherwise)
  std::vector<double> snapshot_times_s;
};

struct FpSection {
  std::size_t truncation_M = 64;
  double duration_s = 2e-3;
  double dt_s = 0.0;
  int sample_every = 16;
  double init_perturbation = 1e-6;
  double bunching_floor = 0.0;  // 0 = none; -1 = auto (0.5 / sqrt(atom_number))
  bool detect_steady = true;
  bool dump_modes = false;
};

struct KuramotoSection {
  std::size_t n = 4096;
  double coupling_K = 0.0;  // 0 = derive from physical params and omega_ca
  double omega_ca_rad_per_s = 0.0;  // 0 = analytic threshold frequency
  double diffusion_D_per_s = 0.0;   // 0 = sigma^2 / gamma_fr
  double duration_s = 0.0;          // 0 = 40 / D
  double dt_s = 0.0;
  int sample_every = 16;
  bool static_frequencies = false;
  double static_freq_std = 0.0;
};

struct PumpRampSection {
  double peak_power_W = 0.0;  // 0 = 2.5x analytic threshold
  double ramp_duration_s = 0.04;
  std::string solver = "fp";
  std::size_t truncation_M = 64;
  double bunching_floor = -1.0;  // auto by default (see README)
  std::size_t sim_atoms = 4096;  // langevin solver only
  double window_s = 0.0;         // 0 = auto from threshold frequency
  double hop_s = 0.0;
  double dt_s = 0.0;
  int sample_every = 16;
};

struct MolassesOffSection {
  double pump_power_W = 0.0;  // 0 = physical.pump_power_W
  double prep_duration_s = 0.5e-3;
  double post_duration_s = 1.5e-3;
  std::size_t sim_atoms = 2048;
  double dt_s = 0.0;
  int sample_every = 8;
  double window_s = 0.15e-3;
  double hop_s = 0.1e-3;
};

struct ScanSection {
  std::string axis = "detuning";  // detuning | atom_number | temperature
  std::vector<double> values;
  std::string solver = "fp";
  double reference_atom_number = 1e6;
  double reference_detuning_rad_per_s = -constants::two_pi * 1.5e12;
  double rel_tol = 1e-3;
};

struct SpectrogramSection {
  double window_s = 0.2e-3;
  double hop_s = 0.05e-3;
};

struct AppConfig {
  PhysicalParams physical;
  RunSection run;
  FpSection fp;
  KuramotoSection kuramoto;
  PumpRampSection pump_ramp;
  MolassesOffSection molasses_off;
  ScanSection scan;
  SpectrogramSection spectrogram;
};

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline void reject_unknown_keys(const nlohmann::json& obj, const std::string& section,
                                const std::vector<std::string>& known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    if (std::find(known.begin(), known.end(), key) != known.end()) continue;
    std::string best;
    std::size_t best_d = std::numeric_limits<std::size_t>::max();
    for (const auto& k : known) {
      const std::size_t d = edit_distance(key, k);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    std::string msg = "unknown key '" + key + "' in " + section;
    if (!best.empty() && best_d <= std::max<std::size_t>(2, key.size() / 3))
      msg += " (did you mean '" + best + "'?)";
    throw ConfigError(msg);
  }
}

template <typename T>
inline void get_to(const nlohmann::json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    obj.at(key).get_to(out);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline void parse_physical(const nlohmann::json& j, PhysicalParams& p) {
  detail::reject_unknown_keys(
      j, "physical",
      {"wavelength_m", "atomic_mass_kg", "temperature_K", "kappa_rad_per_s", "fsr_Hz",
       "detuning_a_rad_per_s", "rabi_g_rad_per_s", "atom_number", "gamma_fr_per_s",
       "pump_power_W", "u0_rad_per_s", "power_convention_factor"});
  detail::get_to(j, "wavelength_m", p.wavelength_m);
  detail::get_to(j, "atomic_mass_kg", p.atomic_mass_kg);
  detail::get_to(j, "temperature_K", p.temperature_K);
  detail::get_to(j, "kappa_rad_per_s", p.kappa);
  detail::get_to(j, "fsr_Hz", p.fsr_Hz);
  detail::get_to(j, "detuning_a_rad_per_s", p.detuning_a);
  detail::get_to(j, "rabi_g_rad_per_s", p.rabi_g);
  detail::get_to(j, "atom_number", p.atom_number);
  detail::get_to(j, "gamma_fr_per_s", p.gamma_fr);
  detail::get_to(j, "pump_power_W", p.pump_power_W);
  detail::get_to(j, "power_convention_factor", p.power_convention_factor);
  if (j.contains("u0_rad_per_s")) {
    detail::get_to(j, "u0_rad_per_s", p.u0_override);
  } else if (j.contains("rabi_g_rad_per_s")) {
    // an explicit Rabi frequency overrides the default backed-out U0
    p.u0_override = std::numeric_limits<double>::quiet_NaN();
  }
  p.validate();
}

inline AppConfig parse_config_json(const nlohmann::json& root) {
  detail::reject_unknown_keys(root, "config root",
                              {"physical", "run", "fp", "kuramoto", "pump_ramp",
                               "molasses_off", "scan", "spectrogram", "config"});
  AppConfig cfg;
  if (root.contains("physical")) parse_physical(root.at("physical"), cfg.physical);
  else cfg.physical.validate();

  if (root.contains("run")) {
    const auto& j = root.at("run");
    detail::reject_unknown_keys(j, "run",
                                {"mode", "duration_s", "dt_s", "seed", "sample_every",
                                 "sim_atoms", "snapshot_times_s"});
    detail::get_to(j, "mode", cfg.run.mode);
    detail::get_to(j, "duration_s", cfg.run.duration_s);
    detail::get_to(j, "dt_s", cfg.run.dt_s);
    detail::get_to(j, "seed", cfg.run.seed);
    detail::get_to(j, "sample_every", cfg.run.sample_every);
    detail::get_to(j, "sim_atoms", cfg.run.sim_atoms);
    detail::get_to(j, "snapshot_times_s", cfg.run.snapshot_times_s);
    if (cfg.run.mode != "overdamped" && cfg.run.mode != "inertial")
      throw ConfigError("run.mode must be 'overdamped' or 'inertial'");
    if (!(cfg.run.duration_s > 0.0)) throw ConfigError("run.duration_s must be > 0");
    if (cfg.run.sample_every < 1) throw ConfigError("run.sample_every must be >= 1");
  }

  if (root.contains("fp")) {
    const auto& j = root.at("fp");
    detail::reject_unknown_keys(j, "fp",
                                {"truncation_M", "duration_s", "dt_s", "sample_every",
                                 "init_perturbation", "bunching_floor", "detect_steady",
                                 "dump_modes"});
    detail::get_to(j, "truncation_M", cfg.fp.truncation_M);
    detail::get_to(j, "duration_s", cfg.fp.duration_s);
    detail::get_to(j, "dt_s", cfg.fp.dt_s);
    detail::get_to(j, "sample_every", cfg.fp.sample_every);
    detail::get_to(j, "init_perturbation", cfg.fp.init_perturbation);
    detail::get_to(j, "bunching_floor", cfg.fp.bunching_floor);
    detail::get_to(j, "detect_steady", cfg.fp.detect_steady);
    detail::get_to(j, "dump_modes", cfg.fp.dump_modes);
    if (cfg.fp.truncation_M < 2) throw ConfigError("fp.truncation_M must be >= 2");
    if (!(cfg.fp.duration_s > 0.0)) throw ConfigError("fp.duration_s must be > 0");
    if (!(std::abs(cfg.fp.init_perturbation) < 1.0))
      throw ConfigError("fp.init_perturbation must satisfy |amplitude| < 1");
  }

  if (root.contains("kuramoto")) {
    const auto& j = root.at("kuramoto");
    detail::reject_unknown_keys(
        j, "kuramoto",
        {"n", "coupling_K", "omega_ca_rad_per_s", "diffusion_D_per_s", "duration_s", "dt_s",
         "sample_every", "static_frequencies", "static_freq_std"});
    detail::get_to(j, "n", cfg.kuramoto.n);
    detail::get_to(j, "coupling_K", cfg.kuramoto.coupling_K);
    detail::get_to(j, "omega_ca_rad_per_s", cfg.kuramoto.omega_ca_rad_per_s);
    detail::get_to(j, "diffusion_D_per_s", cfg.kuramoto.diffusion_D_per_s);
    detail::get_to(j, "duration_s", cfg.kuramoto.duration_s);
    detail::get_to(j, "dt_s", cfg.kuramoto.dt_s);
    detail::get_to(j, "sample_every", cfg.kuramoto.sample_every);
    detail::get_to(j, "static_frequencies", cfg.kuramoto.static_frequencies);
    detail::get_to(j, "static_freq_std", cfg.kuramoto.static_freq_std);
    if (cfg.kuramoto.n == 0) throw ConfigError("kuramoto.n must be >= 1");
  }

  if (root.contains("pump_ramp")) {
    const auto& j = root.at("pump_ramp");
    detail::reject_unknown_keys(
        j, "pump_ramp",
        {"peak_power_W", "ramp_duration_s", "solver", "truncation_M", "bunching_floor",
         "sim_atoms", "window_s", "hop_s", "dt_s", "sample_every"});
    detail::get_to(j, "peak_power_W", cfg.pump_ramp.peak_power_W);
    detail::get_to(j, "ramp_duration_s", cfg.pump_ramp.ramp_duration_s);
    detail::get_to(j, "solver", cfg.pump_ramp.solver);
    detail::get_to(j, "truncation_M", cfg.pump_ramp.truncation_M);
    detail::get_to(j, "bunching_floor", cfg.pump_ramp.bunching_floor);
    detail::get_to(j, "sim_atoms", cfg.pump_ramp.sim_atoms);
    detail::get_to(j, "window_s", cfg.pump_ramp.window_s);
    detail::get_to(j, "hop_s", cfg.pump_ramp.hop_s);
    detail::get_to(j, "dt_s", cfg.pump_ramp.dt_s);
    detail::get_to(j, "sample_every", cfg.pump_ramp.sample_every);
    if (cfg.pump_ramp.solver != "fp" && cfg.pump_ramp.solver != "langevin")
      throw ConfigError("pump_ramp.solver must be 'fp' or 'langevin'");
    if (!(cfg.pump_ramp.ramp_duration_s > 0.0))
      throw ConfigError("pump_ramp.ramp_duration_s must be > 0");
  }

  if (root.contains("molasses_off")) {
    const auto& j = root.at("molasses_off");
    detail::reject_unknown_keys(j, "molasses_off",
                                {"pump_power_W", "prep_duration_s", "post_duration_s",
                                 "sim_atoms", "dt_s", "sample_every", "window_s", "hop_s"});
    detail::get_to(j, "pump_power_W", cfg.molasses_off.pump_power_W);
    detail::get_to(j, "prep_duration_s", cfg.molasses_off.prep_duration_s);
    detail::get_to(j, "post_duration_s", cfg.molasses_off.post_duration_s);
    detail::get_to(j, "sim_atoms", cfg.molasses_off.sim_atoms);
    detail::get_to(j, "dt_s", cfg.molasses_off.dt_s);
    detail::get_to(j, "sample_every", cfg.molasses_off.sample_every);
    detail::get_to(j, "window_s", cfg.molasses_off.window_s);
    detail::get_to(j, "hop_s", cfg.molasses_off.hop_s);
    if (!(cfg.molasses_off.prep_duration_s > 0.0) || !(cfg.molasses_off.post_duration_s > 0.0))
      throw ConfigError("molasses_off durations must be > 0");
    if (cfg.molasses_off.sim_atoms == 0) throw ConfigError("molasses_off.sim_atoms must be >= 1");
  }

  if (root.contains("scan")) {
    const auto& j = root.at("scan");
    detail::reject_unknown_keys(j, "scan",
                                {"axis", "values", "solver", "reference_atom_number",
                                 "reference_detuning_rad_per_s", "rel_tol"});
    detail::get_to(j, "axis", cfg.scan.axis);
    detail::get_to(j, "values", cfg.scan.values);
    detail::get_to(j, "solver", cfg.scan.solver);
    detail::get_to(j, "reference_atom_number", cfg.scan.reference_atom_number);
    detail::get_to(j, "reference_detuning_rad_per_s", cfg.scan.reference_detuning_rad_per_s);
    detail::get_to(j, "rel_tol", cfg.scan.rel_tol);
    if (cfg.scan.axis != "detuning" && cfg.scan.axis != "atom_number" &&
        cfg.scan.axis != "temperature")
      throw ConfigError("scan.axis must be 'detuning', 'atom_number' or 'temperature'");
  }

  if (root.contains("spectrogram")) {
    const auto& j = root.at("spectrogram");
    detail::reject_unknown_keys(j, "spectrogram", {"window_s", "hop_s"});
    detail::get_to(j, "window_s", cfg.spectrogram.window_s);
    detail::get_to(j, "hop_s", cfg.spectrogram.hop_s);
  }

  return cfg;
}

// Accepts either a plain config or a manifest (re-execution path: manifests
// embed the resolved config under "config").
inline AppConfig load_and_validate_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");
  if (root.contains("config") && root.contains("artifact")) root = root.at("config");
  return parse_config_json(root);
}

// Resolved-config echo for the manifest (defaults filled in and recorded).
inline nlohmann::json config_to_json(const AppConfig& c) {
  nlohmann::json j;
  j["physical"] = {
      {"wavelength_m", c.physical.wavelength_m},
      {"atomic_mass_kg", c.physical.atomic_mass_kg},
      {"temperature_K", c.physical.temperature_K},
      {"kappa_rad_per_s", c.physical.kappa},
      {"fsr_Hz", c.physical.fsr_Hz},
      {"detuning_a_rad_per_s", c.physical.detuning_a},
      {"rabi_g_rad_per_s", c.physical.rabi_g},
      {"atom_number", c.physical.atom_number},
      {"gamma_fr_per_s", c.physical.gamma_fr},
      {"pump_power_W", c.physical.pump_power_W},
      {"power_convention_factor", c.physical.power_convention_factor},
  };
  if (!std::isnan(c.physical.u0_override))
    j["physical"]["u0_rad_per_s"] = c.physical.u0_override;
  j["run"] = {{"mode", c.run.mode},
              {"duration_s", c.run.duration_s},
              {"dt_s", c.run.dt_s},
              {"seed", c.run.seed},
              {"sample_every", c.run.sample_every},
              {"sim_atoms", c.run.sim_atoms},
              {"snapshot_times_s", c.run.snapshot_times_s}};
  j["fp"] = {{"truncation_M", c.fp.truncation_M},
             {"duration_s", c.fp.duration_s},
             {"dt_s", c.fp.dt_s},
             {"sample_every", c.fp.sample_every},
             {"init_perturbation", c.fp.init_perturbation},
             {"bunching_floor", c.fp.bunching_floor},
             {"detect_steady", c.fp.detect_steady},
             {"dump_modes", c.fp.dump_modes}};
  j["kuramoto"] = {{"n", c.kuramoto.n},
                   {"coupling_K", c.kuramoto.coupling_K},
                   {"omega_ca_rad_per_s", c.kuramoto.omega_ca_rad_per_s},
                   {"diffusion_D_per_s", c.kuramoto.diffusion_D_per_s},
                   {"duration_s", c.kuramoto.duration_s},
                   {"dt_s", c.kuramoto.dt_s},
                   {"sample_every", c.kuramoto.sample_every},
                   {"static_frequencies", c.kuramoto.static_frequencies},
                   {"static_freq_std", c.kuramoto.static_freq_std}};
  j["pump_ramp"] = {{"peak_power_W", c.pump_ramp.peak_power_W},
                    {"ramp_duration_s", c.pump_ramp.ramp_duration_s},
                    {"solver", c.pump_ramp.solver},
                    {"truncation_M", c.pump_ramp.truncation_M},
                    {"bunching_floor", c.pump_ramp.bunching_floor},
                    {"sim_atoms", c.pump_ramp.sim_atoms},
                    {"window_s", c.pump_ramp.window_s},
                    {"hop_s", c.pump_ramp.hop_s},
                    {"dt_s", c.pump_ramp.dt_s},
                    {"sample_every", c.pump_ramp.sample_every}};
  j["molasses_off"] = {{"pump_power_W", c.molasses_off.pump_power_W},
                       {"prep_duration_s", c.molasses_off.prep_duration_s},
                       {"post_duration_s", c.molasses_off.post_duration_s},
                       {"sim_atoms", c.molasses_off.sim_atoms},
                       {"dt_s", c.molasses_off.dt_s},
                       {"sample_every", c.molasses_off.sample_every},
                       {"window_s", c.molasses_off.window_s},
                       {"hop_s", c.molasses_off.hop_s}};
  j["scan"] = {{"axis", c.scan.axis},
               {"values", c.scan.values},
               {"solver", c.scan.solver},
               {"reference_atom_number", c.scan.reference_atom_number},
               {"reference_detuning_rad_per_s", c.scan.reference_detuning_rad_per_s},
               {"rel_tol", c.scan.rel_tol}};
  j["spectrogram"] = {{"window_s", c.spectrogram.window_s}, {"hop_s", c.spectrogram.hop_s}};
  return j;
}

}  // namespace carl
