#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "carl/config.hpp"
#include "carl/csv.hpp"
#include "carl/experiments.hpp"
#include "carl/manifest.hpp"
#include "carl/svg.hpp"

// Run orchestration behind the CLI: config resolution, dispatch, persistence.
// Exit codes: 0 success, 2 config error, 3 numerical failure.

namespace carl {

struct CliFlags {
  std::string out_dir = ".";
  bool seed_set = false;
  std::uint64_t seed = 0;
  std::string solver;  // empty = from config
  int threads = 0;     // 0 = hardware
  bool svg = false;
  std::string input;   // analyze-spectrogram source CSV
};

namespace cli_detail {

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                                 const DerivedScales& scales) {
  CsvWriter csv(path);
  csv.comment("derived_scales: " + derived_scales_json(scales).dump());
  csv.header({"t", "re_b", "im_b", "abs_b", "re_alpha_minus", "im_alpha_minus", "p_minus_W",
              "p_beat_contrast_W"});
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Complex am = traj.alpha_minus[i];
    const double p_minus = scales.watts_per_photon * std::norm(am);
    const double contrast =
        4.0 * scales.watts_per_photon * traj.alpha_plus[i] * std::abs(am);
    csv.row({traj.t[i], traj.b[i].real(), traj.b[i].imag(), std::abs(traj.b[i]), am.real(),
             am.imag(), p_minus, contrast});
  }
}

// Binary snapshot: "CARLSNAP", u32 version, u32 json_len, json bytes,
// u64 n, f64 t, n little-endian float64 theta values.
inline void write_theta_snapshot(const std::string& path, const ThetaSnapshot& snap,
                                 const DerivedScales& scales) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw ConfigError("cannot open for writing: " + path);
  const std::string json = derived_scales_json(scales).dump();
  const std::uint32_t version = 1;
  const std::uint32_t json_len = static_cast<std::uint32_t>(json.size());
  const std::uint64_t n = snap.theta.size();
  std::fwrite("CARLSNAP", 1, 8, f);
  std::fwrite(&version, sizeof(version), 1, f);
  std::fwrite(&json_len, sizeof(json_len), 1, f);
  std::fwrite(json.data(), 1, json.size(), f);
  std::fwrite(&n, sizeof(n), 1, f);
  std::fwrite(&snap.t, sizeof(snap.t), 1, f);
  std::fwrite(snap.theta.data(), sizeof(double), snap.theta.size(), f);
  std::fclose(f);
}

inline Trajectory read_trajectory_csv(const std::string& path, double watts_per_photon) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read trajectory: " + path);
  Trajectory traj;
  std::string line;
  bool header_seen = false;
  double last_alpha_plus = 0.0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {  // column header
      header_seen = true;
      continue;
    }
    std::vector<double> cells;
    const char* p = line.c_str();
    char* end = nullptr;
    while (*p != '\0') {
      cells.push_back(std::strtod(p, &end));
      p = (*end == ',') ? end + 1 : end;
      if (end == line.c_str() + line.size()) break;
    }
    if (cells.size() < 8) continue;
    traj.t.push_back(cells[0]);
    traj.b.emplace_back(cells[1], cells[2]);
    traj.alpha_minus.emplace_back(cells[4], cells[5]);
    const double p_minus = cells[6], contrast = cells[7];
    double alpha_plus = last_alpha_plus;
    if (p_minus > 0.0)
      alpha_plus = contrast / (4.0 * std::sqrt(watts_per_photon * p_minus));
    traj.alpha_plus.push_back(alpha_plus);
    last_alpha_plus = alpha_plus;
  }
  if (traj.size() < 2) throw ConfigError("trajectory has fewer than 2 samples: " + path);
  return traj;
}

inline void write_spectrogram_csv(const std::string& path, const SpectrogramResult& spec,
                                  const DerivedScales& scales) {
  CsvWriter csv(path);
  csv.comment("derived_scales: " + derived_scales_json(scales).dump());
  csv.header({"t", "f_Hz", "magnitude"});
  for (std::size_t w = 0; w < spec.window_times.size(); ++w)
    for (std::size_t k = 0; k < spec.frequencies.size(); ++k)
      csv.row({spec.window_times[w], spec.frequencies[k], spec.magnitude[w][k]});
}

inline void write_ridge_csv(const std::string& path, const SpectrogramResult& spec,
                            const DerivedScales& scales) {
  CsvWriter csv(path);
  csv.comment("derived_scales: " + derived_scales_json(scales).dump());
  csv.header({"t", "ridge_Hz", "ridge_magnitude"});
  for (const RidgePoint& pt : spec.ridge)
    csv.row({pt.t, pt.frequency_Hz, pt.magnitude});
}

}  // namespace cli_detail

// Executes one subcommand with a resolved config. Writes the manifest first,
// the data files after, then finalizes the manifest with content hashes.
// Partial outputs are renamed *.partial when a numerical failure aborts a run.
inline int execute(const std::string& subcommand, AppConfig cfg, const CliFlags& flags) {
  namespace fs = std::filesystem;
  try {
    const std::uint64_t seed = flags.seed_set ? flags.seed : cfg.run.seed;
    cfg.run.seed = seed;
    const int threads = parallel::resolve_threads(flags.threads);
    if (!flags.solver.empty()) {
      if (flags.solver != "fp" && flags.solver != "langevin")
        throw ConfigError("--solver must be 'fp' or 'langevin'");
      cfg.scan.solver = flags.solver;
      cfg.pump_ramp.solver = flags.solver;
    }
    const DerivedScales scales = derive_scales(cfg.physical);

    fs::create_directories(flags.out_dir);
    const std::string dir = flags.out_dir;
    RunManifest manifest;
    manifest.command = subcommand;
    manifest.config = config_to_json(cfg);
    manifest.seed = seed;
    manifest.derived_scales = derived_scales_json(scales);
    write_manifest(dir, manifest, false);

    auto out_path = [&](const std::string& name) {
      manifest.outputs.push_back(name);
      return dir + "/" + name;
    };

    try {
      if (subcommand == "langevin-run") {
        LangevinRunConfig rc;
        rc.mode = cfg.run.mode == "inertial" ? AtomMode::inertial : AtomMode::overdamped;
        rc.n_sim = cfg.run.sim_atoms > 0
                       ? cfg.run.sim_atoms
                       : static_cast<std::size_t>(cfg.physical.atom_number);
        rc.n_phys = cfg.physical.atom_number;
        rc.epsilon = scales.epsilon;
        rc.u0 = scales.u0;
        rc.kappa = cfg.physical.kappa;
        rc.pump_alpha = PiecewiseLinear::constant(scales.alpha_plus);
        rc.molasses = {cfg.physical.gamma_fr,
                       scales.has_diffusion ? scales.diffusion_D : 0.0,
                       std::numeric_limits<double>::infinity()};
        rc.seed = seed;
        rc.dt = cfg.run.dt_s;
        rc.duration = cfg.run.duration_s;
        rc.sample_every = cfg.run.sample_every;
        rc.snapshot_times = cfg.run.snapshot_times_s;
        rc.threads = threads;
        rc.init_sigma = rc.mode == AtomMode::inertial ? scales.sigma : 0.0;
        const LangevinRunResult run = run_coupled(rc);
        cli_detail::write_trajectory_csv(out_path("trajectory.csv"), run.traj, scales);
        for (std::size_t i = 0; i < run.snapshots.size(); ++i) {
          char name[32];
          std::snprintf(name, sizeof(name), "theta_%04zu.bin", i);
          cli_detail::write_theta_snapshot(out_path(name), run.snapshots[i], scales);
        }
        for (const auto& w : run.warnings) manifest.warnings.push_back(w);
      } else if (subcommand == "fp-run") {
        FpRunConfig rc;
        rc.params = {scales.epsilon, scales.u0, cfg.physical.gamma_fr,
                     scales.has_diffusion ? scales.diffusion_D : 0.0, cfg.physical.kappa,
                     cfg.physical.atom_number};
        rc.truncation_M = cfg.fp.truncation_M;
        rc.pump_alpha = PiecewiseLinear::constant(scales.alpha_plus);
        rc.dt = cfg.fp.dt_s;
        rc.duration = cfg.fp.duration_s;
        rc.sample_every = cfg.fp.sample_every;
        rc.init_perturbation = Complex(cfg.fp.init_perturbation, 0.0);
        rc.bunching_floor = cfg.fp.bunching_floor < 0.0
                                ? 0.5 / std::sqrt(cfg.physical.atom_number)
                                : cfg.fp.bunching_floor;
        rc.detect_steady = cfg.fp.detect_steady;
        rc.dump_modes = cfg.fp.dump_modes;
        const FpRunResult run = run_fp_coupled(rc);
        cli_detail::write_trajectory_csv(out_path("trajectory.csv"), run.traj, scales);
        if (cfg.fp.dump_modes) {
          CsvWriter csv(out_path("modes.csv"));
          csv.comment("derived_scales: " + derived_scales_json(scales).dump());
          std::vector<std::string> cols{"t"};
          for (std::size_t m = 1; m <= rc.truncation_M; ++m)
            cols.push_back("abs_p" + std::to_string(m));
          csv.header(cols);
          for (const auto& row : run.mode_dump) csv.row(row);
        }
        nlohmann::json steady;
        steady["converged"] = run.converged;
        steady["steady_b_abs"] = run.steady_b;
        steady["steady_time_s"] = run.steady_time;
        write_text_file(out_path("steady.json"), steady.dump(2) + "\n");
        for (const auto& w : run.warnings) manifest.warnings.push_back(w);
      } else if (subcommand == "kuramoto-run") {
        KuramotoRunConfig rc;
        rc.n = cfg.kuramoto.n;
        double omega_ca = cfg.kuramoto.omega_ca_rad_per_s;
        if (omega_ca == 0.0)
          omega_ca = analytic_threshold(make_threshold_system(cfg.physical, scales))
                         .delta_omega_thr;
        rc.coupling_K = cfg.kuramoto.coupling_K != 0.0
                            ? cfg.kuramoto.coupling_K
                            : coupling_constant(cfg.physical, scales, omega_ca);
        if (!kuramoto_good_cavity(cfg.physical.kappa, omega_ca))
          manifest.warnings.push_back(
              "kappa/omega_ca > 0.2: outside the stated validity of the reduction");
        rc.diffusion_D = cfg.kuramoto.diffusion_D_per_s > 0.0 ? cfg.kuramoto.diffusion_D_per_s
                         : scales.has_diffusion              ? scales.diffusion_D
                                                             : 0.0;
        rc.seed = seed;
        rc.dt = cfg.kuramoto.dt_s;
        rc.duration = cfg.kuramoto.duration_s > 0.0
                          ? cfg.kuramoto.duration_s
                          : 40.0 / std::max(rc.diffusion_D, std::abs(rc.coupling_K));
        rc.sample_every = cfg.kuramoto.sample_every;
        rc.threads = threads;
        rc.static_frequencies = cfg.kuramoto.static_frequencies;
        rc.static_freq_std = cfg.kuramoto.static_freq_std;
        const KuramotoRunResult run = run_kuramoto(rc);
        CsvWriter csv(out_path("kuramoto.csv"));
        csv.comment("derived_scales: " + derived_scales_json(scales).dump());
        csv.comment("coupling_K_per_s: " + CsvWriter::format(rc.coupling_K) +
                    ", diffusion_D_per_s: " + CsvWriter::format(rc.diffusion_D));
        csv.header({"t", "b_abs", "psi", "sync_fraction"});
        for (std::size_t i = 0; i < run.traj.t.size(); ++i)
          csv.row({run.traj.t[i], run.traj.b_abs[i], run.traj.psi[i], run.traj.sync_frac[i]});
      } else if (subcommand == "pump-ramp") {
        const PumpRampResult r =
            run_pump_ramp(cfg.physical, cfg.pump_ramp, seed, threads);
        {
          CsvWriter csv(out_path("ramp_timeseries.csv"));
          csv.comment("derived_scales: " + derived_scales_json(scales).dump());
          csv.header({"t", "pump_W", "probe_W", "b_abs"});
          for (std::size_t i = 0; i < r.t.size(); ++i)
            csv.row({r.t[i], r.pump_W[i], r.probe_W[i], r.b_abs[i]});
        }
        {
          CsvWriter csv(out_path("ramp_vs_pump.csv"));
          csv.comment("derived_scales: " + derived_scales_json(scales).dump());
          csv.header({"t", "direction_up", "pump_W", "probe_W", "b_abs"});
          for (std::size_t i = 0; i < r.t.size(); ++i)
            csv.row({r.t[i], r.t[i] <= 0.5 * cfg.pump_ramp.ramp_duration_s ? 1.0 : 0.0,
                     r.pump_W[i], r.probe_W[i], r.b_abs[i]});
        }
        cli_detail::write_spectrogram_csv(out_path("ramp_spectrogram.csv"), r.spec, scales);
        cli_detail::write_ridge_csv(out_path("ramp_ridge.csv"), r.spec, scales);
        nlohmann::json thr;
        thr["analytic_threshold_W"] = r.analytic_threshold_W;
        thr["threshold_up_W"] = r.threshold_up_W;
        thr["threshold_down_W"] = r.threshold_down_W;
        thr["peak_power_W"] = r.peak_power_W;
        write_text_file(out_path("thresholds.json"), thr.dump(2) + "\n");
        if (flags.svg) {
          svg::Series probe{"probe power (W)", "#1f6fb5", r.pump_W, r.probe_W};
          svg::Series bunch{"|b| (scaled)", "#b5541f", r.pump_W, {}};
          bunch.y.reserve(r.b_abs.size());
          double pmax = 0.0;
          for (double v : r.probe_W) pmax = std::max(pmax, v);
          for (double v : r.b_abs) bunch.y.push_back(v * pmax);
          svg::write_line_plot(out_path("ramp_quicklook.svg"), "pump ramp", {probe, bunch});
        }
        for (const auto& w : r.warnings) manifest.warnings.push_back(w);
      } else if (subcommand == "threshold-scan") {
        const ScanResult r = run_threshold_scan(cfg.physical, cfg.scan, threads);
        CsvWriter csv(out_path("threshold_scan.csv"));
        csv.comment("derived_scales: " + derived_scales_json(scales).dump());
        csv.comment("axis: " + r.axis);
        csv.header({"axis_value", "status", "p_thr_analytic_W", "p_thr_numeric_W",
                    "dw_thr_analytic_rad_per_s", "dw_thr_numeric_rad_per_s",
                    "margin_at_numeric", "p_scaled_to_ref_atom_number_W",
                    "p_scaled_to_ref_detuning_W"});
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (const ScanRow& row : r.rows) {
          if (row.ok)
            csv.row_raw({CsvWriter::format(row.axis_value), "ok",
                         CsvWriter::format(row.p_thr_analytic_W),
                         CsvWriter::format(row.p_thr_numeric_W),
                         CsvWriter::format(row.dw_thr_analytic),
                         CsvWriter::format(row.dw_thr_numeric),
                         CsvWriter::format(row.margin_at_numeric),
                         CsvWriter::format(row.scaled_to_ref_atom_number_W),
                         CsvWriter::format(row.scaled_to_ref_detuning_W)});
          else
            csv.row_raw({CsvWriter::format(row.axis_value), "failed", CsvWriter::format(nan),
                         CsvWriter::format(nan), CsvWriter::format(nan), CsvWriter::format(nan),
                         CsvWriter::format(nan), CsvWriter::format(nan),
                         CsvWriter::format(nan)});
        }
        for (const auto& w : r.warnings) manifest.warnings.push_back(w);
      } else if (subcommand == "molasses-off") {
        const MolassesOffResult r =
            run_molasses_off(cfg.physical, cfg.molasses_off, seed, threads);
        cli_detail::write_trajectory_csv(out_path("molasses_timeseries.csv"), r.traj, scales);
        {
          CsvWriter csv(out_path("molasses_ridge.csv"));
          csv.comment("derived_scales: " + derived_scales_json(scales).dump());
          csv.header({"t", "ridge_Hz", "probe_W_ridge", "probe_W_direct"});
          for (std::size_t i = 0; i < r.window_t.size(); ++i)
            csv.row({r.window_t[i], r.ridge_Hz[i], r.probe_W_ridge[i], r.probe_W_direct[i]});
        }
        cli_detail::write_spectrogram_csv(out_path("molasses_spectrogram.csv"), r.spec, scales);
        nlohmann::json res;
        res["off_time_s"] = r.off_time_s;
        res["pre_ridge_Hz"] = r.pre_ridge_Hz;
        res["pre_b_abs"] = r.pre_b_abs;
        res["accelerating"] = r.accelerating;
        res["probe_decreasing"] = r.probe_decreasing;
        res["null_result"] = r.null_result;
        write_text_file(out_path("molasses_result.json"), res.dump(2) + "\n");
        if (flags.svg) {
          svg::Series ridge{"ridge (Hz)", "#1f6fb5", r.window_t, r.ridge_Hz};
          svg::write_line_plot(out_path("molasses_quicklook.svg"), "molasses-off ridge",
                               {ridge});
        }
        for (const auto& w : r.warnings) manifest.warnings.push_back(w);
      } else if (subcommand == "analyze-spectrogram") {
        if (flags.input.empty())
          throw ConfigError("analyze-spectrogram requires --input <trajectory.csv>");
        const Trajectory traj =
            cli_detail::read_trajectory_csv(flags.input, scales.watts_per_photon);
        const BeatTrace trace = beat_trace_from_trajectory(traj, scales.watts_per_photon);
        const SpectrogramResult spec =
            spectrogram(trace, cfg.spectrogram.window_s, cfg.spectrogram.hop_s);
        cli_detail::write_spectrogram_csv(out_path("spectrogram.csv"), spec, scales);
        cli_detail::write_ridge_csv(out_path("ridge.csv"), spec, scales);
        if (flags.svg) {
          svg::Series ridge{"ridge (Hz)", "#1f6fb5", spec.window_times, {}};
          for (const auto& pt : spec.ridge) ridge.y.push_back(pt.frequency_Hz);
          svg::write_line_plot(out_path("ridge_quicklook.svg"), "spectrogram ridge", {ridge});
        }
      } else {
        throw ConfigError("unknown subcommand: " + subcommand);
      }
    } catch (const NumericError& e) {
      for (const auto& name : manifest.outputs) {
        std::error_code ec;
        fs::rename(dir + "/" + name, dir + "/" + name + ".partial", ec);
      }
      if (!e.diagnostic().empty())
        write_text_file(dir + "/diagnostic.json", e.diagnostic() + "\n");
      std::fprintf(stderr, "numerical failure: %s\n", e.what());
      return 3;
    }

    write_manifest(dir, manifest, true);
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}

}  // namespace carl
