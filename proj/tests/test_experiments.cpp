#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "carl/cli.hpp"
#include "carl/experiments.hpp"

using namespace carl;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("carl_exp_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("coupling back-out inverts the closed-form threshold exactly") {
  PhysicalParams p;
  p.u0_override = -0.05;
  const DerivedScales s = derive_scales(p);
  const ThresholdResult thr = analytic_threshold(make_threshold_system(p, s));

  const BackoutResult r = backout_coupling(thr.pump_power_thr_W, p);
  CHECK_THAT(r.u0, Catch::Matchers::WithinRel(-0.05, 1e-12));
  CHECK_THAT(r.g * r.g, Catch::Matchers::WithinRel(std::abs(0.05 * p.detuning_a), 1e-12));

  SECTION("doubling N halves the backed-out U0^2 at fixed threshold power") {
    PhysicalParams p2 = p;
    p2.atom_number *= 2.0;
    const BackoutResult r2 = backout_coupling(thr.pump_power_thr_W, p2);
    CHECK_THAT(r2.u0 * r2.u0, Catch::Matchers::WithinRel(0.5 * r.u0 * r.u0, 1e-12));
  }
}

TEST_CASE("back-out at the experiment operating point") {
  PhysicalParams p;  // N = 1e6, Delta_a = -2pi*1.7 THz, T = 200 uK, gamma = 4 kappa
  const BackoutResult r = backout_coupling(4.0, p);
  CHECK_THAT(r.u0, Catch::Matchers::WithinRel(-0.07955089506918671, 1e-9));
  CHECK_THAT(r.g, Catch::Matchers::WithinRel(921800.4803762516, 1e-9));
  // g/2pi of order 1e2 kHz
  const double g_kHz = r.g / constants::two_pi / 1e3;
  CHECK(g_kHz > 50.0);
  CHECK(g_kHz < 500.0);

  CHECK_THROWS_AS(backout_coupling(-1.0, p), ConfigError);
  PhysicalParams zero_det = p;
  zero_det.detuning_a = 0.0;
  CHECK_THROWS_AS(backout_coupling(4.0, zero_det), ConfigError);
}

TEST_CASE("scan points hold the Rabi frequency fixed along the detuning axis") {
  PhysicalParams base;
  const DerivedScales s0 = derive_scales(base);
  const double g_sq = s0.u0 * base.detuning_a;
  for (const double det : {-2.0 * constants::two_pi * 1e12, -0.8 * constants::two_pi * 1e12}) {
    const PhysicalParams p = params_for_scan_point(base, "detuning", det);
    const DerivedScales s = derive_scales(p);
    CHECK_THAT(s.u0 * p.detuning_a, Catch::Matchers::WithinRel(g_sq, 1e-12));
  }
}

TEST_CASE("onset detector recovers a synthetic quadratic-onset threshold") {
  // physical shape near threshold: probe ~ pump * (pump - thr)
  std::vector<double> pump, probe;
  for (int i = 0; i < 400; ++i) {
    const double p = 10.0 * i / 399.0;
    pump.push_back(p);
    probe.push_back(std::max(0.0, p * (p - 4.0)) * 0.01 + 1e-9);
  }
  const OnsetEstimate est = detect_probe_onset(pump, probe);
  REQUIRE(est.found);
  CHECK_THAT(est.threshold_pump_W, Catch::Matchers::WithinRel(4.0, 0.01));
}

TEST_CASE("threshold scan over atom number follows the 1/N law", "[slow]") {
  PhysicalParams base;
  ScanSection scan;
  scan.axis = "atom_number";
  scan.values = {3e5, 1e6, 3e6};
  const ScanResult r = run_threshold_scan(base, scan, 2);
  REQUIRE(r.rows.size() == 3);
  for (const ScanRow& row : r.rows) {
    REQUIRE(row.ok);
    // P_thr * N is constant when only N varies
    CHECK_THAT(row.p_thr_numeric_W * row.axis_value,
               Catch::Matchers::WithinRel(r.rows[1].p_thr_numeric_W * 1e6, 0.02));
    // scaled-to-reference column collapses the law to a constant
    CHECK_THAT(row.scaled_to_ref_atom_number_W,
               Catch::Matchers::WithinRel(r.rows[1].scaled_to_ref_atom_number_W, 0.02));
  }
}

TEST_CASE("scan failures are recorded as gaps, not aborts") {
  PhysicalParams base;
  base.u0_override = 0.0;  // no coupling anywhere: every point fails
  ScanSection scan;
  scan.axis = "atom_number";
  scan.values = {1e5, 1e6};
  const ScanResult r = run_threshold_scan(base, scan, 1);
  REQUIRE(r.rows.size() == 2);
  CHECK_FALSE(r.rows[0].ok);
  CHECK_FALSE(r.rows[1].ok);
  CHECK(r.warnings.size() == 2);
}

TEST_CASE("pump ramp (FP solver): sub-threshold floor, onset near analytic", "[slow]") {
  // scaled units (kappa = 1 rad/s): an adiabatic ramp is ~100s of 1/kappa,
  // which is cheap here and hopeless at lab rates. Critical slowing makes the
  // onset estimate lag on faster ramps.
  PhysicalParams p;
  p.kappa = 1.0;
  p.gamma_fr = 4.0;
  p.u0_override = -1e-3;
  {
    // temperature realizing sigma = sqrt(D * gamma_fr) with D = 12
    const double k = constants::two_pi / p.wavelength_m;
    const double sigma = std::sqrt(12.0 * p.gamma_fr);
    const double v = sigma / (2.0 * k);
    p.temperature_K = p.atomic_mass_kg * v * v / constants::k_boltzmann;
  }
  PumpRampSection settings;
  settings.ramp_duration_s = 1000.0;
  settings.truncation_M = 32;
  const PumpRampResult r = run_pump_ramp(p, settings, 1, 2);

  REQUIRE(r.t.size() > 100);
  CHECK(r.peak_power_W > r.analytic_threshold_W);
  CHECK(r.warnings.empty());  // adiabaticity guard satisfied

  // on the up-leg below threshold the bunching sits at the finite-N floor
  const double floor_b = 0.5 / std::sqrt(p.atom_number);
  const std::size_t half = r.t.size() / 2;
  for (std::size_t i = 0; i < half; ++i)
    if (r.pump_W[i] < 0.95 * r.analytic_threshold_W) CHECK(r.b_abs[i] < 2.5 * floor_b);

  // the probe switches on near the threshold on both ramp legs; at this ramp
  // speed the up-leg still carries visible critical-slowing lag (smoke bound;
  // the acceptance suite runs a slower ramp with tighter bounds)
  REQUIRE(std::isfinite(r.threshold_up_W));
  REQUIRE(std::isfinite(r.threshold_down_W));
  CHECK(r.threshold_up_W > 0.75 * r.analytic_threshold_W);
  CHECK(r.threshold_up_W < 1.30 * r.analytic_threshold_W);
  CHECK(r.threshold_down_W > 0.75 * r.analytic_threshold_W);
  CHECK(r.threshold_down_W < 1.30 * r.analytic_threshold_W);

  // bunching grows monotonically (within sampling noise) above threshold on the up-leg
  double prev = 0.0;
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < half; ++i) {
    if (r.pump_W[i] > 1.1 * r.analytic_threshold_W) {
      if (r.b_abs[i] < prev - 1e-3) monotone = false;
      prev = std::max(prev, r.b_abs[i]);
    }
  }
  CHECK(monotone);
}

TEST_CASE("molasses-off driver: viscous steady state then acceleration", "[slow]") {
  PhysicalParams p;
  p.pump_power_W = 10.0;  // 2.5x the 4 W threshold
  MolassesOffSection settings;
  settings.prep_duration_s = 0.2e-3;
  settings.post_duration_s = 0.4e-3;
  settings.sim_atoms = 256;
  settings.window_s = 0.06e-3;
  settings.hop_s = 0.03e-3;
  const MolassesOffResult r = run_molasses_off(p, settings, 3, 2);

  CHECK_FALSE(r.null_result);
  REQUIRE(std::isfinite(r.pre_ridge_Hz));
  // viscous equilibrium rides near the threshold frequency band
  CHECK(r.pre_ridge_Hz > 100e3);
  CHECK(r.pre_ridge_Hz < 260e3);

  // after the switch the latest valid ridge exceeds the pre-switch one
  double last_valid = 0.0;
  for (std::size_t i = 0; i < r.window_t.size(); ++i)
    if (r.window_t[i] > r.off_time_s && std::isfinite(r.ridge_Hz[i]))
      last_valid = r.ridge_Hz[i];
  CHECK(last_valid > r.pre_ridge_Hz);
}

TEST_CASE("below-threshold molasses-off control reports a null result") {
  PhysicalParams p;
  p.pump_power_W = 0.5;  // far below the 4 W threshold
  MolassesOffSection settings;
  settings.prep_duration_s = 0.1e-3;
  settings.post_duration_s = 0.15e-3;
  settings.sim_atoms = 128;
  settings.window_s = 0.05e-3;
  settings.hop_s = 0.025e-3;
  const MolassesOffResult r = run_molasses_off(p, settings, 4, 2);
  CHECK(r.null_result);
  CHECK_FALSE(r.accelerating);
}

TEST_CASE("execute: fp-run below threshold exits 0 with a floor dataset") {
  const fs::path dir = scratch_dir("fp_below");
  AppConfig cfg;
  cfg.physical.pump_power_W = 1.0;  // 0.25x threshold
  cfg.fp.duration_s = 2e-4;
  cfg.fp.truncation_M = 32;
  cfg.fp.init_perturbation = 1e-4;
  CliFlags flags;
  flags.out_dir = dir.string();
  REQUIRE(execute("fp-run", cfg, flags) == 0);

  std::ifstream steady(dir / "steady.json");
  REQUIRE(steady.good());
  nlohmann::json j;
  steady >> j;
  CHECK(j.at("steady_b_abs").get<double>() < 1e-3);
  CHECK(fs::exists(dir / "trajectory.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("manifest reproducibility: same seed, any thread count, re-execution") {
  const fs::path dir1 = scratch_dir("repro1");
  const fs::path dir2 = scratch_dir("repro2");
  const fs::path dir3 = scratch_dir("repro3");

  AppConfig cfg;
  cfg.run.mode = "overdamped";
  cfg.run.duration_s = 5e-5;
  cfg.run.sim_atoms = 2000;
  cfg.run.sample_every = 32;
  cfg.run.seed = 777;

  CliFlags f1;
  f1.out_dir = dir1.string();
  f1.threads = 1;
  REQUIRE(execute("langevin-run", cfg, f1) == 0);

  CliFlags f2;
  f2.out_dir = dir2.string();
  f2.threads = 2;
  REQUIRE(execute("langevin-run", cfg, f2) == 0);

  CHECK(hash_file((dir1 / "trajectory.csv").string()) ==
        hash_file((dir2 / "trajectory.csv").string()));

  // re-execution from the manifest reproduces the files bit-identically
  const AppConfig from_manifest =
      load_and_validate_config((dir1 / "manifest.json").string());
  CliFlags f3;
  f3.out_dir = dir3.string();
  f3.threads = 2;
  REQUIRE(execute("langevin-run", from_manifest, f3) == 0);
  CHECK(hash_file((dir1 / "trajectory.csv").string()) ==
        hash_file((dir3 / "trajectory.csv").string()));
  CHECK(hash_file((dir1 / "manifest.json").string()) ==
        hash_file((dir3 / "manifest.json").string()));
}

TEST_CASE("binary theta snapshots carry the documented layout") {
  const fs::path dir = scratch_dir("snap");
  AppConfig cfg;
  cfg.run.mode = "inertial";
  cfg.run.duration_s = 2e-5;
  cfg.run.sim_atoms = 64;
  cfg.run.snapshot_times_s = {1e-5};
  CliFlags flags;
  flags.out_dir = dir.string();
  REQUIRE(execute("langevin-run", cfg, flags) == 0);

  std::ifstream in(dir / "theta_0000.bin", std::ios::binary);
  REQUIRE(in.good());
  char magic[8];
  in.read(magic, 8);
  CHECK(std::string(magic, 8) == "CARLSNAP");
  std::uint32_t version = 0, json_len = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&json_len), 4);
  CHECK(version == 1);
  std::string json(json_len, '\0');
  in.read(json.data(), json_len);
  CHECK(nlohmann::json::parse(json).contains("epsilon_rad_per_s"));
  std::uint64_t n = 0;
  double t = 0.0;
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&t), 8);
  CHECK(n == 64);
  CHECK_THAT(t, Catch::Matchers::WithinAbs(1e-5, 1e-6));
  std::vector<double> theta(n);
  in.read(reinterpret_cast<char*>(theta.data()), static_cast<std::streamsize>(8 * n));
  REQUIRE(in.good());
  for (const double th : theta) CHECK(std::isfinite(th));
}

TEST_CASE("analyze-spectrogram reproduces the ridge from a written trajectory") {
  const fs::path dir = scratch_dir("analyze");
  AppConfig cfg;
  cfg.physical.pump_power_W = 10.0;
  cfg.run.mode = "inertial";
  cfg.run.duration_s = 2.5e-4;
  cfg.run.sim_atoms = 256;
  cfg.run.sample_every = 8;
  CliFlags flags;
  flags.out_dir = dir.string();
  REQUIRE(execute("langevin-run", cfg, flags) == 0);

  AppConfig cfg2 = cfg;
  cfg2.spectrogram.window_s = 0.06e-3;
  cfg2.spectrogram.hop_s = 0.03e-3;
  CliFlags flags2;
  flags2.out_dir = (dir / "spec").string();
  flags2.input = (dir / "trajectory.csv").string();
  REQUIRE(execute("analyze-spectrogram", cfg2, flags2) == 0);
  CHECK(fs::exists(dir / "spec" / "spectrogram.csv"));
  CHECK(fs::exists(dir / "spec" / "ridge.csv"));

  // the beat of a viscous steady state rides in the 100-260 kHz band
  std::ifstream ridge(dir / "spec" / "ridge.csv");
  std::string line;
  std::getline(ridge, line);  // comment
  std::getline(ridge, line);  // header
  std::size_t valid = 0;
  while (std::getline(ridge, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const double f = std::strtod(line.substr(c1 + 1, c2 - c1 - 1).c_str(), nullptr);
    if (std::isfinite(f)) {
      ++valid;
      CHECK(f > 50e3);
      CHECK(f < 400e3);
    }
  }
  CHECK(valid > 3);
}
