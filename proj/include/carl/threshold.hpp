#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "carl/errors.hpp"
#include "carl/fokker_planck.hpp"
#include "carl/langevin.hpp"
#include "carl/units.hpp"

// Lasing-threshold analysis.
//
// Linearizing the mode hierarchy about the uniform state couples only
// (p_1*, alpha_-):
//
//   d/dt [p_1*, a-] = [[-D, -4 eps U0 a+ / gamma_fr], [-i N U0 a+, -kappa]] ...
//
// giving lambda^2 + (D + kappa) lambda + D kappa - i W = 0 with
// W = 4 eps N U0^2 a+^2 / gamma_fr = (2 eps rho)^3 / gamma_fr. The instability
// condition Re lambda > 0 is exactly
//
//   kappa sigma^2 (sigma^2 + kappa gamma_fr)^2 / gamma_fr < (2 eps rho)^6,
//
// and at equality the eigenvalue is purely rotating with |Im lambda| =
// sqrt(D kappa) = sigma sqrt(kappa / gamma_fr). The closed-form threshold pump
//
//   alpha_thr^2 = sqrt(kappa / gamma_fr) sigma^3 / (4 eps N U0^2)
//
// drops the kappa gamma_fr term in the bracket (good-cavity limit
// kappa gamma_fr <= sigma^2); results outside that regime are flagged.

namespace carl {

struct ThresholdSystem {
  double epsilon = 0.0;
  double sigma = 0.0;
  double kappa = 0.0;
  double gamma_fr = 0.0;
  double n_atoms = 0.0;
  double u0 = 0.0;
  double watts_per_photon = 0.0;  // converts alpha^2 to watts; 0 = photon units only
};

inline ThresholdSystem make_threshold_system(const PhysicalParams& p,
                                             const DerivedScales& s) {
  return {s.epsilon, s.sigma, p.kappa, p.gamma_fr, p.atom_number, s.u0, s.watts_per_photon};
}

enum class ThresholdMethod { analytic, numeric_fp, numeric_langevin };

inline const char* to_string(ThresholdMethod m) {
  switch (m) {
    case ThresholdMethod::analytic: return "analytic";
    case ThresholdMethod::numeric_fp: return "numeric-fp";
    case ThresholdMethod::numeric_langevin: return "numeric-langevin";
  }
  return "?";
}

struct ThresholdResult {
  double alpha_plus_thr_sq = 0.0;
  double pump_power_thr_W = 0.0;
  double rho_thr = 0.0;
  double delta_omega_thr = 0.0;  // rad/s
  ThresholdMethod method = ThresholdMethod::analytic;
  double margin = 0.0;           // lasing margin evaluated at the threshold pump
  bool good_cavity = true;       // kappa*gamma_fr <= sigma^2 held
};

// (2 eps rho)^3 without cube roots: equals 4 eps N U0^2 alpha+^2.
inline double coupling_cubed(const ThresholdSystem& sys, double alpha_plus_sq) {
  return 4.0 * sys.epsilon * sys.n_atoms * sys.u0 * sys.u0 * alpha_plus_sq;
}

inline double rho_from_alpha_sq(const ThresholdSystem& sys, double alpha_plus_sq) {
  return std::cbrt(sys.n_atoms * sys.u0 * sys.u0 * alpha_plus_sq /
                   (2.0 * sys.epsilon * sys.epsilon));
}

// Signed lasing margin from the full condition: (L - R)/(L + R) with
// L = (2 eps rho)^6 and R = kappa sigma^2 (sigma^2 + kappa gamma_fr)^2/gamma_fr.
// Positive means lasing; -1 at zero pump; +1 for sigma = 0 (no velocity
// spread: always above threshold).
inline double lasing_margin(const ThresholdSystem& sys, double alpha_plus_sq) {
  if (!(sys.gamma_fr > 0.0)) throw ConfigError("lasing_margin: gamma_fr must be > 0");
  const double w3 = coupling_cubed(sys, alpha_plus_sq);
  const double lhs = w3 * w3;
  const double s2 = sys.sigma * sys.sigma;
  const double rhs = sys.kappa * s2 * (s2 + sys.kappa * sys.gamma_fr) *
                     (s2 + sys.kappa * sys.gamma_fr) / sys.gamma_fr;
  if (rhs == 0.0) return 1.0;   // sigma = 0 sentinel
  if (lhs == 0.0) return -1.0;  // no pump / no coupling
  return (lhs - rhs) / (lhs + rhs);
}

// Pump photon number at the exact Eq.-(5) equality point.
inline double equality_alpha_sq(const ThresholdSystem& sys) {
  if (!(sys.gamma_fr > 0.0) || !(sys.sigma > 0.0))
    throw ConfigError("equality_alpha_sq: gamma_fr and sigma must be > 0");
  if (sys.u0 == 0.0 || !(sys.n_atoms > 0.0))
    throw ConfigError("equality_alpha_sq: no atom-field coupling");
  const double s2 = sys.sigma * sys.sigma;
  return sys.sigma * std::sqrt(sys.kappa / sys.gamma_fr) * (s2 + sys.kappa * sys.gamma_fr) /
         (4.0 * sys.epsilon * sys.n_atoms * sys.u0 * sys.u0);
}

inline ThresholdResult analytic_threshold(const ThresholdSystem& sys) {
  if (!(sys.gamma_fr > 0.0) || !(sys.sigma > 0.0))
    throw ConfigError("analytic_threshold: gamma_fr and sigma must be > 0");
  if (sys.u0 == 0.0 || !(sys.n_atoms > 0.0))
    throw ConfigError("analytic_threshold: no atom-field coupling");
  ThresholdResult r;
  const double ratio = sys.kappa / sys.gamma_fr;
  r.alpha_plus_thr_sq = std::sqrt(ratio) * sys.sigma * sys.sigma * sys.sigma /
                        (4.0 * sys.epsilon * sys.n_atoms * sys.u0 * sys.u0);
  r.pump_power_thr_W = r.alpha_plus_thr_sq * sys.watts_per_photon;
  r.rho_thr = std::pow(ratio, 1.0 / 6.0) * sys.sigma / (2.0 * sys.epsilon);
  r.delta_omega_thr = sys.sigma * std::sqrt(ratio);
  r.method = ThresholdMethod::analytic;
  r.margin = lasing_margin(sys, r.alpha_plus_thr_sq);
  r.good_cavity = sys.kappa * sys.gamma_fr <= sys.sigma * sys.sigma;
  return r;
}

struct GrowthRate {
  Complex dominant;
  Complex subdominant;
};

// Eigenvalues of the linearized (p_1*, alpha_-) system.
inline GrowthRate growth_rate_linearized(const ThresholdSystem& sys, double alpha_plus_sq) {
  if (!(sys.gamma_fr > 0.0)) throw ConfigError("growth_rate_linearized: gamma_fr must be > 0");
  const double diff_d = sys.sigma * sys.sigma / sys.gamma_fr;
  const double w3 = coupling_cubed(sys, alpha_plus_sq) / sys.gamma_fr;
  const Complex disc = Complex((diff_d - sys.kappa) * (diff_d - sys.kappa), 4.0 * w3);
  const Complex root = std::sqrt(disc);  // principal branch: Re(root) >= 0
  const double half_trace = -0.5 * (diff_d + sys.kappa);
  GrowthRate g;
  g.dominant = half_trace + 0.5 * root;
  g.subdominant = half_trace - 0.5 * root;
  return g;
}

// --- numeric threshold ------------------------------------------------------

struct NumericThresholdOptions {
  double rel_tol = 1e-3;        // bisection interval width / upper edge
  double fp_perturbation = 1e-8;
  std::size_t fp_truncation = 32;
  double fp_dt_factor = 0.01;
  double duration_factor = 30.0;  // fit window in units of the slow timescale
  std::size_t langevin_n_sim = 0;  // 0 = n_atoms
  double floor_factor = 3.0;       // times the 1/sqrt(N) shot-noise floor
  std::uint64_t seed = 20260809;
  int threads = 1;
  int max_widen = 8;
};

struct FpGrowthMeasurement {
  double growth = 0.0;    // d ln|p_1| / dt over the fit window
  double rotation = 0.0;  // |d arg(p_1) / dt|
};

// Growth rate of |p_1| from an actual (nonlinear) FP integration seeded in the
// linear regime. This is the measurement side of the analytic/numeric
// cross-validation; it shares no algebra with growth_rate_linearized.
inline FpGrowthMeasurement measure_fp_growth(const ThresholdSystem& sys, double alpha_plus_sq,
                                             const NumericThresholdOptions& opt = {}) {
  const double diff_d = sys.sigma * sys.sigma / sys.gamma_fr;
  const double slow_rate = std::max(std::sqrt(diff_d * sys.kappa), 1e-3 * sys.kappa);
  const double t_transient = 10.0 / (diff_d + sys.kappa);
  const double t_fit = opt.duration_factor / slow_rate;

  FpRunConfig cfg;
  cfg.params = {sys.epsilon, sys.u0, sys.gamma_fr, diff_d, sys.kappa, sys.n_atoms};
  cfg.truncation_M = opt.fp_truncation;
  cfg.pump_alpha = PiecewiseLinear::constant(std::sqrt(alpha_plus_sq));
  cfg.dt_factor = opt.fp_dt_factor;
  cfg.duration = t_transient + t_fit;
  cfg.sample_every = 4;
  cfg.init_perturbation = Complex(opt.fp_perturbation, 0.0);
  cfg.detect_steady = false;

  const FpRunResult run = run_fp_coupled(cfg);

  // least-squares slope of ln|p_1| and unwrapped arg(p_1) past the transient
  double sum_t = 0.0, sum_tt = 0.0, sum_l = 0.0, sum_tl = 0.0, sum_a = 0.0, sum_ta = 0.0;
  std::size_t count = 0;
  double prev_arg = 0.0, unwrapped = 0.0;
  bool first = true;
  for (std::size_t i = 0; i < run.traj.size(); ++i) {
    const Complex b = run.traj.b[i];
    const double mag = std::abs(b);
    const double arg = std::arg(b);
    if (!first) {
      double d = arg - prev_arg;
      while (d > constants::pi) d -= constants::two_pi;
      while (d < -constants::pi) d += constants::two_pi;
      unwrapped += d;
    }
    prev_arg = arg;
    first = false;
    if (run.traj.t[i] < t_transient || mag <= 0.0) continue;
    const double t = run.traj.t[i];
    const double l = std::log(mag);
    sum_t += t;
    sum_tt += t * t;
    sum_l += l;
    sum_tl += t * l;
    sum_a += unwrapped;
    sum_ta += t * unwrapped;
    ++count;
  }
  if (count < 8) throw NumericError("measure_fp_growth: too few samples in fit window");
  const double denom = static_cast<double>(count) * sum_tt - sum_t * sum_t;
  FpGrowthMeasurement m;
  m.growth = (static_cast<double>(count) * sum_tl - sum_t * sum_l) / denom;
  m.rotation = std::abs((static_cast<double>(count) * sum_ta - sum_t * sum_a) / denom);
  return m;
}

// Time-averaged |b| of an overdamped Langevin run (second half of the run).
inline double measure_langevin_steady_b(const ThresholdSystem& sys, double alpha_plus_sq,
                                        const NumericThresholdOptions& opt = {}) {
  const double diff_d = sys.sigma * sys.sigma / sys.gamma_fr;
  LangevinRunConfig cfg;
  cfg.mode = AtomMode::overdamped;
  cfg.n_sim = opt.langevin_n_sim > 0 ? opt.langevin_n_sim
                                     : static_cast<std::size_t>(sys.n_atoms);
  cfg.n_phys = sys.n_atoms;
  cfg.epsilon = sys.epsilon;
  cfg.u0 = sys.u0;
  cfg.kappa = sys.kappa;
  cfg.pump_alpha = PiecewiseLinear::constant(std::sqrt(alpha_plus_sq));
  cfg.molasses = {sys.gamma_fr, diff_d, std::numeric_limits<double>::infinity()};
  cfg.seed = opt.seed;
  cfg.duration = opt.duration_factor / sys.kappa;
  cfg.sample_every = 8;
  cfg.threads = opt.threads;
  const LangevinRunResult run = run_coupled(cfg);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = run.traj.size() / 2; i < run.traj.size(); ++i) {
    acc += std::abs(run.traj.b[i]);
    ++count;
  }
  return count > 0 ? acc / static_cast<double>(count) : 0.0;
}

enum class ThresholdSolver { fp, langevin };

// Bisection on alpha_+^2. FP mode changes sign on the measured growth rate of
// |p_1|; Langevin mode on the steady |b| crossing floor_factor / sqrt(N)
// (|b| of an unbunched ensemble is Rayleigh with scale 1/sqrt(N), so the floor
// must scale with N).
inline ThresholdResult numeric_threshold(ThresholdSolver solver, const ThresholdSystem& sys,
                                         double bracket_lo, double bracket_hi,
                                         const NumericThresholdOptions& opt = {}) {
  if (!(bracket_lo > 0.0) || !(bracket_hi > bracket_lo))
    throw ConfigError("numeric_threshold: need 0 < bracket_lo < bracket_hi");

  const double n_for_floor = opt.langevin_n_sim > 0 ? static_cast<double>(opt.langevin_n_sim)
                                                    : sys.n_atoms;
  const double floor = opt.floor_factor / std::sqrt(n_for_floor);
  double last_rotation = 0.0;
  auto above = [&](double alpha_sq) {
    if (solver == ThresholdSolver::fp) {
      const FpGrowthMeasurement m = measure_fp_growth(sys, alpha_sq, opt);
      last_rotation = m.rotation;
      return m.growth > 0.0;
    }
    return measure_langevin_steady_b(sys, alpha_sq, opt) > floor;
  };

  double lo = bracket_lo, hi = bracket_hi;
  int widen = 0;
  while (above(lo)) {
    lo /= 4.0;
    if (++widen > opt.max_widen)
      throw NumericError("numeric_threshold: no sign change (still lasing at tiny pump)",
                         "{\"bracket_lo\": " + std::to_string(lo) + "}");
  }
  widen = 0;
  while (!above(hi)) {
    hi *= 4.0;
    if (++widen > opt.max_widen)
      throw NumericError("numeric_threshold: no sign change in maximal bracket",
                         "{\"bracket_hi\": " + std::to_string(hi) + "}");
  }
  while ((hi - lo) / hi > opt.rel_tol) {
    const double mid = 0.5 * (lo + hi);
    (above(mid) ? hi : lo) = mid;
  }

  ThresholdResult r;
  r.alpha_plus_thr_sq = 0.5 * (lo + hi);
  r.pump_power_thr_W = r.alpha_plus_thr_sq * sys.watts_per_photon;
  r.rho_thr = rho_from_alpha_sq(sys, r.alpha_plus_thr_sq);
  if (solver == ThresholdSolver::fp) {
    if (last_rotation == 0.0) last_rotation = measure_fp_growth(sys, hi, opt).rotation;
    r.delta_omega_thr = last_rotation;
  } else {
    r.delta_omega_thr = sys.sigma * std::sqrt(sys.kappa / sys.gamma_fr);
  }
  r.method = solver == ThresholdSolver::fp ? ThresholdMethod::numeric_fp
                                           : ThresholdMethod::numeric_langevin;
  r.margin = lasing_margin(sys, r.alpha_plus_thr_sq);
  r.good_cavity = sys.kappa * sys.gamma_fr <= sys.sigma * sys.sigma;
  return r;
}

}  // namespace carl
