#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "carl/constants.hpp"
#include "carl/errors.hpp"
#include "carl/state.hpp"
#include "carl/trajectory.hpp"

// Fourier-Galerkin solver for the overdamped density equation
//
//   dP/dt = (4 i eps U0 a+ / gamma_fr) d[(a-* e^{i theta} - a- e^{-i theta}) P]/d theta
//           + D d^2P/d theta^2
//
// With P(theta) = (1/2pi) sum_m p_m e^{i m theta}, p_{-m} = p_m*, p_0 = 1,
// projecting onto e^{-i m theta} gives the banded hierarchy
//
//   dp_m/dt = a_m (a-* p_{m-1} - a- p_{m+1}) - D m^2 p_m,
//   a_m = -4 eps U0 a+ m / gamma_fr,
//
// which is exact up to the truncation at m = M (p_{M+1} := 0). The bunching
// parameter b = integral of P e^{i theta} over one period equals p_1*.
// Sign conventions match the particle picture: the empirical modes of an
// ensemble are p_m = N^-1 sum_n e^{-i m theta_n}.
//
// Time stepping is Strang-split: exact integrating factor e^{-D m^2 dt/2} for
// the diffusion halves, explicit midpoint (RK2) for the drift ladder. Pure
// diffusion is therefore integrated exactly; the D M^2 stiffness never
// constrains dt.

namespace carl {

struct DistributionState {
  std::vector<Complex> modes;  // p_0 .. p_M, p_0 = 1
  double t = 0.0;

  std::size_t truncation() const { return modes.empty() ? 0 : modes.size() - 1; }
};

struct FpParams {
  double epsilon = 0.0;
  double u0 = 0.0;
  double gamma_fr = 0.0;
  double diffusion_D = 0.0;
  double kappa = 0.0;
  double n_atoms = 0.0;  // field-equation atom number
};

inline Complex bunching(const DistributionState& state) {
  return state.modes.size() > 1 ? std::conj(state.modes[1]) : Complex(0.0, 0.0);
}

inline DistributionState init_distribution_uniform(std::size_t truncation_M) {
  if (truncation_M < 2) throw ConfigError("init_distribution: truncation M must be >= 2");
  DistributionState st;
  st.modes.assign(truncation_M + 1, Complex(0.0, 0.0));
  st.modes[0] = 1.0;
  return st;
}

inline DistributionState init_distribution_perturbed(std::size_t truncation_M,
                                                     Complex amplitude) {
  if (std::abs(amplitude) >= 1.0)
    throw ConfigError("init_distribution: perturbation amplitude must be < 1");
  DistributionState st = init_distribution_uniform(truncation_M);
  st.modes[1] = amplitude;
  return st;
}

// Empirical modes p_m = N^-1 sum_n e^{-i m theta_n}; the m-ladder is built by
// repeated multiplication with e^{-i theta_n} per atom.
inline DistributionState init_distribution_from_ensemble(const EnsembleState& ens,
                                                         std::size_t truncation_M) {
  if (ens.size() == 0) throw ConfigError("init_distribution_from_ensemble: empty ensemble");
  DistributionState st = init_distribution_uniform(truncation_M);
  for (const double th : ens.theta) {
    const Complex unit(std::cos(th), -std::sin(th));
    Complex z = unit;
    for (std::size_t m = 1; m <= truncation_M; ++m) {
      st.modes[m] += z;
      z *= unit;
    }
  }
  const double inv = 1.0 / static_cast<double>(ens.size());
  for (std::size_t m = 1; m <= truncation_M; ++m) st.modes[m] *= inv;
  st.t = ens.t;
  return st;
}

namespace detail {

inline void fp_drift_deriv(const std::vector<Complex>& p, Complex alpha_minus,
                           double coeff, std::vector<Complex>& dp) {
  const std::size_t M = p.size() - 1;
  const Complex ac = std::conj(alpha_minus);
  dp[0] = Complex(0.0, 0.0);
  for (std::size_t m = 1; m <= M; ++m) {
    const Complex upper = m < M ? p[m + 1] : Complex(0.0, 0.0);
    dp[m] = (coeff * static_cast<double>(m)) * (ac * p[m - 1] - alpha_minus * upper);
  }
}

inline void fp_diffuse(std::vector<Complex>& p, double diffusion_D, double dt) {
  const std::size_t M = p.size() - 1;
  for (std::size_t m = 1; m <= M; ++m)
    p[m] *= std::exp(-diffusion_D * static_cast<double>(m * m) * dt);
}

}  // namespace detail

// Advance the mode hierarchy by dt with the field held fixed.
inline void step_fp(DistributionState& state, const FieldState& field,
                    const FpParams& prm, double dt) {
  if (!(prm.gamma_fr > 0.0))
    throw ConfigError("step_fp: gamma_fr must be > 0 (overdamped density equation)");
  if (!(dt > 0.0)) throw NumericError("step_fp: dt must be positive");
  const std::size_t M = state.truncation();
  if (M < 2) throw ConfigError("step_fp: truncation M must be >= 2");

  const double coeff = -4.0 * prm.epsilon * prm.u0 * field.alpha_plus / prm.gamma_fr;
  const double ladder_rate =
      2.0 * std::abs(coeff) * std::abs(field.alpha_minus) * static_cast<double>(M);
  if (dt * ladder_rate > 1.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "step_fp: stability guard: dt = %.3e exceeds %.3e (drift ladder rate %.3e)",
                  dt, 1.0 / ladder_rate, ladder_rate);
    throw NumericError(buf);
  }

  auto& p = state.modes;
  detail::fp_diffuse(p, prm.diffusion_D, 0.5 * dt);

  // midpoint rule on the drift ladder
  static thread_local std::vector<Complex> k1, mid;
  k1.resize(p.size());
  mid.resize(p.size());
  detail::fp_drift_deriv(p, field.alpha_minus, coeff, k1);
  for (std::size_t m = 0; m < p.size(); ++m) mid[m] = p[m] + 0.5 * dt * k1[m];
  detail::fp_drift_deriv(mid, field.alpha_minus, coeff, k1);
  for (std::size_t m = 1; m < p.size(); ++m) p[m] += dt * k1[m];

  detail::fp_diffuse(p, prm.diffusion_D, 0.5 * dt);
  p[0] = 1.0;
  state.t += dt;
}

// P on a uniform theta grid over [0, 2pi). Real by construction; the trapezoid
// integral over the period is exactly 2pi * mean = p_0 = 1.
inline std::vector<std::pair<double, double>> reconstruct_density(
    const DistributionState& state, std::size_t grid_n, double tol_neg = 1e-6) {
  const std::size_t M = state.truncation();
  if (grid_n < 2 * M + 1)
    throw ConfigError("reconstruct_density: grid must have >= 2M+1 points");
  std::vector<std::pair<double, double>> out(grid_n);
  double min_p = 0.0;
  for (std::size_t j = 0; j < grid_n; ++j) {
    const double theta = constants::two_pi * static_cast<double>(j) / static_cast<double>(grid_n);
    double acc = 1.0;
    for (std::size_t m = 1; m <= M; ++m) {
      const double arg = static_cast<double>(m) * theta;
      acc += 2.0 * (state.modes[m].real() * std::cos(arg) - state.modes[m].imag() * std::sin(arg));
    }
    const double val = acc / constants::two_pi;
    min_p = std::min(min_p, val);
    out[j] = {theta, val};
  }
  if (min_p < -tol_neg) {
    // negative excursions beyond the tolerance mean the truncation is too aggressive
    char buf[128];
    std::snprintf(buf, sizeof(buf), "reconstruct_density: P(theta) dips to %.3e (tol %.1e)",
                  min_p, tol_neg);
    throw NumericError(buf);
  }
  return out;
}

// --- coupled run ------------------------------------------------------------

struct FpRunConfig {
  FpParams params;
  std::size_t truncation_M = 64;
  PiecewiseLinear pump_alpha;    // alpha_+(t)
  double dt = 0.0;               // 0 = choose from rates
  double duration = 0.0;
  double dt_factor = 0.02;
  int sample_every = 16;
  Complex init_perturbation{1e-6, 0.0};
  bool init_uniform = false;     // true: no seed perturbation
  double bunching_floor = 0.0;   // finite-N shot-noise floor applied to |p_1|
  bool detect_steady = true;
  double steady_rel_tol = 1e-6;
  bool dump_modes = false;
};

struct FpRunResult {
  Trajectory traj;
  DistributionState final_state;
  FieldState final_field;
  bool converged = false;        // steady |b| reached before the time cap
  double steady_b = 0.0;         // |b| at the end of the run
  double steady_time = 0.0;
  std::vector<std::vector<double>> mode_dump;  // rows: t, |p_1| .. |p_M|
  std::vector<std::string> warnings;
};

inline double suggested_dt_fp(const FpRunConfig& cfg) {
  const FpParams& p = cfg.params;
  const double a_max = cfg.pump_alpha.max_value();
  const double rotation = p.diffusion_D > 0.0 ? std::sqrt(p.diffusion_D * p.kappa) : 0.0;
  double rate = std::max(p.kappa, rotation);
  if (a_max > 0.0 && p.gamma_fr > 0.0) {
    // drift-ladder rate at field saturation |alpha_-| ~ N|U0|a+ / |kappa + i w|
    // with w ~ sqrt(D kappa); the explicit ladder step must resolve it at m = M
    const double alpha_sat = p.n_atoms * std::abs(p.u0) * a_max /
                             std::max(std::hypot(p.kappa, rotation), 1e-300);
    const double ladder = 2.0 * (4.0 * p.epsilon * std::abs(p.u0) * a_max / p.gamma_fr) *
                          alpha_sat * static_cast<double>(cfg.truncation_M);
    rate = std::max(rate, 0.1 * ladder);  // keeps dt * ladder well inside the guard
  }
  if (!(rate > 0.0)) throw ConfigError("suggested_dt_fp: all rates are zero");
  return cfg.dt_factor / rate;
}

// Self-consistent P / alpha_- evolution with the same interleave as the
// Langevin runner: modes advance with alpha_-(t) frozen, then the field takes
// an exponential-Euler step with b(t).
inline FpRunResult run_fp_coupled(const FpRunConfig& cfg) {
  if (!(cfg.duration > 0.0)) throw ConfigError("run_fp_coupled: duration must be positive");
  if (cfg.sample_every < 1) throw ConfigError("run_fp_coupled: sample_every must be >= 1");

  FpRunResult out;
  DistributionState state =
      cfg.init_uniform ? init_distribution_uniform(cfg.truncation_M)
                       : init_distribution_perturbed(cfg.truncation_M, cfg.init_perturbation);
  FieldState field;
  field.alpha_plus = cfg.pump_alpha(0.0);

  double dt = cfg.dt > 0.0 ? cfg.dt : suggested_dt_fp(cfg);
  std::uint64_t n_steps = static_cast<std::uint64_t>(std::ceil(cfg.duration / dt));
  const std::uint64_t se = static_cast<std::uint64_t>(cfg.sample_every);
  n_steps = ((n_steps + se - 1) / se) * se;

  const double n_u0 = cfg.params.n_atoms * cfg.params.u0;
  const std::size_t M = cfg.truncation_M;

  // steady-state detector: relative spread of |b| over a trailing kappa^-1 window
  const double window = cfg.params.kappa > 0.0 ? 1.0 / cfg.params.kappa : cfg.duration;
  std::vector<std::pair<double, double>> recent;  // (t, |b|)
  bool tail_warned = false;

  auto record = [&](double t, Complex b) {
    out.traj.t.push_back(t);
    out.traj.b.push_back(b);
    out.traj.alpha_minus.push_back(field.alpha_minus);
    out.traj.alpha_plus.push_back(field.alpha_plus);
    if (cfg.dump_modes) {
      std::vector<double> row;
      row.reserve(M + 1);
      row.push_back(t);
      for (std::size_t m = 1; m <= M; ++m) row.push_back(std::abs(state.modes[m]));
      out.mode_dump.push_back(std::move(row));
    }
  };

  for (std::uint64_t step = 0; step <= n_steps; ++step) {
    const double t = static_cast<double>(step) * dt;
    state.t = t;
    field.t = t;
    field.alpha_plus = cfg.pump_alpha(t);
    const Complex b = bunching(state);

    if (step % se == 0 || step == n_steps) {
      record(t, b);
      double max_mode = 0.0;
      for (std::size_t m = 1; m <= M; ++m) max_mode = std::max(max_mode, std::abs(state.modes[m]));
      if (!tail_warned && max_mode > 0.0 && std::abs(state.modes[M]) > 1e-3 * max_mode) {
        out.warnings.push_back("truncation tail |p_M| exceeded 1e-3 of max mode; increase M");
        tail_warned = true;
      }
      if (cfg.detect_steady) {
        recent.emplace_back(t, std::abs(b));
        while (recent.size() > 2 && recent.front().first < t - window) recent.erase(recent.begin());
        if (t > 2.0 * window && recent.size() >= 4) {
          double lo = recent.front().second, hi = lo;
          for (const auto& [rt, rb] : recent) {
            lo = std::min(lo, rb);
            hi = std::max(hi, rb);
          }
          if (hi - lo <= cfg.steady_rel_tol * std::max(hi, 1e-12)) {
            out.converged = true;
            out.steady_b = std::abs(b);
            out.steady_time = t;
            break;
          }
        }
      }
    }
    if (step == n_steps) break;

    step_fp(state, field, cfg.params, dt);
    if (cfg.bunching_floor > 0.0) {
      const double p1 = std::abs(state.modes[1]);
      if (p1 < cfg.bunching_floor)
        state.modes[1] = p1 > 0.0 ? state.modes[1] * (cfg.bunching_floor / p1)
                                  : Complex(cfg.bunching_floor, 0.0);
    }
    step_field(field, b, n_u0, cfg.params.kappa, dt);

    if (!std::isfinite(state.modes[1].real()) || !std::isfinite(field.alpha_minus.real()) ||
        !std::isfinite(field.alpha_minus.imag())) {
      char diag[192];
      std::snprintf(diag, sizeof(diag), "{\"t\": %.9e, \"step\": %llu, \"abs_p1\": %.9e}", t,
                    static_cast<unsigned long long>(step), std::abs(state.modes[1]));
      throw NumericError("run_fp_coupled: non-finite state detected", diag);
    }
  }

  if (!out.converged) {
    out.steady_b = out.traj.b.empty() ? 0.0 : std::abs(out.traj.b.back());
    out.steady_time = out.traj.t.empty() ? 0.0 : out.traj.t.back();
    if (cfg.detect_steady) out.warnings.push_back("transient: steady state not reached within duration");
  }
  out.final_state = std::move(state);
  out.final_field = field;
  return out;
}

}  // namespace carl
