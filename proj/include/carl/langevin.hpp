#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "carl/errors.hpp"
#include "carl/parallel.hpp"
#include "carl/rng.hpp"
#include "carl/state.hpp"
#include "carl/trajectory.hpp"
#include "carl/units.hpp"

// Stochastic atom-field dynamics:
//
//   theta_n'' = 4 eps i U0 a+ (a- e^{-i theta_n} - a-* e^{i theta_n})
//               - gamma_fr theta_n' + xi_n
//   a-'       = -kappa a- - i N U0 a+ b,     b = N^-1 sum e^{i theta_n}
//
// The deterministic force is real: 4 eps i U0 a+ (z - z*) with
// z = a- e^{-i theta} equals -8 eps U0 a+ Im(a- e^{-i theta}).
// Integration is Euler-Maruyama for the atoms and exponential-Euler for the
// field. The overdamped variant eliminates theta'' (strong-friction limit):
//
//   theta_n' = -(8 eps U0 a+ / gamma_fr) Im(a- e^{-i theta_n}) + xi_n/gamma_fr

namespace carl {

struct Coupling {
  double epsilon = 0.0;
  double u0 = 0.0;
  double kappa = 0.0;
};

namespace detail {

// Im(a e^{-i theta}) given cos(theta), sin(theta)
inline double im_rotated(Complex a, double c, double s) {
  return a.imag() * c - a.real() * s;
}

inline void require_dt(double dt, double rate_max, double guard_factor,
                       const char* who) {
  if (!(dt > 0.0)) throw NumericError(std::string(who) + ": dt must be positive");
  if (rate_max > 0.0 && dt * rate_max > guard_factor) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%s: stability guard: dt = %.3e exceeds %.3e (= %.2f / max rate %.3e)",
                  who, dt, guard_factor / rate_max, guard_factor, rate_max);
    throw NumericError(buf);
  }
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

// theta_n i.i.d. uniform on [0, 2pi); theta_dot_n i.i.d. Gaussian with
// std = sigma(T) = 2k sqrt(kB T / m). Deterministic given seed.
inline EnsembleState sample_initial_ensemble(std::size_t n, double temperature_K,
                                             const DerivedScales& scales,
                                             std::uint64_t seed) {
  if (n == 0) throw ConfigError("sample_initial_ensemble: n must be >= 1");
  const double sigma = sigma_at_temperature(temperature_K, scales);
  EnsembleState state;
  state.theta.resize(n);
  state.theta_dot.resize(n);
  const rng::Draw pos{seed, rng::Stream::init_position};
  const rng::Draw vel{seed, rng::Stream::init_velocity};
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::uint32_t>(i);
    state.theta[i] = constants::two_pi * pos.uniform01(idx);
    state.theta_dot[i] = sigma * vel.normal(idx);
  }
  return state;
}

// One Euler-Maruyama step of the inertial equation. Velocity kick variance
// is 2 gamma_fr^2 D dt per atom, independent across atoms and steps.
inline void step_inertial(EnsembleState& state, const FieldState& field,
                          const NoiseSpec& noise, const Coupling& cpl, double dt,
                          std::uint64_t step_index, double guard_factor = 0.05) {
  if (!state.inertial() || state.theta_dot.size() != state.theta.size())
    throw ConfigError("step_inertial: state must carry velocities");
  const double force_amp =
      8.0 * std::abs(cpl.epsilon * cpl.u0) * field.alpha_plus * std::abs(field.alpha_minus);
  const double rate = std::max({noise.gamma_fr, cpl.kappa, std::sqrt(force_amp),
                                detail::max_abs(state.theta_dot)});
  detail::require_dt(dt, rate, guard_factor, "step_inertial");

  const double c_force = -8.0 * cpl.epsilon * cpl.u0 * field.alpha_plus;
  const double kick_std =
      noise.gamma_fr * std::sqrt(2.0 * std::max(noise.diffusion_D, 0.0) * dt);
  const rng::Draw kick{noise.seed, rng::Stream::langevin_kick};
  const std::size_t n = state.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double th = state.theta[i];
    const double v = state.theta_dot[i];
    const double force = c_force * detail::im_rotated(field.alpha_minus, std::cos(th), std::sin(th));
    double v_new = v + dt * (force - noise.gamma_fr * v);
    if (kick_std > 0.0)
      v_new += kick_std * kick.normal(static_cast<std::uint32_t>(i), step_index);
    state.theta[i] = th + dt * v;
    state.theta_dot[i] = v_new;
  }
  state.t += dt;
}

// One Euler-Maruyama step of the overdamped equation; position kick variance
// is 2 D dt (the xi/gamma_fr scaling).
inline void step_overdamped(EnsembleState& state, const FieldState& field,
                            const NoiseSpec& noise, const Coupling& cpl, double dt,
                            std::uint64_t step_index, double guard_factor = 0.05) {
  if (!(noise.gamma_fr > 0.0))
    throw ConfigError("step_overdamped: gamma_fr must be > 0 (overdamped limit undefined)");
  const double drift_amp = 8.0 * std::abs(cpl.epsilon * cpl.u0) * field.alpha_plus *
                           std::abs(field.alpha_minus) / noise.gamma_fr;
  const double rate = std::max({cpl.kappa, drift_amp, std::max(noise.diffusion_D, 0.0)});
  detail::require_dt(dt, rate, guard_factor, "step_overdamped");

  const double c_drift = -8.0 * cpl.epsilon * cpl.u0 * field.alpha_plus / noise.gamma_fr;
  const double kick_std = std::sqrt(2.0 * std::max(noise.diffusion_D, 0.0) * dt);
  const rng::Draw kick{noise.seed, rng::Stream::langevin_kick};
  const std::size_t n = state.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double th = state.theta[i];
    double next = th + dt * c_drift * detail::im_rotated(field.alpha_minus, std::cos(th), std::sin(th));
    if (kick_std > 0.0)
      next += kick_std * kick.normal(static_cast<std::uint32_t>(i), step_index);
    state.theta[i] = next;
  }
  state.t += dt;
}

// --- coupled run ------------------------------------------------------------

enum class AtomMode { inertial, overdamped };

struct LangevinRunConfig {
  AtomMode mode = AtomMode::overdamped;
  std::size_t n_sim = 0;       // simulated macro-particles
  double n_phys = 0.0;         // atom number entering the field equation
  double epsilon = 0.0;
  double u0 = 0.0;             // physical U0; macro-particle rescaling is internal
  double kappa = 0.0;
  PiecewiseLinear pump_alpha;  // alpha_+(t)
  MolassesSchedule molasses;
  std::uint64_t seed = 0;
  double dt = 0.0;             // 0 = choose from rates
  double duration = 0.0;
  double dt_factor = 0.02;
  double guard_factor = 0.05;
  int sample_every = 16;
  std::vector<double> snapshot_times;
  int threads = 1;
  double init_sigma = 0.0;     // std of initial theta_dot (inertial mode)
  bool adiabatic_field = false;  // slave alpha_- to b at rotation omega_ca
  double omega_ca = 0.0;
};

struct LangevinRunResult {
  Trajectory traj;
  std::vector<ThetaSnapshot> snapshots;
  EnsembleState final_state;
  FieldState final_field;
  std::vector<std::string> warnings;
};

inline double suggested_dt(const LangevinRunConfig& cfg, double sigma_scale) {
  const double a_max = cfg.pump_alpha.max_value();
  const double w = std::sqrt(cfg.n_phys) * std::abs(cfg.u0) * a_max;  // sqrt(N) U0 a+
  const double coupling_rate = std::sqrt(8.0 * cfg.epsilon * w);      // ~ sqrt((2 eps rho)^3 / ...)
  double rate = std::max({cfg.kappa, cfg.molasses.gamma_fr, sigma_scale, coupling_rate});
  const double gamma = cfg.molasses.gamma_fr;
  const double diff_d = cfg.molasses.diffusion_D;
  // field saturation estimate |alpha_-| ~ N U0 a+ / |kappa + i sqrt(D kappa)|
  const double rot = diff_d > 0.0 ? std::sqrt(diff_d * cfg.kappa) : 0.0;
  const double alpha_sat = cfg.kappa > 0.0
                               ? cfg.n_phys * std::abs(cfg.u0) * a_max / std::hypot(cfg.kappa, rot)
                               : 0.0;
  const double force_sat = 8.0 * cfg.epsilon * std::abs(cfg.u0) * a_max * alpha_sat;
  if (cfg.mode == AtomMode::overdamped) {
    rate = std::max(rate, diff_d);
    if (gamma > 0.0) rate = std::max(rate, force_sat / gamma);
  } else {
    rate = std::max(rate, std::sqrt(force_sat));
  }
  if (!(rate > 0.0)) throw ConfigError("suggested_dt: all rates are zero");
  return cfg.dt_factor / rate;
}

// Interleaved atom/field stepping on a shared clock. Per step: b is reduced
// from the current positions in fixed 4096-atom chunks (chunk partials folded
// in index order, so results are bit-identical for any thread count), atoms
// advance using alpha_-(t), then the field advances using b(t).
inline LangevinRunResult run_coupled(const LangevinRunConfig& cfg) {
  if (cfg.n_sim == 0) throw ConfigError("run_coupled: n_sim must be >= 1");
  if (!(cfg.n_phys >= 1.0)) throw ConfigError("run_coupled: n_phys must be >= 1");
  if (!(cfg.duration > 0.0)) throw ConfigError("run_coupled: duration must be positive");
  if (cfg.sample_every < 1) throw ConfigError("run_coupled: sample_every must be >= 1");
  if (cfg.mode == AtomMode::overdamped && !(cfg.molasses.gamma_fr > 0.0))
    throw ConfigError("run_coupled: overdamped mode requires gamma_fr > 0");

  const double weight = std::sqrt(cfg.n_phys / static_cast<double>(cfg.n_sim));
  const double u0_sim = cfg.u0 * weight;   // keeps N U0^2 invariant
  const double out_scale = weight;         // alpha_-(phys) = weight * alpha_-(sim)
  const double n_u0_sim = static_cast<double>(cfg.n_sim) * u0_sim;

  double dt = cfg.dt > 0.0 ? cfg.dt : suggested_dt(cfg, cfg.init_sigma * 3.0);
  std::uint64_t n_steps = static_cast<std::uint64_t>(std::ceil(cfg.duration / dt));
  const std::uint64_t se = static_cast<std::uint64_t>(cfg.sample_every);
  n_steps = ((n_steps + se - 1) / se) * se;  // keep samples on a uniform grid

  LangevinRunResult out;
  EnsembleState state;
  state.theta.resize(cfg.n_sim);
  if (cfg.mode == AtomMode::inertial) state.theta_dot.resize(cfg.n_sim, 0.0);
  {
    const rng::Draw pos{cfg.seed, rng::Stream::init_position};
    const rng::Draw vel{cfg.seed, rng::Stream::init_velocity};
    for (std::size_t i = 0; i < cfg.n_sim; ++i) {
      const auto idx = static_cast<std::uint32_t>(i);
      state.theta[i] = constants::two_pi * pos.uniform01(idx);
      if (cfg.mode == AtomMode::inertial)
        state.theta_dot[i] = cfg.init_sigma * vel.normal(idx);
    }
  }
  FieldState field;
  field.alpha_plus = cfg.pump_alpha(0.0);

  const std::size_t n_chunks = parallel::chunk_count(cfg.n_sim);
  std::vector<double> part_re(n_chunks), part_im(n_chunks), part_max(n_chunks);
  parallel::Pool pool(cfg.threads);
  const rng::Draw kick{cfg.seed, rng::Stream::langevin_kick};

  std::size_t next_snapshot = 0;
  std::vector<double> snapshot_times = cfg.snapshot_times;
  std::sort(snapshot_times.begin(), snapshot_times.end());
  double last_vmax = cfg.init_sigma * 6.0;  // running max |theta_dot| for the guard

  auto record = [&](double t, Complex b) {
    out.traj.t.push_back(t);
    out.traj.b.push_back(b);
    out.traj.alpha_minus.push_back(field.alpha_minus * out_scale);
    out.traj.alpha_plus.push_back(field.alpha_plus);
  };

  for (std::uint64_t step = 0; step <= n_steps; ++step) {
    const double t = static_cast<double>(step) * dt;
    state.t = t;
    field.t = t;
    field.alpha_plus = cfg.pump_alpha(t);
    const double gamma = cfg.molasses.gamma_at(t);
    const double diff_d = cfg.molasses.diffusion_at(t);

    while (next_snapshot < snapshot_times.size() && t >= snapshot_times[next_snapshot]) {
      out.snapshots.push_back({t, state.theta});
      ++next_snapshot;
    }

    Complex b;
    if (cfg.adiabatic_field || step % se == 0 || step == n_steps) {
      // reduction pass (also the recorded b)
      pool.for_chunks(cfg.n_sim, [&](std::size_t c, std::size_t lo, std::size_t hi) {
        double re = 0.0, im = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
          re += std::cos(state.theta[i]);
          im += std::sin(state.theta[i]);
        }
        part_re[c] = re;
        part_im[c] = im;
      });
      double re = 0.0, im = 0.0;
      for (std::size_t c = 0; c < n_chunks; ++c) {
        re += part_re[c];
        im += part_im[c];
      }
      b = Complex(re, im) / static_cast<double>(cfg.n_sim);
      if (cfg.adiabatic_field)
        field.alpha_minus = Complex(0.0, -1.0) * n_u0_sim * field.alpha_plus * b /
                            Complex(cfg.kappa, cfg.omega_ca);
      if (step % se == 0 || step == n_steps) record(t, b);
    }
    if (step == n_steps) break;

    // stability guard with the current field
    const double force_amp = 8.0 * std::abs(cfg.epsilon * u0_sim) * field.alpha_plus *
                             std::abs(field.alpha_minus);
    double rate;
    double kick_std;
    double c_atom;  // force (inertial) or drift (overdamped) coefficient
    if (cfg.mode == AtomMode::inertial) {
      rate = std::max({gamma, cfg.kappa, std::sqrt(force_amp), last_vmax});
      kick_std = gamma * std::sqrt(2.0 * std::max(diff_d, 0.0) * dt);
      c_atom = -8.0 * cfg.epsilon * u0_sim * field.alpha_plus;
    } else {
      const double drift_amp = gamma > 0.0 ? force_amp / gamma : 0.0;
      rate = std::max({cfg.kappa, drift_amp, std::max(diff_d, 0.0)});
      kick_std = std::sqrt(2.0 * std::max(diff_d, 0.0) * dt);
      c_atom = gamma > 0.0 ? -8.0 * cfg.epsilon * u0_sim * field.alpha_plus / gamma : 0.0;
    }
    detail::require_dt(dt, rate, cfg.guard_factor, "run_coupled");

    const Complex alpha = field.alpha_minus;
    const bool inertial = cfg.mode == AtomMode::inertial;
    pool.for_chunks(cfg.n_sim, [&](std::size_t c, std::size_t lo, std::size_t hi) {
      double re = 0.0, im = 0.0, vmax = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        const double th = state.theta[i];
        const double cth = std::cos(th);
        const double sth = std::sin(th);
        re += cth;
        im += sth;
        const double grad = c_atom * detail::im_rotated(alpha, cth, sth);
        if (inertial) {
          const double v = state.theta_dot[i];
          double v_new = v + dt * (grad - gamma * v);
          if (kick_std > 0.0)
            v_new += kick_std * kick.normal(static_cast<std::uint32_t>(i), step);
          state.theta[i] = th + dt * v;
          state.theta_dot[i] = v_new;
          vmax = std::max(vmax, std::abs(v_new));
        } else {
          double next = th + dt * grad;
          if (kick_std > 0.0)
            next += kick_std * kick.normal(static_cast<std::uint32_t>(i), step);
          state.theta[i] = next;
        }
      }
      part_re[c] = re;
      part_im[c] = im;
      part_max[c] = vmax;
    });
    double re = 0.0, im = 0.0, vmax = 0.0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
      re += part_re[c];
      im += part_im[c];
      vmax = std::max(vmax, part_max[c]);
    }
    last_vmax = vmax;
    b = Complex(re, im) / static_cast<double>(cfg.n_sim);

    if (!cfg.adiabatic_field) step_field(field, b, n_u0_sim, cfg.kappa, dt);
    field.t = t + dt;

    if (!std::isfinite(field.alpha_minus.real()) || !std::isfinite(field.alpha_minus.imag()) ||
        !std::isfinite(re) || !std::isfinite(im) || !std::isfinite(vmax)) {
      char diag[256];
      std::snprintf(diag, sizeof(diag),
                    "{\"t\": %.9e, \"step\": %llu, \"re_alpha\": %.9e, \"im_alpha\": %.9e, "
                    "\"max_theta_dot\": %.9e}",
                    t, static_cast<unsigned long long>(step), field.alpha_minus.real(),
                    field.alpha_minus.imag(), vmax);
      throw NumericError("run_coupled: non-finite state detected", diag);
    }
  }

  out.final_state = std::move(state);
  out.final_field = field;
  return out;
}

}  // namespace carl
