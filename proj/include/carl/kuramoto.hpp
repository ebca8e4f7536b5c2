#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "carl/errors.hpp"
#include "carl/parallel.hpp"
#include "carl/rng.hpp"
#include "carl/state.hpp"
#include "carl/units.hpp"

// Mean-field reduction of the viscous dynamics: with the steady-state ansatz
// alpha_-' = i omega_ca alpha_- substituted into the overdamped atom equation,
//
//   theta_n' = xi_n / gamma_fr + K |b| sin(psi - theta_n),
//   K = 8 eps N U0^2 a+^2 omega_ca / (gamma_fr (omega_ca^2 + kappa^2)),
//
// valid in the good-cavity limit kappa << omega_ca. Noise enters as white
// frequency jitter omega_n = xi_n / gamma_fr (phase diffusion constant D).
// A classic static-frequency variant (Gaussian omega_n, an extension beyond
// the viscous model) is available for comparison.

namespace carl {

inline double kuramoto_coupling(double epsilon, double n_atoms, double u0,
                                double alpha_plus, double gamma_fr, double kappa,
                                double omega_ca) {
  if (omega_ca == 0.0) throw ConfigError("kuramoto_coupling: omega_ca must be nonzero");
  if (!(gamma_fr > 0.0)) throw ConfigError("kuramoto_coupling: gamma_fr must be > 0");
  return 8.0 * epsilon * n_atoms * u0 * u0 * alpha_plus * alpha_plus * omega_ca /
         (gamma_fr * (omega_ca * omega_ca + kappa * kappa));
}

inline double coupling_constant(const PhysicalParams& p, const DerivedScales& s,
                                double omega_ca) {
  return kuramoto_coupling(s.epsilon, p.atom_number, s.u0, s.alpha_plus, p.gamma_fr,
                           p.kappa, omega_ca);
}

// The stated validity limit of the reduction.
inline bool kuramoto_good_cavity(double kappa, double omega_ca) {
  return std::abs(kappa / omega_ca) <= 0.2;
}

struct KuramotoParams {
  double coupling_K = 0.0;
  double omega_ca = 0.0;  // informational; absorbed into K
  NoiseSpec noise;
};

// Fraction of oscillators whose frequency magnitude is within the locking
// range K|b|. Diagnostic only.
inline double sync_fraction(const std::vector<double>& frequencies, double coupling_K,
                            double b_abs) {
  if (frequencies.empty()) return 0.0;
  const double lock = coupling_K * b_abs;
  std::size_t n_locked = 0;
  for (const double w : frequencies)
    if (std::abs(w) <= lock) ++n_locked;
  return static_cast<double>(n_locked) / static_cast<double>(frequencies.size());
}

// One Euler-Maruyama step of the mean-field equation; b and psi are
// recomputed from the current phases.
inline void step_kuramoto(std::vector<double>& phases, const KuramotoParams& prm,
                          double dt, std::uint64_t step_index,
                          double guard_factor = 0.05) {
  if (!(dt > 0.0)) throw NumericError("step_kuramoto: dt must be positive");
  const double rate = std::max(std::abs(prm.coupling_K), std::max(prm.noise.diffusion_D, 0.0));
  if (rate > 0.0 && dt * rate > guard_factor)
    throw NumericError("step_kuramoto: stability guard: dt too large for coupling/noise rates");
  const Complex b = bunching(phases);
  const double b_abs = std::abs(b);
  const double psi = std::arg(b);
  const double kick_std = std::sqrt(2.0 * std::max(prm.noise.diffusion_D, 0.0) * dt);
  const rng::Draw kick{prm.noise.seed, rng::Stream::kuramoto_kick};
  for (std::size_t i = 0; i < phases.size(); ++i) {
    double next = phases[i] + dt * prm.coupling_K * b_abs * std::sin(psi - phases[i]);
    if (kick_std > 0.0)
      next += kick_std * kick.normal(static_cast<std::uint32_t>(i), step_index);
    phases[i] = next;
  }
}

struct KuramotoRunConfig {
  std::size_t n = 0;
  double coupling_K = 0.0;
  double diffusion_D = 0.0;  // white frequency jitter
  std::uint64_t seed = 0;
  double dt = 0.0;  // 0 = choose from rates
  double duration = 0.0;
  double dt_factor = 0.02;
  int sample_every = 16;
  int threads = 1;
  bool static_frequencies = false;  // labeled extension: classic Kuramoto
  double static_freq_std = 0.0;
};

struct KuramotoTrajectory {
  std::vector<double> t;
  std::vector<double> b_abs;
  std::vector<double> psi;
  std::vector<double> sync_frac;
};

struct KuramotoRunResult {
  KuramotoTrajectory traj;
  std::vector<double> final_phases;
};

inline KuramotoRunResult run_kuramoto(const KuramotoRunConfig& cfg) {
  if (cfg.n == 0) throw ConfigError("run_kuramoto: n must be >= 1");
  if (!(cfg.duration > 0.0)) throw ConfigError("run_kuramoto: duration must be positive");
  const double rate = std::max({std::abs(cfg.coupling_K), cfg.diffusion_D,
                                3.0 * cfg.static_freq_std});
  if (!(rate > 0.0)) throw ConfigError("run_kuramoto: all rates are zero");
  const double dt = cfg.dt > 0.0 ? cfg.dt : cfg.dt_factor / rate;

  std::uint64_t n_steps = static_cast<std::uint64_t>(std::ceil(cfg.duration / dt));
  const std::uint64_t se = static_cast<std::uint64_t>(cfg.sample_every);
  n_steps = ((n_steps + se - 1) / se) * se;

  std::vector<double> phases(cfg.n), freqs;
  const rng::Draw pos{cfg.seed, rng::Stream::init_position};
  for (std::size_t i = 0; i < cfg.n; ++i)
    phases[i] = constants::two_pi * pos.uniform01(static_cast<std::uint32_t>(i));
  if (cfg.static_frequencies) {
    freqs.resize(cfg.n);
    const rng::Draw fr{cfg.seed, rng::Stream::kuramoto_freq};
    for (std::size_t i = 0; i < cfg.n; ++i)
      freqs[i] = cfg.static_freq_std * fr.normal(static_cast<std::uint32_t>(i));
  }

  const std::size_t n_chunks = parallel::chunk_count(cfg.n);
  std::vector<double> part_re(n_chunks), part_im(n_chunks), part_lock(n_chunks);
  parallel::Pool pool(cfg.threads);
  const rng::Draw kick{cfg.seed, rng::Stream::kuramoto_kick};
  const double kick_std = std::sqrt(2.0 * std::max(cfg.diffusion_D, 0.0) * dt);

  KuramotoRunResult out;
  for (std::uint64_t step = 0; step <= n_steps; ++step) {
    const double t = static_cast<double>(step) * dt;
    const bool sample = step % se == 0 || step == n_steps;
    const bool last = step == n_steps;

    // mean field from current phases
    pool.for_chunks(cfg.n, [&](std::size_t c, std::size_t lo, std::size_t hi) {
      double re = 0.0, im = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        re += std::cos(phases[i]);
        im += std::sin(phases[i]);
      }
      part_re[c] = re;
      part_im[c] = im;
    });
    double re = 0.0, im = 0.0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
      re += part_re[c];
      im += part_im[c];
    }
    const Complex b = Complex(re, im) / static_cast<double>(cfg.n);
    const double b_abs = std::abs(b);
    const double psi = std::arg(b);
    if (last) {
      if (sample) {
        out.traj.t.push_back(t);
        out.traj.b_abs.push_back(b_abs);
        out.traj.psi.push_back(psi);
        out.traj.sync_frac.push_back(out.traj.sync_frac.empty() ? 0.0
                                                                : out.traj.sync_frac.back());
      }
      break;
    }

    const double lock = cfg.coupling_K * b_abs;
    pool.for_chunks(cfg.n, [&](std::size_t c, std::size_t lo, std::size_t hi) {
      double n_locked = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        const double w_static = cfg.static_frequencies ? freqs[i] : 0.0;
        double noise = 0.0;
        if (kick_std > 0.0)
          noise = kick_std * kick.normal(static_cast<std::uint32_t>(i), step);
        if (sample) {
          // instantaneous effective frequency of this step
          const double w_eff = w_static + noise / dt;
          if (std::abs(w_eff) <= lock) n_locked += 1.0;
        }
        phases[i] += dt * (w_static + cfg.coupling_K * b_abs * std::sin(psi - phases[i])) + noise;
      }
      part_lock[c] = n_locked;
    });

    if (sample) {
      double locked = 0.0;
      for (std::size_t c = 0; c < n_chunks; ++c) locked += part_lock[c];
      out.traj.t.push_back(t);
      out.traj.b_abs.push_back(b_abs);
      out.traj.psi.push_back(psi);
      out.traj.sync_frac.push_back(locked / static_cast<double>(cfg.n));
    }
  }

  out.final_phases = std::move(phases);
  return out;
}

}  // namespace carl
