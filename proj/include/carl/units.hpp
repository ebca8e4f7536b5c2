#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "carl/constants.hpp"
#include "carl/errors.hpp"

// Laboratory parameters and the scaled quantities every dynamical equation
// consumes. All internal rates are rad/s; Hz appears only at I/O boundaries.

namespace carl {

struct PhysicalParams {
  double wavelength_m = 795e-9;
  double atomic_mass_kg = 85.0 * constants::atomic_mass_unit;
  double temperature_K = 200e-6;
  double kappa = constants::two_pi * 22e3;   // cavity amplitude decay, rad/s
  double fsr_Hz = 3.5e9;                     // free spectral range, cycles/s
  double detuning_a = -constants::two_pi * 1.7e12;  // atom-laser detuning, rad/s
  double rabi_g = 0.0;                       // one-photon Rabi frequency, rad/s
  double atom_number = 1e6;
  double gamma_fr = 4.0 * constants::two_pi * 22e3;  // friction, 1/s
  double pump_power_W = 4.0;

  // Direct U0 (rad/s); when finite it bypasses rabi_g. The paper's threshold
  // fit corresponds to -0.0795509 at the defaults above.
  double u0_override = -0.07955089506918671;

  // Multiplies the free spectral range in P = hbar*omega*(fsr*factor)*|alpha|^2,
  // for callers that prefer a different photon-flux convention.
  double power_convention_factor = 1.0;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(std::string(name) + " must be strictly positive");
    };
    positive(wavelength_m, "wavelength_m");
    positive(atomic_mass_kg, "atomic_mass_kg");
    positive(kappa, "kappa_rad_per_s");
    positive(fsr_Hz, "fsr_Hz");
    positive(atom_number, "atom_number");
    positive(pump_power_W, "pump_power_W");
    positive(power_convention_factor, "power_convention_factor");
    if (!(temperature_K >= 0.0) || !std::isfinite(temperature_K))
      throw ConfigError("temperature_K must be >= 0");
    if (!(gamma_fr >= 0.0) || !std::isfinite(gamma_fr))
      throw ConfigError("gamma_fr_per_s must be >= 0");
    if (!std::isfinite(detuning_a)) throw ConfigError("detuning_a_rad_per_s must be finite");
    if (!std::isfinite(rabi_g) || rabi_g < 0.0)
      throw ConfigError("rabi_g_rad_per_s must be >= 0");
    if (!std::isnan(u0_override) && !std::isfinite(u0_override))
      throw ConfigError("u0_rad_per_s must be finite");
    if (std::isnan(u0_override) && rabi_g > 0.0 && detuning_a == 0.0)
      throw ConfigError("detuning_a_rad_per_s must be nonzero when U0 is derived from rabi_g");
  }
};

struct DerivedScales {
  double k = 0.0;            // optical wavenumber, 1/m
  double epsilon = 0.0;      // hbar k^2 / m, rad/s
  double sigma = 0.0;        // 2k sqrt(kB T / m), 1/s
  double diffusion_D = 0.0;  // sigma^2 / gamma_fr; NaN when gamma_fr = 0
  bool has_diffusion = false;
  double u0 = 0.0;           // g^2 / Delta_a (or override), rad/s, signed
  double alpha_plus = 0.0;   // pump amplitude, photon-normalized, real >= 0
  double rho = 0.0;          // CARL parameter (N U0^2 alpha+^2 / 2 eps^2)^(1/3)
  double omega = 0.0;        // laser angular frequency, rad/s
  double watts_per_photon = 0.0;  // hbar * omega * fsr * convention_factor
};

inline double alpha_sq_to_power(double alpha_sq, const DerivedScales& s) {
  return alpha_sq * s.watts_per_photon;
}

inline double power_to_alpha_sq(double power_W, const DerivedScales& s) {
  return power_W / s.watts_per_photon;
}

inline DerivedScales derive_scales(const PhysicalParams& p) {
  p.validate();
  DerivedScales s;
  s.k = constants::two_pi / p.wavelength_m;
  s.epsilon = constants::hbar * s.k * s.k / p.atomic_mass_kg;
  s.sigma = 2.0 * s.k * std::sqrt(constants::k_boltzmann * p.temperature_K / p.atomic_mass_kg);
  if (p.gamma_fr > 0.0) {
    s.diffusion_D = s.sigma * s.sigma / p.gamma_fr;
    s.has_diffusion = true;
  } else {
    s.diffusion_D = std::numeric_limits<double>::quiet_NaN();
    s.has_diffusion = false;
  }
  if (!std::isnan(p.u0_override)) {
    s.u0 = p.u0_override;
  } else if (p.rabi_g > 0.0) {
    s.u0 = p.rabi_g * p.rabi_g / p.detuning_a;
  } else {
    s.u0 = 0.0;
  }
  s.omega = constants::two_pi * constants::speed_of_light / p.wavelength_m;
  s.watts_per_photon = constants::hbar * s.omega * p.fsr_Hz * p.power_convention_factor;
  s.alpha_plus = std::sqrt(power_to_alpha_sq(p.pump_power_W, s));
  s.rho = std::cbrt(p.atom_number * s.u0 * s.u0 * s.alpha_plus * s.alpha_plus /
                    (2.0 * s.epsilon * s.epsilon));
  return s;
}

// Beat frequency of a density grating moving at lab velocity v. With
// theta = 2kx the grating phase velocity is theta_dot = 2kv.
inline double velocity_to_beat(double v_m_per_s, const DerivedScales& s) {
  return 2.0 * s.k * v_m_per_s;
}

inline double beat_to_velocity(double delta_omega, const DerivedScales& s) {
  return delta_omega / (2.0 * s.k);
}

// sigma for a temperature other than the one baked into the scales.
inline double sigma_at_temperature(double temperature_K, const DerivedScales& s) {
  if (!(temperature_K >= 0.0)) throw ConfigError("temperature_K must be >= 0");
  const double mass = constants::hbar * s.k * s.k / s.epsilon;
  return 2.0 * s.k * std::sqrt(constants::k_boltzmann * temperature_K / mass);
}

}  // namespace carl
