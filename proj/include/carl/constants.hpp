#pragma once

// CODATA 2018 values, SI units.
namespace carl::constants {

inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double k_boltzmann = 1.380649e-23;      // J/K
inline constexpr double speed_of_light = 2.99792458e8;   // m/s
inline constexpr double atomic_mass_unit = 1.66053906892e-27;  // kg

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

}  // namespace carl::constants
