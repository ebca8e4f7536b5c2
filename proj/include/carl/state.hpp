#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include "carl/errors.hpp"

namespace carl {

using Complex = std::complex<double>;

// Positions theta_n = 2 k x_n (unwrapped; reduced mod 2pi only inside
// e^{i theta} evaluations) and, in inertial mode, velocities theta_dot_n.
struct EnsembleState {
  std::vector<double> theta;
  std::vector<double> theta_dot;  // empty in overdamped mode
  double t = 0.0;

  std::size_t size() const { return theta.size(); }
  bool inertial() const { return !theta_dot.empty(); }
};

// Probe amplitude alpha_- (complex) and pump amplitude alpha_+ (real >= 0),
// photon-number-normalized, in the frame rotating at the pump frequency.
struct FieldState {
  Complex alpha_minus{0.0, 0.0};
  double alpha_plus = 0.0;
  double t = 0.0;
};

// Langevin force spec: <xi_n> = 0, <xi_n(t) xi_m(tau)> = 2 gamma_fr^2 D
// delta_nm delta(t - tau). Discretized, the velocity kick per step has
// variance 2 gamma_fr^2 D dt; in the overdamped equation the position kick
// (xi/gamma_fr scaling) has variance 2 D dt.
struct NoiseSpec {
  std::uint64_t seed = 0;
  double diffusion_D = 0.0;
  double gamma_fr = 0.0;
};

// Order parameter b = N^-1 sum_n e^{i theta_n}.
inline Complex bunching(const std::vector<double>& theta) {
  if (theta.empty()) return {0.0, 0.0};
  double re = 0.0, im = 0.0;
  for (const double th : theta) {
    re += std::cos(th);
    im += std::sin(th);
  }
  const double inv = 1.0 / static_cast<double>(theta.size());
  return {re * inv, im * inv};
}

inline Complex bunching(const EnsembleState& state) { return bunching(state.theta); }

// One exponential-Euler step of alpha_-' = -kappa alpha_- - i N U0 alpha_+ b
// with the source held constant: exact for the decay, O(dt^2) otherwise.
inline void step_field(FieldState& field, Complex b, double n_u0, double kappa,
                       double dt) {
  if (!(dt > 0.0)) throw NumericError("step_field: dt must be positive");
  const Complex source = Complex(0.0, -1.0) * n_u0 * field.alpha_plus * b;
  const double decay = std::exp(-kappa * dt);
  if (kappa > 0.0) {
    const Complex fixed_point = source / kappa;
    field.alpha_minus = (field.alpha_minus - fixed_point) * decay + fixed_point;
  } else {
    field.alpha_minus += source * dt;
  }
  field.t += dt;
}

// Piecewise-linear schedule; constant extrapolation outside the knots.
struct PiecewiseLinear {
  std::vector<double> times;
  std::vector<double> values;

  static PiecewiseLinear constant(double v) { return {{0.0}, {v}}; }

  double operator()(double t) const {
    if (times.empty()) return 0.0;
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    return values[lo] + w * (values[hi] - values[lo]);
  }

  double max_value() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
  }
};

// Friction/diffusion switched off at off_time (molasses-off protocol).
struct MolassesSchedule {
  double gamma_fr = 0.0;
  double diffusion_D = 0.0;
  double off_time = std::numeric_limits<double>::infinity();

  double gamma_at(double t) const { return t < off_time ? gamma_fr : 0.0; }
  double diffusion_at(double t) const { return t < off_time ? diffusion_D : 0.0; }
};

}  // namespace carl
