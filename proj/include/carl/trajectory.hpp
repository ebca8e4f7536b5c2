#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace carl {

// Shared output record of the dynamical solvers: bunching and field samples
// on a uniform time grid. Immutable once a run returns it.
struct Trajectory {
  std::vector<double> t;
  std::vector<std::complex<double>> b;
  std::vector<std::complex<double>> alpha_minus;
  std::vector<double> alpha_plus;

  std::size_t size() const { return t.size(); }
  double sample_rate() const { return t.size() >= 2 ? 1.0 / (t[1] - t[0]) : 0.0; }
};

struct ThetaSnapshot {
  double t = 0.0;
  std::vector<double> theta;
};

}  // namespace carl
