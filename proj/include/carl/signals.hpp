#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include "carl/errors.hpp"
#include "carl/state.hpp"
#include "carl/trajectory.hpp"
#include "carl/units.hpp"

// Experimental observables. The monitored interference signal is
// P_beat = hbar omega delta |a+ + a-|^2; its modulation contrast
// dP_cont = 4 hbar omega delta a+ |a-| encodes the probe power through
// P_- = dP_cont^2 / (16 P_+). The spectrogram takes Hann-windowed sections of
// the beat trace; the per-window peak (3-point quadratic interpolation on log
// magnitude) tracks the instantaneous beat frequency.

namespace carl {

inline double contrast_to_probe(double delta_p_cont_W, double p_plus_W) {
  if (!(p_plus_W > 0.0)) throw ConfigError("contrast_to_probe: pump power must be > 0");
  if (delta_p_cont_W < 0.0) throw ConfigError("contrast_to_probe: contrast must be >= 0");
  return delta_p_cont_W * delta_p_cont_W / (16.0 * p_plus_W);
}

inline double probe_to_contrast(double p_minus_W, double p_plus_W) {
  if (!(p_plus_W > 0.0)) throw ConfigError("probe_to_contrast: pump power must be > 0");
  if (p_minus_W < 0.0) throw ConfigError("probe_to_contrast: probe power must be >= 0");
  return 4.0 * std::sqrt(p_minus_W * p_plus_W);
}

struct BeatTrace {
  double t0 = 0.0;
  double sample_rate = 0.0;  // Hz
  std::vector<double> p_beat;  // W

  double time_at(std::size_t i) const { return t0 + static_cast<double>(i) / sample_rate; }
  double duration() const {
    return p_beat.empty() ? 0.0 : static_cast<double>(p_beat.size() - 1) / sample_rate;
  }
};

inline BeatTrace beat_trace_from_trajectory(const Trajectory& traj,
                                            double watts_per_photon) {
  if (traj.size() < 2) throw ConfigError("beat_trace_from_trajectory: trajectory too short");
  BeatTrace trace;
  trace.t0 = traj.t.front();
  trace.sample_rate = traj.sample_rate();
  trace.p_beat.resize(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Complex total = traj.alpha_minus[i] + traj.alpha_plus[i];
    trace.p_beat[i] = watts_per_photon * std::norm(total);
  }
  return trace;
}

namespace detail {

// In-place iterative radix-2 FFT (size must be a power of two).
inline void fft_pow2(std::vector<Complex>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -constants::two_pi / static_cast<double>(len);
    const Complex wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      Complex w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const Complex u = a[i + j];
        const Complex v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace detail

struct RidgePoint {
  double t = 0.0;
  double frequency_Hz = std::numeric_limits<double>::quiet_NaN();  // NaN: below noise floor
  double magnitude = 0.0;  // single-sided amplitude (same units as the trace)

  bool valid() const { return !std::isnan(frequency_Hz); }
};

struct SpectrogramResult {
  std::vector<double> window_times;            // window centers, s
  std::vector<double> frequencies;             // Hz
  std::vector<std::vector<double>> magnitude;  // [window][bin] amplitude
  std::vector<RidgePoint> ridge;
};

// Sectionwise Fourier transform. Each section is mean-subtracted,
// Hann-windowed, zero-padded to 2x the next power of two, and scaled so a
// unit-amplitude cosine yields peak magnitude 1. The ridge is the per-window
// argmax above a median + 6*MAD noise floor, refined by quadratic
// interpolation on log magnitude across the three bins around the peak.
inline SpectrogramResult spectrogram(const BeatTrace& trace, double window_s, double hop_s) {
  if (!(trace.sample_rate > 0.0)) throw ConfigError("spectrogram: trace has no sample rate");
  if (!(window_s > 0.0) || !(hop_s > 0.0) || hop_s > window_s)
    throw ConfigError("spectrogram: need 0 < hop <= window");
  const std::size_t n_win =
      static_cast<std::size_t>(std::round(window_s * trace.sample_rate));
  const std::size_t n_hop =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::round(hop_s * trace.sample_rate)));
  if (n_win < 8) throw ConfigError("spectrogram: window shorter than 8 samples");
  if (trace.p_beat.size() < n_win)
    throw ConfigError("spectrogram: trace shorter than one window");

  const std::size_t n_fft = 2 * detail::next_pow2(n_win);
  const std::size_t n_bins = n_fft / 2 + 1;

  std::vector<double> hann(n_win);
  double window_sum = 0.0;
  for (std::size_t i = 0; i < n_win; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(constants::two_pi * static_cast<double>(i) /
                                   static_cast<double>(n_win - 1));
    window_sum += hann[i];
  }
  const double amp_scale = 2.0 / window_sum;  // unit cosine -> peak magnitude 1

  SpectrogramResult out;
  out.frequencies.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k)
    out.frequencies[k] = static_cast<double>(k) * trace.sample_rate / static_cast<double>(n_fft);

  std::vector<Complex> buf(n_fft);
  std::vector<double> mags(n_bins);
  for (std::size_t start = 0; start + n_win <= trace.p_beat.size(); start += n_hop) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n_win; ++i) mean += trace.p_beat[start + i];
    mean /= static_cast<double>(n_win);
    for (std::size_t i = 0; i < n_win; ++i)
      buf[i] = Complex((trace.p_beat[start + i] - mean) * hann[i], 0.0);
    for (std::size_t i = n_win; i < n_fft; ++i) buf[i] = Complex(0.0, 0.0);
    detail::fft_pow2(buf);
    for (std::size_t k = 0; k < n_bins; ++k) mags[k] = std::abs(buf[k]) * amp_scale;

    // noise floor: median + 6 * MAD over the analysis band (skip DC leakage bins)
    const std::size_t k_min = 2;
    std::vector<double> sorted(mags.begin() + k_min, mags.end());
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (double& v : sorted) v = std::abs(v - median);
    std::sort(sorted.begin(), sorted.end());
    const double mad = sorted[sorted.size() / 2];
    const double floor = median + 6.0 * mad;

    std::size_t k_peak = k_min;
    for (std::size_t k = k_min; k < n_bins; ++k)
      if (mags[k] > mags[k_peak]) k_peak = k;

    RidgePoint pt;
    pt.t = trace.time_at(start) + 0.5 * static_cast<double>(n_win - 1) / trace.sample_rate;
    if (mags[k_peak] > floor && k_peak + 1 < n_bins) {
      const double la = std::log(std::max(mags[k_peak - 1], 1e-300));
      const double lb = std::log(mags[k_peak]);
      const double lc = std::log(std::max(mags[k_peak + 1], 1e-300));
      const double denom = la - 2.0 * lb + lc;
      double shift = 0.0;
      if (denom < 0.0) shift = 0.5 * (la - lc) / denom;
      if (std::abs(shift) > 1.0) shift = 0.0;  // defective parabola, keep the bin
      pt.frequency_Hz = (static_cast<double>(k_peak) + shift) * trace.sample_rate /
                        static_cast<double>(n_fft);
      pt.magnitude = std::exp(lb - 0.25 * (la - lc) * shift);
    }
    out.window_times.push_back(pt.t);
    out.magnitude.push_back(mags);
    out.ridge.push_back(pt);
  }
  return out;
}

// Probe power inferred from a ridge magnitude: the beat oscillation has cosine
// amplitude 2 hbar omega delta a+ |a-|, i.e. contrast dP = 2 * magnitude.
inline double ridge_to_probe_power(double ridge_magnitude_W, double p_plus_W) {
  return contrast_to_probe(2.0 * ridge_magnitude_W, p_plus_W);
}

}  // namespace carl
