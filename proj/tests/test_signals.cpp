#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "carl/rng.hpp"
#include "carl/signals.hpp"

using namespace carl;

namespace {

BeatTrace synthetic_trace(double fs, double duration, double f0, double amp, double dc) {
  BeatTrace tr;
  tr.sample_rate = fs;
  const std::size_t n = static_cast<std::size_t>(duration * fs);
  tr.p_beat.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    tr.p_beat[i] = dc + amp * std::cos(constants::two_pi * f0 * t + 0.4);
  }
  return tr;
}

}  // namespace

TEST_CASE("contrast relation") {
  CHECK(contrast_to_probe(0.0, 4.0) == 0.0);
  CHECK_THAT(contrast_to_probe(0.8, 4.0), Catch::Matchers::WithinRel(0.01, 1e-15));
  CHECK_THROWS_AS(contrast_to_probe(0.1, 0.0), ConfigError);
  CHECK_THROWS_AS(contrast_to_probe(-0.1, 1.0), ConfigError);

  SECTION("round trip is exact on the positive reals") {
    for (const double p_minus : {1e-9, 1e-4, 0.01, 2.5}) {
      const double contrast = probe_to_contrast(p_minus, 4.0);
      CHECK_THAT(contrast_to_probe(contrast, 4.0), Catch::Matchers::WithinRel(p_minus, 1e-14));
    }
  }
}

TEST_CASE("fft satisfies Parseval and matches a direct DFT") {
  const std::size_t n = 256;
  std::vector<Complex> x(n);
  const rng::Draw d{3, rng::Stream::scratch};
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = d.normal_pair(static_cast<std::uint32_t>(i));
    x[i] = Complex(z[0], z[1]);
  }
  std::vector<Complex> fx = x;
  detail::fft_pow2(fx);

  double time_energy = 0.0, freq_energy = 0.0;
  for (const auto& v : x) time_energy += std::norm(v);
  for (const auto& v : fx) freq_energy += std::norm(v);
  CHECK_THAT(freq_energy / static_cast<double>(n),
             Catch::Matchers::WithinRel(time_energy, 1e-12));

  for (const std::size_t k : {0ul, 1ul, 17ul, 128ul, 255ul}) {
    Complex direct(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      direct += x[j] * std::exp(Complex(0.0, -constants::two_pi *
                                                 static_cast<double>(k * j % n) /
                                                 static_cast<double>(n)));
    CHECK_THAT(std::abs(fx[k] - direct), Catch::Matchers::WithinAbs(0.0, 1e-9));
  }
}

TEST_CASE("spectrogram of a pure sinusoid rides at the tone frequency") {
  const double f0 = 170e3;
  const BeatTrace tr = synthetic_trace(5e6, 10e-3, f0, 1.0, 2.0);
  const SpectrogramResult spec = spectrogram(tr, 0.2e-3, 0.1e-3);
  REQUIRE(spec.ridge.size() > 50);
  for (const RidgePoint& pt : spec.ridge) {
    REQUIRE(pt.valid());
    CHECK_THAT(pt.frequency_Hz, Catch::Matchers::WithinAbs(f0, 500.0));
    CHECK_THAT(pt.magnitude, Catch::Matchers::WithinRel(1.0, 0.02));
  }
}

TEST_CASE("spectrogram ridge tracks a linear chirp monotonically") {
  BeatTrace tr;
  tr.sample_rate = 5e6;
  const double duration = 10e-3;
  const std::size_t n = static_cast<std::size_t>(duration * tr.sample_rate);
  tr.p_beat.resize(n);
  const double f_start = 100e3, f_end = 200e3;
  const double rate = (f_end - f_start) / duration;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / tr.sample_rate;
    const double phase = constants::two_pi * (f_start * t + 0.5 * rate * t * t);
    tr.p_beat[i] = 3.0 + 0.7 * std::cos(phase);
  }
  const SpectrogramResult spec = spectrogram(tr, 0.3e-3, 0.15e-3);
  REQUIRE(spec.ridge.size() > 20);
  double prev = 0.0;
  for (const RidgePoint& pt : spec.ridge) {
    REQUIRE(pt.valid());
    CHECK(pt.frequency_Hz > prev);
    prev = pt.frequency_Hz;
  }
  CHECK(spec.ridge.back().frequency_Hz - spec.ridge.front().frequency_Hz > 80e3);
}

TEST_CASE("ridge extraction is invariant under amplitude rescaling") {
  const BeatTrace tr = synthetic_trace(4e6, 5e-3, 137.5e3, 0.3, 1.0);
  BeatTrace scaled = tr;
  for (double& v : scaled.p_beat) v *= 1000.0;
  const SpectrogramResult a = spectrogram(tr, 0.25e-3, 0.1e-3);
  const SpectrogramResult b = spectrogram(scaled, 0.25e-3, 0.1e-3);
  REQUIRE(a.ridge.size() == b.ridge.size());
  for (std::size_t i = 0; i < a.ridge.size(); ++i)
    CHECK_THAT(b.ridge[i].frequency_Hz,
               Catch::Matchers::WithinRel(a.ridge[i].frequency_Hz, 1e-9));
}

TEST_CASE("featureless trace reports no ridge") {
  BeatTrace tr;
  tr.sample_rate = 1e6;
  tr.p_beat.assign(10000, 4.0);
  const SpectrogramResult spec = spectrogram(tr, 1e-3, 0.5e-3);
  for (const RidgePoint& pt : spec.ridge) CHECK_FALSE(pt.valid());
}

TEST_CASE("trace shorter than one window is rejected") {
  BeatTrace tr;
  tr.sample_rate = 1e6;
  tr.p_beat.assign(100, 1.0);
  CHECK_THROWS_AS(spectrogram(tr, 1e-3, 0.5e-3), ConfigError);
  CHECK_THROWS_AS(spectrogram(tr, 1e-5, 2e-5), ConfigError);  // hop > window
}

TEST_CASE("synthetic fields: extracted contrast recovers the probe power within 2%") {
  // alpha_+ = 100, |alpha_-| = 1 (ratio 1e-2), rotating at an off-bin frequency
  const double wpp = 1.0;
  const double alpha_plus = 100.0;
  const double alpha_minus = 1.0;
  const double f0 = 137.5e3;

  Trajectory traj;
  const double fs = 4e6;
  const std::size_t n = static_cast<std::size_t>(20e-3 * fs);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    traj.t.push_back(t);
    const Complex am = alpha_minus * std::exp(Complex(0.0, -constants::two_pi * f0 * t));
    traj.alpha_minus.push_back(am);
    traj.alpha_plus.push_back(alpha_plus);
    traj.b.push_back(Complex(0.0, 0.0));
  }
  const BeatTrace tr = beat_trace_from_trajectory(traj, wpp);
  const SpectrogramResult spec = spectrogram(tr, 0.5e-3, 0.25e-3);
  const double p_plus = wpp * alpha_plus * alpha_plus;
  const double p_minus_true = wpp * alpha_minus * alpha_minus;
  REQUIRE(spec.ridge.size() > 10);
  for (const RidgePoint& pt : spec.ridge) {
    REQUIRE(pt.valid());
    const double p_minus_est = ridge_to_probe_power(pt.magnitude, p_plus);
    CHECK_THAT(p_minus_est, Catch::Matchers::WithinRel(p_minus_true, 0.02));
  }
}
