#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "carl/units.hpp"

using namespace carl;

// Reference values recomputed independently (CODATA constants, double
// precision) for the apparatus defaults: lambda = 795 nm, m = 85 u,
// T = 200 uK, kappa = 2pi*22 kHz, fsr = 3.5 GHz, P+ = 4 W.
namespace {
constexpr double kRefK = 7903377.744879982;            // 1/m
constexpr double kRefEpsilon = 46669.550333270265;     // rad/s
constexpr double kRefSigma = 2210880.975589511;        // 1/s
constexpr double kRefWattsPerPhoton = 8.745359114165137e-10;
constexpr double kRefAlphaSq = 4573854484.169864;      // at 4 W
constexpr double kRefBeat7cm = 1106472.8842831976;     // rad/s
}  // namespace

TEST_CASE("derive_scales reproduces the apparatus point") {
  PhysicalParams p;  // defaults are the apparatus values
  const DerivedScales s = derive_scales(p);
  CHECK_THAT(s.k, Catch::Matchers::WithinRel(kRefK, 1e-12));
  CHECK_THAT(s.epsilon, Catch::Matchers::WithinRel(kRefEpsilon, 1e-12));
  CHECK_THAT(s.sigma, Catch::Matchers::WithinRel(kRefSigma, 1e-12));
  CHECK_THAT(s.watts_per_photon, Catch::Matchers::WithinRel(kRefWattsPerPhoton, 1e-12));
  CHECK_THAT(s.alpha_plus * s.alpha_plus, Catch::Matchers::WithinRel(kRefAlphaSq, 1e-12));
  CHECK(s.has_diffusion);
  CHECK_THAT(s.diffusion_D, Catch::Matchers::WithinRel(kRefSigma * kRefSigma / p.gamma_fr, 1e-12));
}

TEST_CASE("zero temperature gives zero sigma and zero diffusion") {
  PhysicalParams p;
  p.temperature_K = 0.0;
  const DerivedScales s = derive_scales(p);
  CHECK(s.sigma == 0.0);
  CHECK(s.diffusion_D == 0.0);
  CHECK(s.has_diffusion);
}

TEST_CASE("gamma_fr = 0 flags diffusion undefined, other fields valid") {
  PhysicalParams p;
  p.gamma_fr = 0.0;
  const DerivedScales s = derive_scales(p);
  CHECK_FALSE(s.has_diffusion);
  CHECK(std::isnan(s.diffusion_D));
  CHECK(s.sigma > 0.0);
  CHECK(s.epsilon > 0.0);
}

TEST_CASE("U0 derived from the Rabi frequency follows the detuning sign") {
  PhysicalParams p;
  p.u0_override = std::numeric_limits<double>::quiet_NaN();
  p.rabi_g = 921800.4803762516;  // backs out ~ -0.0795509 at the default detuning
  const DerivedScales s = derive_scales(p);
  CHECK(s.u0 < 0.0);
  CHECK_THAT(s.u0, Catch::Matchers::WithinRel(-0.07955089506918671, 1e-9));

  p.detuning_a = 0.0;
  CHECK_THROWS_AS(derive_scales(p), ConfigError);
}

TEST_CASE("parameter invariant violations are rejected by name") {
  PhysicalParams p;
  p.temperature_K = -1.0;
  try {
    p.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("temperature_K") != std::string::npos);
  }
}

TEST_CASE("power <-> photon number round trip is exact") {
  PhysicalParams p;
  const DerivedScales s = derive_scales(p);
  for (const double x : {1e-6, 0.3, 4.0, 1e3}) {
    CHECK_THAT(power_to_alpha_sq(alpha_sq_to_power(x, s), s),
               Catch::Matchers::WithinRel(x, 1e-14));
  }
}

TEST_CASE("velocity <-> beat conversion") {
  PhysicalParams p;
  const DerivedScales s = derive_scales(p);
  CHECK(velocity_to_beat(0.0, s) == 0.0);
  CHECK_THAT(velocity_to_beat(0.07, s), Catch::Matchers::WithinRel(kRefBeat7cm, 1e-12));
  // ~176 kHz, not the paper's 100-170 kHz pairing (2kv convention, see README)
  CHECK_THAT(velocity_to_beat(0.07, s) / constants::two_pi,
             Catch::Matchers::WithinRel(176100.6289308176, 1e-9));
  for (const double v : {0.01, 0.07, 0.13}) {
    CHECK_THAT(beat_to_velocity(velocity_to_beat(v, s), s),
               Catch::Matchers::WithinRel(v, 1e-14));
  }
}

TEST_CASE("rho scaling laws") {
  PhysicalParams base;
  const DerivedScales s0 = derive_scales(base);

  SECTION("rho ~ N^(1/3) at fixed U0, alpha_+") {
    for (const double n : {1e4, 1e5, 3e6, 1e7}) {
      PhysicalParams p = base;
      p.atom_number = n;
      const DerivedScales s = derive_scales(p);
      CHECK_THAT(s.rho / s0.rho,
                 Catch::Matchers::WithinRel(std::cbrt(n / base.atom_number), 1e-12));
    }
  }
  SECTION("rho ~ alpha_+^(2/3) at fixed N, U0") {
    for (const double pw : {0.5, 2.0, 9.0}) {
      PhysicalParams p = base;
      p.pump_power_W = pw;  // alpha_+^2 is proportional to power
      const DerivedScales s = derive_scales(p);
      CHECK_THAT(s.rho / s0.rho,
                 Catch::Matchers::WithinRel(std::cbrt(pw / base.pump_power_W), 1e-12));
    }
  }
  SECTION("epsilon doubles when the wavelength shrinks by sqrt(2)") {
    PhysicalParams p = base;
    p.wavelength_m = base.wavelength_m / std::sqrt(2.0);
    CHECK_THAT(derive_scales(p).epsilon, Catch::Matchers::WithinRel(2.0 * s0.epsilon, 1e-12));
  }
  SECTION("sigma scales as sqrt(T)") {
    PhysicalParams p = base;
    p.temperature_K = 4.0 * base.temperature_K;
    CHECK_THAT(derive_scales(p).sigma, Catch::Matchers::WithinRel(2.0 * s0.sigma, 1e-12));
  }
}

TEST_CASE("derived quantities are deterministic") {
  PhysicalParams p;
  const DerivedScales a = derive_scales(p);
  const DerivedScales b = derive_scales(p);
  CHECK(a.k == b.k);
  CHECK(a.sigma == b.sigma);
  CHECK(a.rho == b.rho);
  CHECK(a.alpha_plus == b.alpha_plus);
}
