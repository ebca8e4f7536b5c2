#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "carl/threshold.hpp"

using namespace carl;

namespace {

ThresholdSystem paper_system() {
  PhysicalParams p;
  return make_threshold_system(p, derive_scales(p));
}

ThresholdSystem scaled_system(double diff_d = 12.0, double gamma = 4.0) {
  ThresholdSystem sys;
  sys.epsilon = 1.0;
  sys.kappa = 1.0;
  sys.gamma_fr = gamma;
  sys.sigma = std::sqrt(diff_d * gamma);
  sys.n_atoms = 1e6;
  sys.u0 = -1e-3;
  sys.watts_per_photon = 1.0;
  return sys;
}

}  // namespace

TEST_CASE("lasing margin sign structure") {
  const ThresholdSystem sys = paper_system();
  SECTION("zero pump gives margin exactly -1") {
    CHECK(lasing_margin(sys, 0.0) == -1.0);
  }
  SECTION("the constructed equality point gives margin 0 to machine precision") {
    CHECK_THAT(lasing_margin(sys, equality_alpha_sq(sys)),
               Catch::Matchers::WithinAbs(0.0, 1e-12));
  }
  SECTION("sigma = 0 reports the always-above-threshold sentinel") {
    ThresholdSystem cold = sys;
    cold.sigma = 0.0;
    CHECK(lasing_margin(cold, 1.0) == 1.0);
  }
  SECTION("the paper operating point sits at margin ~ 0") {
    // U0 was backed out of the 4 W threshold with the good-cavity formula, so
    // the full-Eq. margin is only off by the kappa*gamma_fr correction
    PhysicalParams p;
    const DerivedScales s = derive_scales(p);
    const double margin = lasing_margin(sys, s.alpha_plus * s.alpha_plus);
    CHECK(std::abs(margin) < 0.03);
  }
}

TEST_CASE("analytic threshold at the apparatus point") {
  const ThresholdSystem sys = paper_system();
  const ThresholdResult r = analytic_threshold(sys);

  // Eq.-(7)-style evaluation frozen independently: 175.936 kHz
  CHECK_THAT(r.delta_omega_thr, Catch::Matchers::WithinRel(1105440.4877947555, 1e-12));
  CHECK_THAT(r.delta_omega_thr / constants::two_pi,
             Catch::Matchers::WithinRel(175936.31792645132, 1e-12));
  CHECK_THAT(r.rho_thr, Catch::Matchers::WithinRel(18.80002464864838, 1e-12));
  CHECK(r.good_cavity);

  // internal consistency: dw^3 = (2 eps rho_thr)^3 kappa / gamma_fr
  const double lhs = std::pow(r.delta_omega_thr, 3);
  const double rhs = std::pow(2.0 * sys.epsilon * r.rho_thr, 3) * sys.kappa / sys.gamma_fr;
  CHECK_THAT(lhs, Catch::Matchers::WithinRel(rhs, 1e-12));

  // the default U0 was backed out of the paper's 4 W threshold
  CHECK_THAT(r.pump_power_thr_W, Catch::Matchers::WithinRel(4.0, 1e-9));
}

TEST_CASE("threshold exponents under a gamma_fr doubling") {
  const ThresholdSystem sys = paper_system();
  ThresholdSystem doubled = sys;
  doubled.gamma_fr *= 2.0;
  const ThresholdResult a = analytic_threshold(sys);
  const ThresholdResult b = analytic_threshold(doubled);
  CHECK_THAT(b.delta_omega_thr, Catch::Matchers::WithinRel(a.delta_omega_thr / std::sqrt(2.0), 1e-12));
  CHECK_THAT(b.alpha_plus_thr_sq,
             Catch::Matchers::WithinRel(a.alpha_plus_thr_sq / std::sqrt(2.0), 1e-12));
}

TEST_CASE("analytic threshold outside the good-cavity regime is flagged") {
  ThresholdSystem sys = scaled_system();
  sys.sigma = 0.5;  // kappa*gamma_fr = 4 > sigma^2
  const ThresholdResult r = analytic_threshold(sys);
  CHECK_FALSE(r.good_cavity);
  CHECK(r.alpha_plus_thr_sq > 0.0);
}

TEST_CASE("threshold frequency is independent of the coupling") {
  const ThresholdSystem base = scaled_system();
  const double dw0 = analytic_threshold(base).delta_omega_thr;
  for (const double scale : {0.1, 10.0, 1000.0}) {
    ThresholdSystem sys = base;
    sys.n_atoms *= scale;
    CHECK(analytic_threshold(sys).delta_omega_thr == dw0);
    ThresholdSystem sys2 = base;
    sys2.u0 *= scale;
    CHECK(analytic_threshold(sys2).delta_omega_thr == dw0);
  }
}

TEST_CASE("linearized growth rate") {
  const ThresholdSystem sys = scaled_system();
  const double diff_d = sys.sigma * sys.sigma / sys.gamma_fr;

  SECTION("zero pump decouples into {-D, -kappa}") {
    const GrowthRate g = growth_rate_linearized(sys, 0.0);
    CHECK_THAT(g.dominant.real(), Catch::Matchers::WithinRel(-std::min(diff_d, sys.kappa), 1e-12));
    CHECK_THAT(g.subdominant.real(),
               Catch::Matchers::WithinRel(-std::max(diff_d, sys.kappa), 1e-12));
    CHECK(g.dominant.imag() == 0.0);
  }
  SECTION("real part crosses zero at the full-condition equality point") {
    const double a_eq = equality_alpha_sq(sys);
    const GrowthRate g = growth_rate_linearized(sys, a_eq);
    const double scale = std::abs(g.dominant) + std::sqrt(diff_d * sys.kappa);
    CHECK(std::abs(g.dominant.real()) / scale < 1e-12);
    CHECK(growth_rate_linearized(sys, 0.99 * a_eq).dominant.real() < 0.0);
    CHECK(growth_rate_linearized(sys, 1.01 * a_eq).dominant.real() > 0.0);
  }
  SECTION("rotation at the equality point reproduces the closed-form frequency") {
    const GrowthRate g = growth_rate_linearized(sys, equality_alpha_sq(sys));
    const double dw_formula = sys.sigma * std::sqrt(sys.kappa / sys.gamma_fr);
    CHECK_THAT(std::abs(g.dominant.imag()), Catch::Matchers::WithinRel(dw_formula, 1e-10));
  }
}

TEST_CASE("numeric FP threshold matches the closed form in the deep good-cavity regime") {
  // kappa*gamma_fr / sigma^2 = 0.01: the dropped bracket term is negligible
  ThresholdSystem sys = scaled_system();
  sys.gamma_fr = 2.0;
  sys.sigma = std::sqrt(sys.kappa * sys.gamma_fr / 0.01);
  const ThresholdResult ana = analytic_threshold(sys);
  const ThresholdResult num = numeric_threshold(ThresholdSolver::fp, sys,
                                                0.5 * ana.alpha_plus_thr_sq,
                                                2.0 * ana.alpha_plus_thr_sq);
  CHECK_THAT(num.alpha_plus_thr_sq, Catch::Matchers::WithinRel(ana.alpha_plus_thr_sq, 0.03));
  CHECK_THAT(num.delta_omega_thr, Catch::Matchers::WithinRel(ana.delta_omega_thr, 0.02));
  CHECK(num.method == ThresholdMethod::numeric_fp);
  CHECK(std::abs(num.margin) < 0.05);
}

TEST_CASE("numeric threshold collapses with vanishing velocity spread") {
  const ThresholdSystem ref = scaled_system();
  ThresholdSystem cold = ref;
  cold.sigma = 1e-3 * ref.sigma;
  const double a_ref = numeric_threshold(ThresholdSolver::fp, ref,
                                         0.5 * analytic_threshold(ref).alpha_plus_thr_sq,
                                         2.0 * analytic_threshold(ref).alpha_plus_thr_sq)
                           .alpha_plus_thr_sq;
  const double a_cold = numeric_threshold(ThresholdSolver::fp, cold,
                                          0.5 * analytic_threshold(cold).alpha_plus_thr_sq,
                                          2.0 * analytic_threshold(cold).alpha_plus_thr_sq)
                            .alpha_plus_thr_sq;
  // at sigma/1000 the system has left the good-cavity regime, so the exact
  // threshold scales as sigma rather than sigma^3; it still collapses
  CHECK(a_cold < 1e-4 * a_ref);
  const double expected_exact =
      analytic_threshold(cold).alpha_plus_thr_sq *
      (1.0 + cold.kappa * cold.gamma_fr / (cold.sigma * cold.sigma));
  CHECK_THAT(a_cold, Catch::Matchers::WithinRel(expected_exact, 0.05));
}

TEST_CASE("numeric threshold auto-widens a misplaced bracket") {
  const ThresholdSystem sys = scaled_system();
  const double a_thr = analytic_threshold(sys).alpha_plus_thr_sq;
  const ThresholdResult r =
      numeric_threshold(ThresholdSolver::fp, sys, 0.01 * a_thr, 0.02 * a_thr);
  CHECK_THAT(r.alpha_plus_thr_sq, Catch::Matchers::WithinRel(a_thr * (1.0 + sys.kappa * sys.gamma_fr / (sys.sigma * sys.sigma)), 0.05));
}

TEST_CASE("no threshold exists without coupling") {
  ThresholdSystem sys = scaled_system();
  sys.u0 = 0.0;
  CHECK_THROWS_AS(numeric_threshold(ThresholdSolver::fp, sys, 0.5, 2.0), NumericError);
}

TEST_CASE("langevin and FP numeric thresholds agree within shot-noise tolerance",
          "[slow]") {
  // N = 1e5 atoms; the Langevin detector floor is 3/sqrt(N), so the documented
  // tolerance of this cross-check is ~10% around the FP value.
  PhysicalParams p;
  p.temperature_K = 25e-6;  // D = 4 kappa: tractable step counts
  p.u0_override = -0.031;
  p.atom_number = 1e5;
  const DerivedScales s = derive_scales(p);
  const ThresholdSystem sys = make_threshold_system(p, s);

  const ThresholdResult fp = numeric_threshold(ThresholdSolver::fp, sys,
                                               0.5 * analytic_threshold(sys).alpha_plus_thr_sq,
                                               2.0 * analytic_threshold(sys).alpha_plus_thr_sq);
  NumericThresholdOptions opt;
  opt.rel_tol = 0.06;
  opt.duration_factor = 20.0;
  opt.threads = 2;
  const ThresholdResult lv = numeric_threshold(ThresholdSolver::langevin, sys,
                                               0.7 * fp.alpha_plus_thr_sq,
                                               1.4 * fp.alpha_plus_thr_sq, opt);
  CHECK_THAT(lv.alpha_plus_thr_sq, Catch::Matchers::WithinRel(fp.alpha_plus_thr_sq, 0.12));
}
