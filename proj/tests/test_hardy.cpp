#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_hyperg.h>

#include <cmath>
#include <random>

#include "doctest.h"
#include "kerrlab/hardy.hpp"

using namespace kerrlab;
using namespace kerrlab::hardy;

namespace {

const double kS3 = std::sqrt(3.0), kS22 = std::sqrt(22.0);

// closed forms for the Schwarzschild Hardy problem
const double kAlpha = 0.5 + kS3 / 3.0;
const double kBeta = 0.5 - kS22 / 2.0;
const double kA = -kS22 / 2.0 + 0.5 - kS3 / 2.0;
const double kB = -kS22 / 2.0 + 0.5 + 7.0 * kS3 / 6.0;
const double kC = 1.0 + 2.0 * kS3 / 3.0;

}  // namespace

TEST_CASE("to_W: Schwarzschild coefficients from the weighted problem") {
  HardyProblem prob{KerrParams(1.0, 0.0)};
  const auto w = to_W(prob);
  CHECK(w.X == doctest::Approx(11.0).epsilon(1e-12));
  // V/A contributes -16 M; the A^{1/2} curvature term adds -12 d = -24 M
  CHECK(w.Y == doctest::Approx(-40.0).epsilon(1e-12));
  CHECK(w.Z == doctest::Approx(2.0).epsilon(1e-12));

  for (int i = 0; i < 200; ++i) {
    const double x = std::pow(10.0, -3.0 + 6.0 * i / 199.0);
    const double direct = prob.transformed_potential(x);
    CHECK(std::abs(w(x, 2.0) - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
    CHECK(std::abs(prob.transformed_rational()(x) - direct) <= 1e-11 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("to_W: the numerator-only reading disagrees with the ODE") {
  // Writing V/A alone in x gives (11, -16M, 2M^2); that W differs from the
  // transformed potential by exactly -2d/(x (x+d)^2).
  HardyProblem prob{KerrParams(1.0, 0.0)};
  const WCoefficients literal{11.0, -16.0, 2.0};
  for (double x : {0.01, 0.5, 3.0, 40.0}) {
    const double gap = prob.transformed_potential(x) - literal(x, 2.0);
    CHECK(gap == doctest::Approx(-4.0 / (x * (x + 2.0) * (x + 2.0))).epsilon(1e-10));
  }
  // and its parameters do not reproduce the closed-form beta
  const auto p = solve_parameters(literal, 2.0);
  CHECK(p.alpha == doctest::Approx(kAlpha).epsilon(1e-14));
  CHECK(std::abs(p.beta - kBeta) > 0.1);
}

TEST_CASE("to_W: pure weight and homogeneity") {
  // V = 0: W = (A^{1/2})''/A^{1/2}; at a = 0, A^{1/2} = x/(x+d)
  HardyProblem prob{KerrParams(1.0, 0.0), {0.0, 0.0, 0.0}};
  const auto w = to_W(prob);
  CHECK(std::abs(w.X) < 1e-12);
  CHECK(w.Y == doctest::Approx(-24.0).epsilon(1e-12));
  CHECK(std::abs(w.Z) < 1e-12);
  for (double x : {0.1, 1.0, 7.0}) CHECK(std::abs(w(x, 2.0) + 4.0 / (x * (x + 2.0) * (x + 2.0))) < 1e-13);

  for (double lam : {0.5, 3.0}) {
    HardyProblem big{KerrParams(lam, 0.0)};
    const auto wl = to_W(big);
    CHECK(wl.X == doctest::Approx(11.0).epsilon(1e-12));
    CHECK(wl.Y == doctest::Approx(-40.0 * lam).epsilon(1e-12));
    CHECK(wl.Z == doctest::Approx(2.0 * lam * lam).epsilon(1e-11));
  }
  CHECK_THROWS_AS(to_W(HardyProblem{KerrParams(1.0, 0.05)}), StructureError);
}

TEST_CASE("solve_parameters: closed forms and defining relations") {
  const auto w = to_W(HardyProblem{KerrParams(1.0, 0.0)});
  const auto p = solve_parameters(w, 2.0);
  CHECK(p.alpha == doctest::Approx(kAlpha).epsilon(1e-13));
  CHECK(p.beta == doctest::Approx(kBeta).epsilon(1e-13));
  CHECK(p.a == doctest::Approx(kA).epsilon(1e-12));
  CHECK(p.b == doctest::Approx(kB).epsilon(1e-11));
  CHECK(p.c == doctest::Approx(kC).epsilon(1e-13));
  CHECK(p.b == doctest::Approx(0.1755176).epsilon(1e-6));
  CHECK(positivity_conditions_hold(p));
  for (double r : condition_residuals(p, w, 2.0)) CHECK(std::abs(r) < 1e-12);

  const auto z0 = solve_parameters({11.0, -40.0, 0.0}, 2.0);
  CHECK(z0.alpha == 1.0);
  CHECK(z0.alpha_integer);
  CHECK_FALSE(positivity_conditions_hold(z0));
  CHECK_THROWS_AS(solve_parameters({11.0, -40.0, -100.0}, 2.0), DomainError);
}

TEST_CASE("gauss_2f1: identities and independent references") {
  CHECK(gauss_2f1(kA, kB, kC, 0.0).value == 1.0);
  const auto l = gauss_2f1(1.0, 1.0, 2.0, 0.3);
  CHECK(std::abs(l.value + std::log(0.7) / 0.3) < 1e-14);
  CHECK(l.error_bound < 1e-12);
  // frozen 30-digit references for the Hardy parameters
  const std::pair<double, double> frozen[] = {
      {-0.3, 1.07282584182971720421553010824}, {-0.9, 1.26195116045221402760433917939},
      {-3.0, 2.51036513331626031676135585601}, {-50.0, 847.157349308935803100857371278},
      {-1e4, 1313278604.49760194777952335114}, {0.3, 0.939842153066338037044182859176},
      {0.45, 0.914061193620517697347331904823}};
  for (const auto& [z, want] : frozen) {
    const auto v = gauss_2f1(kA, kB, kC, z);
    CHECK(v.converged);
    CHECK(std::abs(v.value - want) <= 1e-12 * std::abs(want));
    CHECK(v.error_bound <= 1e-12 * std::abs(want));
  }
  CHECK(std::abs(gauss_2f1(0.5, -1.3, 0.7, -7.5).value - 11.4890475850534711734744824334) < 1e-12 * 11.5);

  // GSL on |z| < 1
  gsl_set_error_handler_off();
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ua(-3.0, 3.0), uc(0.3, 4.0), uz(-0.95, 0.95);
  for (int i = 0; i < 300; ++i) {
    const double a = ua(rng), b = ua(rng), c = uc(rng), z = uz(rng);
    gsl_sf_result ref;
    if (gsl_sf_hyperg_2F1_e(a, b, c, z, &ref) != GSL_SUCCESS) continue;
    const auto v = gauss_2f1(a, b, c, z);
    if (!v.converged) continue;  // integer c - a - b in the connection branch
    CHECK(std::abs(v.value - ref.val) <= 1e-10 * std::max(1.0, std::abs(ref.val)));
  }
  CHECK_THROWS_AS(gauss_2f1(1.0, 1.0, 2.0, 1.5), DomainError);
}

TEST_CASE("positive_solution_scan: Schwarzschild parameters") {
  const auto w = to_W(HardyProblem{KerrParams(1.0, 0.0)});
  const auto p = solve_parameters(w, 2.0);
  const auto rep = positive_solution_scan(p, w, 2.0, 1e-6, 1e6, 1201);
  CHECK(rep.positive);
  CHECK(rep.min_v > 0.0);
  CHECK(rep.max_relative_residual < 1e-8);
  CHECK(rep.small_x_slope == doctest::Approx(p.alpha).epsilon(0.01));
}

TEST_CASE("rayleigh_min: positivity, refinement, falsification") {
  const auto w = to_W(HardyProblem{KerrParams(1.0, 0.0)});
  auto W = [&](double x) { return w(x, 2.0); };
  const auto fine = rayleigh_min(W, 1e-4, 1e4, 4096);
  CHECK(fine.min_eigenvalue >= -1e-6);
  const auto coarse = rayleigh_min(W, 1e-4, 1e4, 1024);
  CHECK(coarse.min_eigenvalue >= fine.min_eigenvalue - 1e-12);

  const auto free = rayleigh_min([](double) { return 0.0; }, 1e-4, 1e4, 2048);
  CHECK(free.min_eigenvalue > 0.0);
  CHECK(free.min_eigenvalue < 1e-6);

  // weakened potential: each numerator coefficient moved down by 10%
  HardyProblem weak{KerrParams(1.0, 0.0), {9.9, -66.0, 70.2}};
  const auto ww = to_W(weak);
  const auto bad = rayleigh_min([&](double x) { return ww(x, 2.0); }, 1e-4, 1e4, 4096);
  CHECK(bad.min_eigenvalue < -1e-6);
  CHECK_THROWS(solve_parameters(ww, 2.0));

  // eigenvalues scale as lambda^-2 under M -> lambda M
  const double lam = 2.0;
  const auto wb = to_W(HardyProblem{KerrParams(lam, 0.0), {9.9, -66.0, 70.2}});
  const auto bad_l = rayleigh_min([&](double x) { return wb(x, 2.0 * lam); }, 1e-4 * lam, 1e4 * lam, 1024);
  const auto bad_1 = rayleigh_min([&](double x) { return ww(x, 2.0); }, 1e-4, 1e4, 1024);
  CHECK(bad_l.min_eigenvalue * lam * lam == doctest::Approx(bad_1.min_eigenvalue).epsilon(1e-8));
}
