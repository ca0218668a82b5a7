#include <cmath>

#include "doctest.h"
#include "kerrlab/estimates.hpp"

using namespace kerrlab;
using namespace kerrlab::estimates;
namespace ev = kerrlab::evolution;

namespace {

ev::GridSpec grid(int n_r = 256) {
  ev::GridSpec g;
  g.rstar_min = -30.0;
  g.rstar_max = 70.0;
  g.n_r = n_r;
  g.n_theta = 6;
  g.n_theta_maxwell = 12;
  return g;
}

ev::DiagnosticSeries coupled(const KerrParams& kp, const ev::InitialData& d, double T, int n_r = 256) {
  ev::RunConfig cfg;
  cfg.T = T;
  cfg.sample_dt = 1.0;
  cfg.maxwell = true;
  return ev::evolve(kp, grid(n_r), d, cfg);
}

}  // namespace

TEST_CASE("estimates: zero field is vacuous") {
  const KerrParams kp(1.0, 0.05);
  const auto s = coupled(kp, ev::curl_pulse(kp, 20.0, 3.0, 1, 0.0), 2.0, 64);
  const auto r = evaluate_core_estimates(kp, s, 2.0);
  for (const auto& e : r.core) {
    CHECK(e.vacuous);
    CHECK(std::isnan(e.C));
  }
  CHECK(r.energy_bound.vacuous);
}

TEST_CASE("estimates: a = 0 reduces (I) to energy conservation") {
  const KerrParams kp(1.0, 0.0);
  const auto r = evaluate_core_estimates(kp, coupled(kp, ev::curl_pulse(kp, 20.0, 3.0, 1, 1.0), 10.0), 10.0);
  CHECK(r.core[0].rhs_terms[1].value == 0.0);
  CHECK(r.core[0].rhs_terms[2].value == 0.0);
  MESSAGE("C_I at a = 0: " << r.core[0].C);
  CHECK(r.core[0].C == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("estimates: constants are finite and scale free") {
  const KerrParams kp(1.0, 0.05);
  const auto r1 = evaluate_core_estimates(kp, coupled(kp, ev::curl_pulse(kp, 20.0, 3.0, 1, 1.0), 10.0), 10.0);
  const auto r2 = evaluate_core_estimates(kp, coupled(kp, ev::curl_pulse(kp, 20.0, 3.0, 1, 2.5), 10.0), 10.0);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::isfinite(r1.core[i].C));
    CHECK(r1.core[i].C > 0.0);
    CHECK(r2.core[i].C == doctest::Approx(r1.core[i].C).epsilon(1e-10).scale(0));
    CHECK(r2.core[i].lhs == doctest::Approx(6.25 * r1.core[i].lhs).epsilon(1e-10).scale(0));
  }
  // single-phase m = 0 data: Im(conj(Ups) Pi) is roundoff, so B_1 is too
  CHECK(r1.core[4].C < 1e-12);
  CHECK(r2.core[4].C < 1e-12);
  CHECK(std::isfinite(r1.energy_bound.C));
  CHECK(std::isfinite(r1.morawetz.C));
  const auto t = trend({r1, r2}, {"A=1", "A=2.5"});
  CHECK(t.worst() < 1e-9);
  CHECK_THROWS_AS(trend({r1}), EstimateError);
  // missing sample time or system
  CHECK_THROWS_AS(evaluate_core_estimates(kp, coupled(kp, ev::curl_pulse(kp, 20.0, 3.0, 1, 1.0), 3.0, 64), 5.0),
                  EstimateError);
  ev::RunConfig cfg;
  cfg.T = 1.0;
  CHECK_THROWS_AS(evaluate_core_estimates(kp, ev::evolve(kp, grid(64), ev::fi_pulse(kp, 20.0, 3.0, 1, 0), cfg), 1.0),
                  EstimateError);
}

TEST_CASE("estimates: Coulomb convergence integral") {
  const KerrParams kp(1.0, 0.05);
  ev::RunConfig cfg;
  cfg.T = 10.0;
  // exact Coulomb: the charge is recovered and the integral is discretisation error only
  const auto c = coulomb_convergence_check(kp, grid(), ev::coulomb_data(kp, cplx(0.7, 0.2)), cfg, 10.0);
  CHECK(c.q.real() == doctest::Approx(0.7).epsilon(1e-10));
  CHECK(c.q.imag() == doctest::Approx(0.2).epsilon(1e-10));
  MESSAGE("Coulomb integral " << c.integral.back() << " vs E(0) " << c.initial_energy);
  CHECK(c.integral.back() < 1e-6 * c.initial_energy);
  // charge-free pulse: no stationary part
  const auto p = coulomb_convergence_check(kp, grid(), ev::curl_pulse(kp, 20.0, 3.0, 1, 1.0), cfg, 10.0);
  CHECK(std::abs(p.q) < 1e-10);
  CHECK(p.integral.back() > 0.0);
  CHECK(std::is_sorted(p.integral.begin(), p.integral.end()));
  CHECK_THROWS_AS(coulomb_convergence_check(kp, grid(), ev::fi_pulse(kp, 20.0, 3.0, 1, 0), cfg, 10.0), EstimateError);
}
