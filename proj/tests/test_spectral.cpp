#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "kerrlab/quadrature.hpp"
#include "kerrlab/spectral.hpp"

using namespace kerrlab;
using namespace kerrlab::spectral;
using spectral::cplx;

namespace {

// cell-centred finite differences in x = cos(theta) for
// -((1-x^2)u')' + m^2/(1-x^2) u - m^2 u + c^2 (1-x^2) u
std::vector<double> fd_oracle(int m, double c, int n, int count) {
  const double h = 2.0 / n;
  Eigen::VectorXd diag(n), sub(n - 1);
  for (int i = 0; i < n; ++i) {
    const double x = -1.0 + (i + 0.5) * h;
    const double fl = 1.0 - (x - 0.5 * h) * (x - 0.5 * h), fr = 1.0 - (x + 0.5 * h) * (x + 0.5 * h);
    diag(i) = (fl + fr) / (h * h) + m * m / (1.0 - x * x) - m * m + c * c * (1.0 - x * x);
    if (i + 1 < n) sub(i) = -fr / (h * h);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  return std::vector<double>(es.eigenvalues().data(), es.eigenvalues().data() + count);
}

std::vector<std::vector<cplx>> random_frames(std::size_t nt, std::size_t size, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<std::vector<cplx>> f(nt, std::vector<cplx>(size));
  for (auto& v : f)
    for (auto& x : v) x = cplx(nd(rng), nd(rng));
  return f;
}

double max_diff(const std::vector<std::vector<cplx>>& a, const std::vector<std::vector<cplx>>& b) {
  double d = 0.0, s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    for (std::size_t k = 0; k < a[n].size(); ++k) {
      d = std::max(d, std::abs(a[n][k] - b[n][k]));
      s = std::max(s, std::abs(a[n][k]));
    }
  return d / s;
}

}  // namespace

TEST_CASE("spectral: time window") {
  const KerrParams kp(1.0, 0.05);
  const double T = 10.0;
  for (double t : {0.0, 0.5, 5.0, 10.0}) CHECK(window(kp, T, t) == 1.0);
  for (double t : {-1.0, -3.0, 11.0, 20.0}) CHECK(window(kp, T, t) == 0.0);
  CHECK(window(kp, T, -0.5) > 0.0);
  CHECK(window(kp, T, -0.5) < 1.0);
  // product rule for d_t (chi u) with 4th-order differences
  auto u = [](double t) { return std::sin(1.3 * t); };
  auto prod = [&](double t) { return window(kp, T, t) * u(t); };
  double err[2];
  for (int p = 0; p < 2; ++p) {
    const double h = 0.02 / (1 << p);
    err[p] = 0.0;
    for (double t = -0.9; t < -0.1; t += 0.05) {
      const double fd = (prod(t - 2 * h) - 8 * prod(t - h) + 8 * prod(t + h) - prod(t + 2 * h)) / (12 * h);
      const Jet c = window(kp, T, Jet::variable(t));
      err[p] = std::max(err[p], std::abs(fd - (c.value() * 1.3 * std::cos(1.3 * t) + c.d(1) * u(t))));
    }
  }
  CHECK(err[0] / err[1] > 12.0);
}

TEST_CASE("spectral: angular eigenvalues") {
  // a = 0: l(l+1) - m^2
  for (int m : {0, 1, 2, 3}) {
    const auto ev = spheroidal_eigs(1.7, m, 0.0, 11 - m);
    CHECK(ev.converged);
    for (int j = 0; j < 11 - m; ++j) {
      const double l = m + j;
      CHECK(std::abs(ev.Q[std::size_t(j)] - (l * (l + 1) - m * m)) < 1e-8);
    }
  }
  // independent finite-difference operator
  for (int m : {0, 1}) {
    const double a = 0.1, e = 7.0;
    const auto ev = spheroidal_eigs(e, m, a, 12);
    CHECK(ev.converged);
    // the m^2/(1-x^2) term makes the scheme first order for m != 0; extrapolate
    const auto f1 = fd_oracle(m, a * e, 4000, 3);
    const auto f2 = fd_oracle(m, a * e, 8000, 3);
    for (std::size_t j = 0; j < 3; ++j) CHECK(ev.Q[j] == doctest::Approx(2.0 * f2[j] - f1[j]).epsilon(1e-5));
  }
  // first-order shift a^2 e^2 <sin^2> and slope 2
  for (int m : {0, 1, 2})
    for (int j = 0; j < 3; ++j) {
      const double l = m + j;
      const double sin2 = 1.0 - (2.0 * l * (l + 1) - 2.0 * m * m - 1.0) / ((2.0 * l - 1.0) * (2.0 * l + 3.0));
      const double q0 = l * (l + 1) - m * m;
      const double d1 = spheroidal_eigs(1.0, m, 0.01, 10).Q[std::size_t(j)] - q0;
      const double d2 = spheroidal_eigs(1.0, m, 0.02, 10).Q[std::size_t(j)] - q0;
      CHECK(d1 / 1e-4 == doctest::Approx(sin2).epsilon(1e-3));
      CHECK(std::log(d2 / d1) / std::log(2.0) == doctest::Approx(2.0).epsilon(1e-3));
    }
  // orthonormal eigenfunctions, nonnegative spectrum
  const auto ev = spheroidal_eigs(3.0, 1, 0.1, 8);
  const auto q = gauss_legendre(40);
  for (int j = 0; j < 8; ++j) {
    CHECK(ev.Q[std::size_t(j)] >= 0.0);
    for (int k = 0; k < 8; ++k) {
      double s = 0.0;
      for (std::size_t p = 0; p < q.nodes.size(); ++p) {
        const double th = std::acos(q.nodes[p]);
        s += q.weights[p] * ev.S(j, th) * ev.S(k, th);
      }
      CHECK(std::abs(s - (j == k ? 1.0 : 0.0)) < 1e-10);
    }
  }
  CHECK_THROWS_AS(spheroidal_eigs(1.0, 0, 0.1, 0), SpectralError);
}

TEST_CASE("spectral: transform conventions, Parseval and round trip") {
  const KerrParams kp(1.0, 0.05);
  // Gaussian in time: u~(e) = exp(i e t_c - e^2/2) for one radial node, Ybar_1 in theta
  const auto b = angular::make_basis(0, 6);
  const double dt = 0.05, t0 = -15.0, tc = 2.0;
  std::vector<std::vector<cplx>> frames;
  for (int n = 0; n < 700; ++n) {
    const double t = t0 + n * dt;
    std::vector<cplx> f(6);
    for (int j = 0; j < 6; ++j) f[std::size_t(j)] = std::exp(-0.5 * (t - tc) * (t - tc)) * angular::ybar(1, 0, b.theta[std::size_t(j)]);
    frames.push_back(f);
  }
  const KerrParams kp0(1.0, 0.0);
  const auto tr = transform(kp0, b, frames, t0, dt);
  double worst = 0.0, leak = 0.0;
  for (std::size_t k = 0; k < tr.n_t; ++k) {
    const double e = tr.e[k];
    // m = 0: j = 1 is l = 1
    worst = std::max(worst, std::abs(tr.u[tr.index(k, 0, 1)] - std::exp(cplx(-0.5 * e * e, e * tc))));
    for (std::size_t j : {0, 2, 3, 4, 5}) leak = std::max(leak, std::abs(tr.u[tr.index(k, 0, j)]));
  }
  CHECK(worst < 1e-10);
  CHECK(leak < 1e-10);
  CHECK(tr.eigs[0].Q[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_FALSE(tr.aliasing);

  // random data, m = 1, a != 0
  const auto b1 = angular::make_basis(1, 5);
  const auto f = random_frames(64, 3 * 5, 7);
  const auto g = random_frames(64, 3 * 5, 8);
  const auto tf = transform(kp, b1, f, -1.0, 0.1);
  const auto p = physical_norm2(b1, f, 0.1);
  const auto s = spectral_norm2(tf);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(p[i] - s[i]) / p[i] < 1e-10);
  CHECK(max_diff(f, inverse(tf, b1)) < 1e-10);
  CHECK(tf.aliasing);  // white noise fills the top band

  // linearity
  std::vector<std::vector<cplx>> comb(f.size(), std::vector<cplx>(f[0].size()));
  const cplx al(0.3, -1.2), be(2.0, 0.5);
  for (std::size_t n = 0; n < f.size(); ++n)
    for (std::size_t k = 0; k < f[n].size(); ++k) comb[n][k] = al * f[n][k] + be * g[n][k];
  const auto tg = transform_like(tf, b1, g);
  const auto tc2 = transform_like(tf, b1, comb);
  double lin = 0.0, sc = 0.0;
  for (std::size_t k = 0; k < tc2.u.size(); ++k) {
    lin = std::max(lin, std::abs(tc2.u[k] - al * tf.u[k] - be * tg.u[k]));
    sc = std::max(sc, std::abs(tc2.u[k]));
  }
  CHECK(lin / sc < 1e-13);

  CHECK_THROWS_AS(transform(kp, b1, {}, 0.0, 0.1), SpectralError);
  CHECK_THROWS_AS(transform_like(tf, b, frames), SpectralError);

  std::ostringstream os;
  write_eig_table(os, tf);
  CHECK(os.str().rfind("e,m,j,Q\n", 0) == 0);
}

TEST_CASE("spectral: transformed FI equation on evolved data") {
  auto run = [](double a, int n_r, bool coulomb) {
    const KerrParams kp(1.0, a);
    evolution::GridSpec g;
    g.rstar_min = -20.0;
    g.rstar_max = 60.0;
    g.n_r = n_r;
    g.n_theta = 4;
    g.m = coulomb ? 0 : 1;
    const double T = 10.0;
    evolution::RunConfig cfg;
    cfg.t0 = -1.0;
    cfg.T = T + 1.0;
    cfg.sample_dt = 100.0;
    const evolution::FISolver fs(kp, g);
    TimeSeries ts;
    evolution::Observer obs;
    obs.fi = recorder(fs, 1, ts);
    const auto d = coulomb ? evolution::coulomb_data(kp, 1.0) : evolution::fi_pulse(kp, 20.0, 3.0, 1, 1);
    evolution::evolve(kp, g, d, cfg, obs);
    const auto w = window_fields(kp, fs.radial(), fs.basis(), ts, T);
    const auto tu = transform(kp, fs.basis(), w.u, ts.t0, ts.dt);
    const auto tj = transform_like(tu, fs.basis(), w.j_chi);
    const auto ti = transform_like(tu, fs.basis(), w.j_im);
    double jim = 0.0;
    for (const auto& f : w.j_im)
      for (const auto& x : f) jim = std::max(jim, std::abs(x));
    return std::pair{spectral_fi_residual(kp, fs.radial(), tu, tj, ti, n_r / 8, n_r - n_r / 8).relative, jim};
  };
  const auto [r1, j1] = run(0.05, 400, false);
  const auto [r2, j2] = run(0.05, 800, false);
  MESSAGE("pulse residuals " << r1 << " " << r2);
  CHECK(r2 < 0.25 * r1);
  CHECK(j1 > 0.0);
  const auto [c1, z1] = run(0.05, 400, true);
  const auto [c2, z2] = run(0.05, 800, true);
  MESSAGE("Coulomb residuals " << c1 << " " << c2);
  CHECK(c2 < 0.25 * c1);
  // a = 0: Sigma V = V_0
  const auto [r0, j0] = run(0.0, 200, false);
  CHECK(j0 < 1e-15);
  (void)r0;
}

TEST_CASE("spectral: zero data and coverage errors") {
  const KerrParams kp(1.0, 0.05);
  evolution::GridSpec g;
  g.rstar_min = 0.0;
  g.rstar_max = 20.0;
  g.n_r = 40;
  g.n_theta = 3;
  const evolution::FISolver fs(kp, g);
  TimeSeries ts;
  auto rec = recorder(fs, 1, ts);
  auto s = fs.zero_state(-1.0);
  for (int n = 0; n < 40; ++n) {
    rec(s);
    s.t += 0.25;
  }
  const auto w = window_fields(kp, fs.radial(), fs.basis(), ts, 7.0);
  const auto tu = transform(kp, fs.basis(), w.u, ts.t0, ts.dt);
  const auto tj = transform_like(tu, fs.basis(), w.j_chi);
  const auto res = spectral_fi_residual(kp, fs.radial(), tu, tj, tj, 2, 38);
  for (double x : res.residual) CHECK(x == 0.0);
  CHECK_THROWS_AS(window_fields(kp, fs.radial(), fs.basis(), ts, 9.0), SpectralError);
  CHECK_THROWS_AS(spectral_fi_residual(kp, fs.radial(), tu, tj, tj, 1, 38), SpectralError);
  s.t += 0.1;
  CHECK_THROWS_AS(rec(s), SpectralError);
}

TEST_CASE("spectral: lower bound for charge-free data") {
  auto synth = [](const KerrParams& kp, int m, std::vector<std::pair<int, double>> modes) {
    const auto b = angular::make_basis(m, 6);
    std::vector<std::vector<cplx>> frames;
    for (int n = 0; n < 200; ++n) {
      const double t = -1.0 + n * 0.1;
      std::vector<cplx> f(2 * 6);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 6; ++j)
          for (auto [l, c] : modes)
            f[std::size_t(i * 6 + j)] += c * (1.0 + i) * std::exp(-0.5 * (t - 8.0) * (t - 8.0)) *
                                         angular::ybar(l, m, b.theta[std::size_t(j)]);
      frames.push_back(f);
    }
    return spectral_lower_bound_check(kp, transform(kp, b, frames, -1.0, 0.1));
  };
  const KerrParams k0(1.0, 0.0);
  // l = 1 saturates, l = 2 leaves room, l = 0 violates
  const auto l1 = synth(k0, 0, {{1, 1.0}});
  CHECK(std::abs(l1.min_relative(0.0, 0.0, 1.0)) < 1e-10);
  CHECK(synth(k0, 0, {{2, 1.0}}).min_relative(0.0, 0.0, 1.0) == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(synth(k0, 1, {{1, 1.0}}).min_relative(0.0, 0.0, 1.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
  const auto bad = synth(k0, 0, {{1, 1.0}, {0, 0.3}});
  CHECK(bad.min_relative(0.0, 0.0, 1.0) < -0.1);
  CHECK(std::isinf(bad.best_C));
  // a != 0: the a-correction absorbs the deficit for some finite C
  const KerrParams k1(1.0, 0.05);
  const auto bad1 = synth(k1, 0, {{1, 1.0}, {0, 0.3}});
  CHECK(std::isfinite(bad1.best_C));
  CHECK(bad1.min_relative(bad1.best_C, 0.05, 1.0) > -1e-12);
  CHECK(bad1.min_relative(0.5 * bad1.best_C, 0.05, 1.0) < 0.0);
}
