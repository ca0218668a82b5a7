#include "kerrlab/multipliers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <numbers>

namespace kerrlab::morawetz {

namespace {

Poly delta_poly(const KerrParams& kp) { return Poly{kp.a * kp.a, -2.0 * kp.M, 1.0}; }
Poly s_poly(const KerrParams& kp) { return Poly{kp.a * kp.a, 0.0, 1.0}; }

// Entries N_ij with f1 R_ij / Delta = N_ij / s^4, s = r^2 + a^2, in (e, ell_z, sqrt Q).
struct Entries {
  Poly ee, el, ll, qq;
};

Entries weighted_entries(const KerrParams& kp, double eps) {
  const Poly D = delta_poly(kp), s = s_poly(kp);
  const Poly w = s * s - (eps * eps) * D;  // s^4 f1,2
  const double a = kp.a;
  return {-1.0 * (w * s * s), Poly{0.0, -2.0 * a * kp.M} * w, (D - Poly::constant(a * a)) * w, D * w};
}

// (N / s^4)' = (N' s - 8 r N) / s^5
Rational d_over_s4(const KerrParams& kp, const Poly& N) {
  const Poly s = s_poly(kp);
  return Rational(N.derivative() * s - Poly{0.0, 8.0} * N, pow(s, 5));
}

Rational combine(const KerrParams& kp, const Entries& en, const SpectralPoint& k) {
  const Poly N = en.ee * (k.e * k.e) + en.el * (2.0 * k.e * k.ell_z) + en.ll * (k.ell_z * k.ell_z) + en.qq * k.Q;
  return d_over_s4(kp, N);
}

Jet jr(double r) { return Jet::variable(r); }

Jet delta_jet(const KerrParams& kp, const Jet& r) { return r * r - 2.0 * kp.M * r + kp.a * kp.a; }
Jet s_jet(const KerrParams& kp, const Jet& r) { return r * r + kp.a * kp.a; }
Jet vl_jet(const KerrParams& kp, const Jet& r) {
  const Jet s = s_jet(kp, r);
  return delta_jet(kp, r) / (s * s);
}
Jet f12_jet(const KerrParams& kp, double eps, const Jet& r) { return 1.0 - eps * eps * vl_jet(kp, r); }
Jet basic_f2_jet(const KerrParams& kp, const Jet& r) {
  const Jet s = s_jet(kp, r);
  const Jet s2 = s * s;
  return (s2 * s2) / ((3.0 * r * r + kp.a * kp.a) * (2.0 * r));
}

// f1^{1/2} Delta^{-1/2} f2 with the basic f2: sqrt(f1,2) s^3 / (2 r (3r^2 + a^2))
Jet rtt_weight(const KerrParams& kp, double eps, const Jet& r) {
  const Jet s = s_jet(kp, r);
  return sqrt(f12_jet(kp, eps, r)) * s * s * s / (2.0 * r * (3.0 * r * r + kp.a * kp.a));
}

void require_exterior(const KerrParams& kp, double r) {
  if (!(r > kp.r_plus)) throw DomainError("r must exceed r_plus");
}

// scaled basis (eps e, ell_z, sqrt Q): e row divided by eps; the ee entry of
// Rtilde' is eps^2 V_L' exactly, so it is written as V_L' before scaling.
Mat3 scaled(const KerrParams& kp, double eps, double ee, double el, double ll, double qq) {
  if (eps < 0.0) throw DomainError("eps must be nonnegative");
  Mat3 m{};
  m[1][1] = ll;
  m[2][2] = qq;
  if (eps > 0.0) {
    m[0][1] = m[1][0] = el / eps;
  } else if (kp.a != 0.0) {
    throw DomainError("scaled form needs eps > 0 when a != 0");
  }
  m[0][0] = ee;
  return m;
}

}  // namespace

Poly curly_R_poly(const KerrParams& kp, const SpectralPoint& k) {
  const Poly D = delta_poly(kp), s = s_poly(kp);
  const double a = kp.a;
  return -(k.e * k.e) * (s * s) + Poly{0.0, -4.0 * a * kp.M * k.e * k.ell_z} +
         (k.ell_z * k.ell_z) * (D - Poly::constant(a * a)) + k.Q * D;
}

double curly_R(const KerrParams& kp, const SpectralPoint& k, double r) { return curly_R_poly(kp, k)(r); }

Mat3 curly_R_matrix(const KerrParams& kp, double r) {
  const double a = kp.a, s = r * r + a * a, D = r * r - 2.0 * kp.M * r + a * a;
  Mat3 m{};
  m[0][0] = -s * s;
  m[0][1] = m[1][0] = -2.0 * a * kp.M * r;
  m[1][1] = D - a * a;
  m[2][2] = D;
  return m;
}

Rational rtilde_prime_rational(const KerrParams& kp, const SpectralPoint& k) {
  return combine(kp, weighted_entries(kp, k.eps), k);
}

double rtilde_prime(const KerrParams& kp, const SpectralPoint& k, double r) {
  require_exterior(kp, r);
  return rtilde_prime_rational(kp, k)(r);
}

double rtildetilde_pp(const KerrParams& kp, const SpectralPoint& k, double r) {
  require_exterior(kp, r);
  const Jet x = jr(r);
  const Jet h = rtt_weight(kp, k.eps, x) * rtilde_prime_rational(kp, k)(x);
  return h.d(1);
}

Mat3 rtilde_prime_matrix(const KerrParams& kp, double eps, double r) {
  require_exterior(kp, r);
  const Entries en = weighted_entries(kp, eps);
  const double vlp = vl_jet(kp, jr(r)).d(1);
  return scaled(kp, eps, vlp, d_over_s4(kp, en.el)(r), d_over_s4(kp, en.ll)(r), d_over_s4(kp, en.qq)(r));
}

Mat3 rtildetilde_pp_matrix(const KerrParams& kp, double eps, double r) {
  require_exterior(kp, r);
  const Entries en = weighted_entries(kp, eps);
  const Jet x = jr(r);
  const Jet w = rtt_weight(kp, eps, x);
  const Jet vlp = vl_jet(kp, x).derivative();
  auto dd = [&](const Poly& N) { return (w * d_over_s4(kp, N)(x)).d(1); };
  return scaled(kp, eps, (w * vlp).d(1), dd(en.el), dd(en.ll), dd(en.qq));
}

double quad(const Mat3& m, const std::array<double, 3>& v) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += v[i] * m[i][j] * v[j];
  return s;
}

std::array<double, 3> sym_eigenvalues(const Mat3& m) {
  Eigen::Matrix3d A;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) A(i, j) = m[i][j];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(A, Eigen::EigenvaluesOnly);
  const auto ev = es.eigenvalues();
  return {ev(0), ev(1), ev(2)};
}

std::array<double, 3> scaled_vector(const SpectralPoint& k) { return {k.eps * k.e, k.ell_z, std::sqrt(k.Q)}; }

double find_root(const KerrParams& kp, const SpectralPoint& k) {
  if (k.norm2() <= 0.0) throw DomainError("find_root needs |k| > 0");
  const Rational f = rtilde_prime_rational(kp, k);
  const double M = kp.M;
  const int n = 4000;
  const double l0 = std::log(1e-6 * M), l1 = std::log(1e4 * M);
  int changes = 0;
  double lo = 0.0, hi = 0.0;
  double xp = kp.r_plus + std::exp(l0);
  double fp = f(xp);
  for (int i = 1; i < n; ++i) {
    const double r = kp.r_plus + std::exp(l0 + (l1 - l0) * i / (n - 1));
    const double fr = f(r);
    if ((fp > 0.0 && fr <= 0.0) || (fp < 0.0 && fr >= 0.0)) {
      ++changes;
      lo = xp;
      hi = r;
    }
    if (fr != 0.0) {
      xp = r;
      fp = fr;
    }
  }
  if (changes != 1) throw RootError("Rtilde' has " + std::to_string(changes) + " sign changes in the exterior");
  if (f(hi) == 0.0) return hi;
  boost::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(50);
  auto res = boost::math::tools::toms748_solve([&](double r) { return f(r); }, lo, hi, tol, iters);
  return 0.5 * (res.first + res.second);
}

// --- multiplier -------------------------------------------------------------

Multiplier::Multiplier(MultiplierSpec spec, const KerrParams& kp, const SpectralPoint& k)
    : spec_(spec), kp_(kp), k_(k) {
  if (spec_.variant == Variant::oversimplified)
    throw DomainError("the oversimplified field is a plain vector field; use oversimplified_f");
  if (k_.norm2() <= 0.0) throw DomainError("multiplier needs |k| > 0");
  rtp_ = rtilde_prime_rational(kp_, k_);
  if (spec_.variant != Variant::basic) r_root_ = find_root(kp_, k_);
}

Jet Multiplier::f1(const Jet& r) const { return vl_jet(kp_, r) * f12_jet(kp_, k_.eps, r); }

Jet Multiplier::f2(const Jet& r) const {
  if (spec_.variant == Variant::basic) return basic_f2_jet(kp_, r);
  return Jet::constant(1.0);
}

Jet Multiplier::F3(const Jet& r) const {
  const double M = kp_.M;
  if (spec_.variant == Variant::basic) {
    const Jet chi = cutoff(CutoffSpec{CutoffKind::mid}, kp_, r);
    const Jet f31 = -1.0 * rtp_(r) / k_.norm2();
    const Jet f32 = -1.0 * vl_jet(kp_, r).derivative();
    return chi * f31 + (1.0 - chi) * f32;
  }
  const double root_k = std::pow(k_.norm2(), 0.25);  // |k|^{1/2}
  CutoffSpec near{CutoffKind::near, spec_.r_gap};
  near.center = r_root_ / M;
  const Jet chi = cutoff(near, kp_, r);
  const double pref = spec_.variant == Variant::refined ? M * M * root_k : M * M;
  return pref * atan(root_k * (r - r_root_) / M) * chi;
}

FQ Multiplier::at(double r) const {
  require_exterior(kp_, r);
  const Jet x = jr(r);
  const Jet g = f2(x) * F3(x);
  const Jet a = f1(x);
  return {(a * g).value(), 0.5 * a.value() * g.d(1)};
}

CoefficientTriple Multiplier::simplified(double r) const {
  require_exterior(kp_, r);
  const Jet x = jr(r);
  const Jet g = f2(x) * F3(x);
  const Jet f = f1(x);
  const Jet s = s_jet(kp_, x);
  const Jet rf = sqrt(f12_jet(kp_, k_.eps, x));
  const double D = delta_jet(kp_, x).value(), Dp = 2.0 * r - 2.0 * kp_.M;

  CoefficientTriple out{};
  out.A = D * D * rf.value() / s.value() * (rf * g / s).d(1);
  out.U = -0.5 * rtp_(r) * g.value();
  const Jet v0 = -2.0 * kp_.M / x;
  const double qp = 0.5 * (f.d(1) * g.d(1) + f.value() * g.d(2));
  const double qpp = 0.5 * (f.d(2) * g.d(1) + 2.0 * f.d(1) * g.d(2) + f.value() * g.d(3));
  out.V = -0.5 * (f * v0).d(1) * g.value() - 0.5 * (Dp * qp + D * qpp);
  out.scale = std::max({std::abs(out.A), std::abs(out.U), std::abs(out.V)});
  return out;
}

CoefficientTriple Multiplier::general(double r) const {
  require_exterior(kp_, r);
  const Jet x = jr(r);
  const Jet F = f1(x) * f2(x) * F3(x);
  const Jet q = 0.5 * f1(x) * (f2(x) * F3(x)).derivative();
  const Jet D = delta_jet(kp_, x);
  const Jet RoD = curly_R_poly(kp_, k_)(x) / D;
  const Jet v0 = -2.0 * kp_.M / x;
  const double Fv = F.value(), Fp = F.d(1), qv = q.value();

  const double a1 = -0.5 * D.d(1) * Fv, a2 = 0.5 * D.value() * Fp, a3 = qv * D.value();
  const double u1 = -0.5 * RoD.d(1) * Fv, u2 = -0.5 * RoD.value() * Fp, u3 = RoD.value() * qv;
  const double v1 = -0.5 * v0.d(1) * Fv, v2 = -0.5 * v0.value() * Fp, v3 = qv * v0.value();
  const double v4 = -0.5 * (D * q.derivative()).d(1);

  CoefficientTriple out{};
  out.A = a1 + a2 + a3;
  out.U = u1 + u2 + u3;
  out.V = v1 + v2 + v3 + v4;
  out.scale = std::max({std::abs(a1), std::abs(a2), std::abs(a3), std::abs(u1), std::abs(u2), std::abs(u3),
                        std::abs(v1), std::abs(v2), std::abs(v3), std::abs(v4)});
  return out;
}

// --- scans ------------------------------------------------------------------

PositivityReport positivity_scan(const MultiplierSpec& spec, const KerrParams& kp, const SpectralPoint& k_in,
                                 const std::vector<double>& r_grid) {
  SpectralPoint k = k_in;
  const double nk = std::sqrt(k.norm2());
  k.e /= nk;
  k.ell_z /= nk;
  k.Q /= nk * nk;
  const Multiplier mult(spec, kp, k);
  const double root = spec.variant == Variant::basic ? find_root(kp, k) : mult.r_root();
  const double M = kp.M, a = kp.a;
  const bool sphere = k.eps > 0.0 || a == 0.0;
  const Rational rtp = rtilde_prime_rational(kp, k);
  constexpr double inf = std::numeric_limits<double>::infinity();

  PositivityReport rep{root, inf, inf, inf, inf, 0.0, 0.0};
  for (double r : r_grid) {
    if (!(r > kp.r_plus)) continue;
    const auto c = mult.simplified(r);
    const double s = r * r + a * a, D = r * r - 2.0 * M * r + a * a;
    const double aref = D * D / s * M / (r * r);
    if (c.A / aref < rep.min_A_ratio) {
      rep.min_A_ratio = c.A / aref;
      rep.argmin_A = r;
    }

    double u = c.U;
    if (spec.variant == Variant::basic && sphere) {
      // U = 1/2 f2 (chi t^2 + (1 - chi) V_L' t), t = Rtilde' in [lam_min, lam_max]
      const auto ev = sym_eigenvalues(rtilde_prime_matrix(kp, k.eps, r));
      const Jet x = Jet::variable(r);
      const double f2 = mult.f2(x).value();
      const double chi = cutoff(CutoffSpec{CutoffKind::mid}, kp, r);
      const double vlp = vl_jet(kp, x).d(1);
      auto h = [&](double t) { return 0.5 * f2 * (chi * t * t + (1.0 - chi) * vlp * t); };
      u = std::min(h(ev[0]), h(ev[2]));
      if (chi > 0.0) {
        const double tv = -(1.0 - chi) * vlp / (2.0 * chi);
        if (tv > ev[0] && tv < ev[2]) u = std::min(u, h(tv));
      }
    }
    if (u < rep.min_U) {
      rep.min_U = u;
      rep.argmin_U = r;
    }

    const double dist = std::abs(r - root);
    if (dist > 0.0 && dist <= M) rep.min_rtp_ratio = std::min(rep.min_rtp_ratio, std::abs(rtp(r)) * r * r * r * r / (2.0 * dist));

    double rtt;
    if (sphere) {
      const auto ev = sym_eigenvalues(rtildetilde_pp_matrix(kp, k.eps, r));
      rtt = -ev[2];
    } else {
      rtt = -rtildetilde_pp(kp, k, r);
    }
    rep.min_rtt_ratio = std::min(rep.min_rtt_ratio, rtt * r * r / M);
  }
  return rep;
}

std::vector<SpectralPoint> unit_directions(double eps, int n) {
  std::vector<SpectralPoint> out;
  const double pi = std::numbers::pi;
  for (int i = 0; i < n; ++i) {
    const double al = eps > 0.0 ? pi * (i + 0.5) / n : 0.5 * pi;
    for (int j = 0; j < n; ++j) {
      const double be = pi * j / (n - 1);
      const double v0 = std::cos(al), v1 = std::sin(al) * std::cos(be), v2 = std::sin(al) * std::sin(be);
      out.push_back({eps > 0.0 ? v0 / eps : 0.0, v1, v2 * v2, eps});
    }
    if (eps <= 0.0) break;
  }
  return out;
}

RootScan root_localization_scan(double M, const std::vector<double>& a_over_M, const std::vector<double>& eps_over_M) {
  RootScan out{};
  for (double ao : a_over_M) {
    const KerrParams kp(M, ao * M);
    for (double eo : eps_over_M) {
      const double eps = eo * M;
      const double s = std::max(std::abs(ao) / eo, eo);
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& k : unit_directions(eps)) {
        double rr;
        try {
          rr = find_root(kp, k);
        } catch (const RootError&) {
          ++out.failures;
          out.min_failing_s = std::min(out.min_failing_s, s);
          continue;
        }
        lo = std::min(lo, rr);
        hi = std::max(hi, rr);
        const double c = std::abs(rr - 3.0 * M) / (M * s);
        if (c > out.C) {
          out.C = c;
          out.worst_a = ao;
          out.worst_eps = eo;
        }
        ++out.samples;
      }
      out.max_spread = std::max(out.max_spread, (hi - lo) / M);
    }
  }
  return out;
}

double oversimplified_f(const KerrParams& kp, double r) {
  require_exterior(kp, r);
  const double s = r * r + kp.a * kp.a, D = r * r - 2.0 * kp.M * r + kp.a * kp.a;
  return -(D / s) * (1.0 - 3.0 * kp.M / r);
}

OversimplifiedReport oversimplified_margin(const KerrParams& kp, double C, const std::vector<double>& r_grid) {
  const double M = kp.M, a = kp.a;
  OversimplifiedReport rep{std::numeric_limits<double>::infinity(), 0.0, 0.0};
  // f V_L' is negative only between the maximum of V_L and 3M; sample that gap densely
  std::vector<double> grid = r_grid;
  if (a != 0.0) {
    auto vlp = [&](double r) { return vl_jet(kp, Jet::variable(r)).d(1); };
    boost::uintmax_t iters = 200;
    auto res = boost::math::tools::toms748_solve(vlp, 2.5 * M, 3.5 * M, boost::math::tools::eps_tolerance<double>(50),
                                                 iters);
    const double r_max = 0.5 * (res.first + res.second);
    for (int i = 1; i < 64; ++i) grid.push_back(r_max + (3.0 * M - r_max) * i / 64.0);
  }
  for (double r : grid) {
    if (!(r > kp.r_plus)) continue;
    const Jet x = Jet::variable(r);
    const Jet s = s_jet(kp, x), D = delta_jet(kp, x);
    const Jet f = -1.0 * (D / s) * (1.0 - 3.0 * M / x);
    const double fv = f.value() * vl_jet(kp, x).d(1);
    const double w = D.value() / s.value();
    const double gap = 1.0 - 3.0 * M / r;
    const double base = w / (r * r * r) * gap * gap;
    if (std::abs(gap) > 1e-12) rep.min_ratio = std::min(rep.min_ratio, fv / base);

    const double need = C * base - fv;
    if (need > 0.0) {
      const double corr = std::abs(a) / M * w / (r * r * r) * std::pow(M / r, 100);
      rep.D_required = std::max(rep.D_required, corr > 0.0 ? need / corr : std::numeric_limits<double>::infinity());
    }

    const double w3 = w * w * w;
    const double lhs = -2.0 * w3 * (s * f / D).d(1);
    const double rhs = 6.0 * M / (r * r) * w3;
    rep.radial_identity_residual = std::max(rep.radial_identity_residual, std::abs(lhs - rhs) / std::abs(rhs));
  }
  return rep;
}

}  // namespace kerrlab::morawetz
