#include "kerrlab/geometry.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <numbers>

namespace kerrlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_exterior(const KerrParams& kp, double r) {
  if (!(r > kp.r_plus)) throw DomainError("point at or inside the horizon: r = " + std::to_string(r));
}

}  // namespace

KerrParams::KerrParams(double mass, double spin) : M(mass), a(spin) {
  if (!(M > 0.0)) throw DomainError("mass must be positive");
  if (std::abs(a) > M) throw DomainError("|a| > M is not a black hole");
  const double root = std::sqrt(M * M - a * a);
  r_plus = M + root;
  r_minus = M - root;
}

RadialPoint radial_point_from_x(const KerrParams& kp, double x) {
  if (!(x > 0.0)) throw DomainError("x = r - r_plus must be positive");
  return {kp.r_plus + x, x, x * (x + kp.r_plus - kp.r_minus)};
}

GeometryScalars geometry_scalars(const KerrParams& kp, const RadialPoint& rp, double theta) {
  const double r = rp.r;
  const double a2 = kp.a * kp.a;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double ra = r * r + a2;
  GeometryScalars out{};
  out.Delta = rp.Delta;
  out.Sigma = r * r + a2 * c * c;
  out.Pi = ra * ra - a2 * rp.Delta * s * s;
  out.V_L = rp.Delta / (ra * ra);
  out.p = cplx(r, -kp.a * c);
  return out;
}

GeometryScalars geometry_scalars(const KerrParams& kp, double r, double theta) {
  require_exterior(kp, r);
  return geometry_scalars(kp, radial_point_from_x(kp, r - kp.r_plus), theta);
}

Metric metric(const KerrParams& kp, double r, double theta) {
  require_exterior(kp, r);
  const auto gs = geometry_scalars(kp, r, theta);
  const double s = std::sin(theta);
  const double s2 = s * s;
  const double M = kp.M, a = kp.a;
  Metric m;
  m.g[0][0] = -(1.0 - 2.0 * M * r / gs.Sigma);
  m.g[0][3] = m.g[3][0] = -2.0 * a * M * r * s2 / gs.Sigma;
  m.g[1][1] = gs.Sigma / gs.Delta;
  m.g[2][2] = gs.Sigma;
  m.g[3][3] = gs.Pi * s2 / gs.Sigma;

  const double sd = gs.Sigma * gs.Delta;
  m.ginv[0][0] = -gs.Pi / sd;
  m.ginv[0][3] = m.ginv[3][0] = -2.0 * a * M * r / sd;
  m.ginv[1][1] = gs.Delta / gs.Sigma;
  m.ginv[2][2] = 1.0 / gs.Sigma;
  if (s2 == 0.0) {
    m.pole_degenerate = true;
    m.ginv[3][3] = kNaN;
  } else {
    m.ginv[3][3] = (gs.Delta - a * a * s2) / (sd * s2);
  }
  return m;
}

double dot(const Mat4& g, const Vec4& u, const Vec4& v) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s += g[i][j] * u[i] * v[j];
  return s;
}

cplx dot(const Mat4& g, const CVec4& u, const CVec4& v) {
  cplx s = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s += g[i][j] * u[i] * v[j];
  return s;
}

namespace {

void complete_null(Tetrad& t) {
  const double k = 1.0 / std::numbers::sqrt2;
  for (int i = 0; i < 4; ++i) {
    t.l[i] = k * (t.t_hat[i] + t.r_hat[i]);
    t.n[i] = k * (t.t_hat[i] - t.r_hat[i]);
    t.m[i] = k * cplx(t.theta_hat[i], t.phi_hat[i]);
  }
}

}  // namespace

Tetrad tetrad(const KerrParams& kp, double r, double theta) {
  require_exterior(kp, r);
  const auto gs = geometry_scalars(kp, r, theta);
  const double a = kp.a;
  const double s = std::sin(theta);
  Tetrad t;
  const double nt = 1.0 / std::sqrt(gs.Sigma * gs.Delta);
  t.t_hat = {(r * r + a * a) * nt, 0.0, 0.0, a * nt};
  t.r_hat = {0.0, std::sqrt(gs.Delta / gs.Sigma), 0.0, 0.0};
  t.theta_hat = {0.0, 0.0, 1.0 / std::sqrt(gs.Sigma), 0.0};
  if (s == 0.0) {
    t.pole_degenerate = true;
    t.phi_hat = {kNaN, kNaN, kNaN, kNaN};
  } else {
    const double ns = 1.0 / std::sqrt(gs.Sigma);
    t.phi_hat = {a * s * ns, 0.0, 0.0, ns / s};
  }
  complete_null(t);
  return t;
}

Tetrad zamo_frame(const KerrParams& kp, double r, double theta) {
  require_exterior(kp, r);
  const auto gs = geometry_scalars(kp, r, theta);
  const double s = std::sin(theta);
  const double alpha = std::sqrt(gs.Delta * gs.Sigma / gs.Pi);
  const double omega = 2.0 * kp.a * kp.M * r / gs.Pi;
  Tetrad t;
  t.t_hat = {1.0 / alpha, 0.0, 0.0, omega / alpha};
  t.r_hat = {0.0, std::sqrt(gs.Delta / gs.Sigma), 0.0, 0.0};
  t.theta_hat = {0.0, 0.0, 1.0 / std::sqrt(gs.Sigma), 0.0};
  if (s == 0.0) {
    t.pole_degenerate = true;
    t.phi_hat = {kNaN, kNaN, kNaN, kNaN};
  } else {
    t.phi_hat = {0.0, 0.0, 0.0, std::sqrt(gs.Sigma / gs.Pi) / s};
  }
  complete_null(t);
  return t;
}

// --- tortoise ---------------------------------------------------------------

Tortoise::Tortoise(const KerrParams& kp) : kp_(kp) {
  const double w = kp.r_plus - kp.r_minus;
  c_plus_ = 2.0 * kp.M * kp.r_plus / w;
  c_minus_ = -2.0 * kp.M * kp.r_minus / w;
  const double r0 = 10.0 * kp.M;
  offset_ = (r0 + 2.0 * kp.M * std::log(r0 / (2.0 * kp.M) - 1.0)) - raw(r0);
}

double Tortoise::raw(double r) const {
  const double x = r - kp_.r_plus;
  double v = r + c_plus_ * std::log(x);
  if (c_minus_ != 0.0) v += c_minus_ * std::log(x + kp_.r_plus - kp_.r_minus);
  return v;
}

double Tortoise::r_star(double r) const {
  require_exterior(kp_, r);
  return raw(r) + offset_;
}

double Tortoise::x_of(double rs) const {
  // monotone in u = ln x
  const double w = kp_.r_plus - kp_.r_minus;
  auto f = [&](double u) {
    const double x = std::exp(u);
    double v = kp_.r_plus + x + c_plus_ * u + offset_ - rs;
    if (c_minus_ != 0.0) v += c_minus_ * std::log(x + w);
    return v;
  };
  // r* ~ x for large x and ~ c_plus ln x near the horizon
  double lo = std::min((rs - kp_.r_plus - offset_ - 1.0) / c_plus_, 0.0) - 5.0;
  double hi = std::log(std::max(std::abs(rs) + 10.0 * kp_.M, 1.0)) + 2.0;
  while (f(lo) > 0.0) lo -= 10.0;
  while (f(hi) < 0.0) hi += 1.0;
  boost::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(52);
  auto res = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return std::exp(0.5 * (res.first + res.second));
}

double Tortoise::r_of(double rs) const { return kp_.r_plus + x_of(rs); }

double Tortoise::dr_drstar(double r) const {
  require_exterior(kp_, r);
  const auto gs = geometry_scalars(kp_, r, 0.5 * std::numbers::pi);
  return gs.Delta / (r * r + kp_.a * kp_.a);
}

// --- cutoffs ----------------------------------------------------------------

Jet smoothstep(const Jet& x) {
  if (x.value() <= 0.0) return Jet::constant(0.0);
  if (x.value() >= 1.0) return Jet::constant(1.0);
  const Jet p = exp(-1.0 / x);
  const Jet q = exp(-1.0 / (1.0 - x));
  return p / (p + q);
}

double smoothstep(double x) { return smoothstep(Jet::constant(x)).value(); }

Jet cutoff(const CutoffSpec& spec, const KerrParams& kp, const Jet& x) {
  const double M = kp.M;
  switch (spec.kind) {
    case CutoffKind::blend:
      return 1.0 - smoothstep((x - 10.0 * M) / M);
    case CutoffKind::mid:
      return smoothstep((x - 2.4 * M) / (0.3 * M)) * (1.0 - smoothstep((x - 5.0 * M) / M));
    case CutoffKind::far: {
      const double g = spec.r_gap * M;
      return smoothstep((abs(x - 3.0 * M) - g) / g);
    }
    case CutoffKind::near: {
      const double g = spec.r_gap * M;
      return 1.0 - smoothstep((abs(x - spec.center * M) - 2.0 * g) / g);
    }
    case CutoffKind::time:
      return smoothstep((x + M) / M) * (1.0 - smoothstep((x - spec.T) / M));
  }
  throw DomainError("unknown cutoff kind");
}

double cutoff(const CutoffSpec& spec, const KerrParams& kp, double x) {
  return cutoff(spec, kp, Jet::constant(x)).value();
}

// --- blended vectors --------------------------------------------------------

BlendedVectors blended_vectors(const KerrParams& kp, double r, double theta) {
  require_exterior(kp, r);
  const auto gs = geometry_scalars(kp, r, theta);
  const double a = kp.a;
  BlendedVectors b{};
  b.omega_pnv = a / (r * r + a * a);
  b.omega_perp = 2.0 * a * kp.M * r / gs.Pi;
  b.omega_chi = cutoff(CutoffSpec{CutoffKind::blend}, kp, r) * kp.omega_horizon();
  b.T_chi = {1.0, 0.0, 0.0, b.omega_chi};
  b.T_perp = {1.0, 0.0, 0.0, b.omega_perp};
  b.T_pnv = {1.0, 0.0, 0.0, b.omega_pnv};
  return b;
}

Vec4 hypersurface_normal(const KerrParams& kp, double r, double theta) {
  require_exterior(kp, r);
  const auto gs = geometry_scalars(kp, r, theta);
  const double w = gs.Pi / gs.Delta * std::sin(theta);
  return {w, 0.0, 0.0, 2.0 * kp.a * kp.M * r / gs.Pi * w};
}

Vec4 hypersurface_normal_from_metric(const KerrParams& kp, double r, double theta) {
  const Metric m = metric(kp, r, theta);
  const double sqrt_det = geometry_scalars(kp, r, theta).Sigma * std::sin(theta);
  Vec4 out{};
  for (int i = 0; i < 4; ++i) out[i] = -m.ginv[0][i] * sqrt_det;
  return out;
}

}  // namespace kerrlab
