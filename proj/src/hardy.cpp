#include "kerrlab/hardy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kerrlab/quadrature.hpp"

namespace kerrlab::hardy {

double HardyProblem::weight(double x) const {
  const auto rp = radial_point_from_x(kp, x);
  return rp.Delta * rp.Delta / ((rp.r * rp.r + kp.a * kp.a) * rp.r * rp.r);
}

double HardyProblem::potential(double x) const {
  const double r = kp.r_plus + x, M = kp.M;
  const auto& c = v_numerator;
  return (c[0] * r * r + c[1] * M * r + c[2] * M * M) / (6.0 * std::pow(r, 4));
}

double HardyProblem::transformed_potential(double x) const {
  const double dd = d();
  const double r = kp.r_plus + x;
  const double a2 = kp.a * kp.a;
  const double ra = r * r + a2;
  // L = (ln A)'
  const double L = 2.0 / x + 2.0 / (x + dd) - 2.0 * r / ra - 2.0 / r;
  const double dL = -2.0 / (x * x) - 2.0 / ((x + dd) * (x + dd)) - 2.0 * (a2 - r * r) / (ra * ra) + 2.0 / (r * r);
  return potential(x) / weight(x) + 0.5 * dL + 0.25 * L * L;
}

Rational HardyProblem::transformed_rational() const {
  const double dd = d(), M = kp.M, a2 = kp.a * kp.a;
  const Poly x{0.0, 1.0};
  const Poly r{kp.r_plus, 1.0};
  const Poly ra = r * r + Poly::constant(a2);
  const Poly delta = x * (x + Poly::constant(dd));
  const Rational L = Rational(Poly::constant(2.0), x) + Rational(Poly::constant(2.0), x + Poly::constant(dd)) -
                     Rational(2.0 * r, ra) - Rational(Poly::constant(2.0), r);
  const auto& c = v_numerator;
  const Poly numer = c[0] * (r * r) + (c[1] * M) * r + Poly::constant(c[2] * M * M);
  // V / A = N (r^2+a^2) / (6 r^2 Delta^2)
  const Rational v_over_a(numer * ra, 6.0 * (r * r) * delta * delta);
  return v_over_a + 0.5 * L.derivative() + 0.25 * (L * L);
}

WCoefficients to_W(const HardyProblem& problem) {
  const double dd = problem.d();
  const Rational W = problem.transformed_rational();
  const Poly x{0.0, 1.0};
  const Poly scale = 6.0 * (x * x) * pow(x + Poly::constant(dd), 2);
  const auto div = divide(W.num() * scale, W.den());
  const double size = (W.num() * scale).norm_inf();
  if (div.remainder.norm_inf() > 1e-10 * size || div.quotient.degree() > 2)
    throw StructureError("W is not of the form (X x^2 + Y x + Z)/(6 x^2 (x+d)^2)");
  return {div.quotient.coeff(2), div.quotient.coeff(1), div.quotient.coeff(0)};
}

HypergeometricParams solve_parameters(const WCoefficients& w, double d) {
  const double disc_a = 0.25 + w.Z / (6.0 * d * d);
  if (disc_a < 0.0) throw DomainError("complex exponent at x = 0");
  HypergeometricParams p{};
  p.alpha = 0.5 + std::sqrt(disc_a);
  const double aa = p.alpha * (p.alpha - 1.0);
  const double bb = w.X / 6.0 - w.Y / (6.0 * d) + aa;
  const double disc_b = 0.25 + bb;
  if (disc_b < 0.0) throw DomainError("complex exponent at x = -d");
  p.beta = 0.5 - std::sqrt(disc_b);
  p.c = 2.0 * p.alpha;
  const double sum = 2.0 * (p.alpha + p.beta) - 1.0;
  const double prod = aa + 2.0 * p.alpha * p.beta + p.beta * (p.beta - 1.0) - w.X / 6.0;
  const double disc = sum * sum - 4.0 * prod;
  if (disc < 0.0) throw DomainError("complex hypergeometric parameters a, b");
  const double s = std::sqrt(disc);
  // stable pair of roots
  const double q = -0.5 * (-sum + std::copysign(s, -sum));
  double r1 = q, r2 = prod / q;
  if (q == 0.0) r1 = r2 = 0.5 * sum;
  p.a = std::min(r1, r2);
  p.b = std::max(r1, r2);
  p.alpha_integer = std::abs(p.alpha - std::round(p.alpha)) < 1e-12;
  return p;
}

std::array<double, 5> condition_residuals(const HypergeometricParams& p, const WCoefficients& w, double d) {
  const double aa = p.alpha * (p.alpha - 1.0), bb = p.beta * (p.beta - 1.0);
  return {
      aa * d * d - w.Z / 6.0,
      bb - (w.X / 6.0 - w.Y / (6.0 * d) + aa),
      p.c - 2.0 * p.alpha,
      (-p.a - p.b - 1.0) + 2.0 * (p.alpha + p.beta),
      -p.a * p.b - (-aa - 2.0 * p.alpha * p.beta - bb + w.X / 6.0),
  };
}

bool positivity_conditions_hold(const HypergeometricParams& p) {
  return p.a < 0.0 && 0.0 < p.b && p.b < p.c && !p.alpha_integer;
}

// --- 2F1 ---------------------------------------------------------------------

namespace {

// Plain series for |z| <= 1/2 with a tail bound.
// For k >= n with n + c > 0 the term ratio is bounded by
//   rho_n = |z| max(1, (n+|a|)/(n+1)) max(1, (n+|b|)/(n+c)).
SeriesValue series_2f1(double a, double b, double c, double z) {
  SeriesValue out;
  if (c <= 0.0 && c == std::floor(c)) return out;
  double term = 1.0, sum = 1.0;
  constexpr int kMaxTerms = 5000;
  for (int n = 0; n < kMaxTerms; ++n) {
    term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z;
    sum += term;
    const int m = n + 1;
    if (term == 0.0) {
      out = {sum, 0.0, m + 1, true};
      return out;
    }
    if (m + c > 0.0) {
      const double rho = std::abs(z) * std::max(1.0, (m + std::abs(a)) / (m + 1.0)) *
                         std::max(1.0, (m + std::abs(b)) / (m + c));
      if (rho < 1.0) {
        const double tail = std::abs(term) * rho / (1.0 - rho);
        if (tail <= 1e-16 * std::abs(sum) || tail == 0.0) {
          out = {sum, tail + 4.0 * m * std::numeric_limits<double>::epsilon() * std::abs(sum), m + 1, true};
          return out;
        }
      }
    }
  }
  out.value = sum;
  out.terms = kMaxTerms;
  return out;
}

// 2F1(a,b;c;w) for w in (1/2, 1] through 1 - w.
SeriesValue connection_2f1(double a, double b, double c, double w) {
  const double s = c - a - b;
  if (std::abs(s - std::round(s)) < 1e-12) {
    SeriesValue bad;
    return bad;  // logarithmic case not needed here
  }
  const double u = 1.0 - w;
  const double g1 = std::tgamma(c) * std::tgamma(s) / (std::tgamma(c - a) * std::tgamma(c - b));
  const double g2 = std::tgamma(c) * std::tgamma(-s) / (std::tgamma(a) * std::tgamma(b));
  const SeriesValue f1 = series_2f1(a, b, 1.0 - s, u);
  SeriesValue out;
  if (u == 0.0) {
    if (s <= 0.0) return out;
    out = {g1, 64.0 * std::numeric_limits<double>::epsilon() * std::abs(g1), 1, true};
    return out;
  }
  const SeriesValue f2 = series_2f1(c - a, c - b, 1.0 + s, u);
  const double pw = std::pow(u, s);
  out.value = g1 * f1.value + g2 * pw * f2.value;
  out.error_bound = std::abs(g1) * f1.error_bound + std::abs(g2 * pw) * f2.error_bound +
                    64.0 * std::numeric_limits<double>::epsilon() * (std::abs(g1 * f1.value) + std::abs(g2 * pw * f2.value));
  out.terms = f1.terms + f2.terms;
  out.converged = f1.converged && f2.converged;
  return out;
}

}  // namespace

SeriesValue gauss_2f1(double a, double b, double c, double z) {
  if (z > 1.0) throw DomainError("gauss_2f1: z > 1 needs analytic continuation");
  if (std::abs(z) <= 0.5) return series_2f1(a, b, c, z);
  if (z > 0.5) return connection_2f1(a, b, c, z);
  // Pfaff: 2F1(a,b;c;z) = (1-z)^{-a} 2F1(a, c-b; c; z/(z-1))
  const double w = z / (z - 1.0);
  const double pref = std::pow(1.0 - z, -a);
  SeriesValue inner = w <= 0.5 ? series_2f1(a, c - b, c, w) : connection_2f1(a, c - b, c, w);
  inner.value *= pref;
  inner.error_bound *= std::abs(pref);
  return inner;
}

double positive_solution(const HypergeometricParams& p, double d, double x) {
  const auto f = gauss_2f1(p.a, p.b, p.c, -x / d);
  return std::pow(x, p.alpha) * std::pow(x + d, p.beta) * f.value;
}

PositiveSolutionReport positive_solution_scan(const HypergeometricParams& p, const WCoefficients& w, double d,
                                              double x_min, double x_max, int n) {
  PositiveSolutionReport rep{std::numeric_limits<double>::infinity(), 0.0, 0.0, 0.0, true};
  const double l0 = std::log(x_min), l1 = std::log(x_max);
  for (int i = 0; i < n; ++i) {
    const double x = std::exp(l0 + (l1 - l0) * i / (n - 1.0));
    const double v = positive_solution(p, d, x);
    if (v < rep.min_v) {
      rep.min_v = v;
      rep.argmin_x = x;
    }
    // fourth-order second difference on a local stencil
    const double h = 1e-3 * x;
    const double vm2 = positive_solution(p, d, x - 2 * h), vm1 = positive_solution(p, d, x - h);
    const double vp1 = positive_solution(p, d, x + h), vp2 = positive_solution(p, d, x + 2 * h);
    const double v2 = (-vm2 + 16 * vm1 - 30 * v + 16 * vp1 - vp2) / (12 * h * h);
    const double wv = w(x, d) * v;
    const double res = std::abs(-v2 + wv) / (std::abs(v2) + std::abs(wv) + std::abs(v) / (x * x));
    rep.max_relative_residual = std::max(rep.max_relative_residual, res);
  }
  rep.positive = rep.min_v > 0.0;
  const double xa = x_min, xb = 10.0 * x_min;
  rep.small_x_slope = (std::log(positive_solution(p, d, xb)) - std::log(positive_solution(p, d, xa))) / std::log(xb / xa);
  return rep;
}

// --- discrete Rayleigh quotient ----------------------------------------------

RayleighResult rayleigh_min(const std::function<double(double)>& W, double x_min, double x_max, int n) {
  const int nodes = n + 2;
  std::vector<double> x(nodes);
  const double l0 = std::log(x_min), l1 = std::log(x_max);
  for (int i = 0; i < nodes; ++i) x[i] = std::exp(l0 + (l1 - l0) * i / (nodes - 1.0));
  x.front() = x_min;
  x.back() = x_max;

  // full-node tridiagonal assembly, Dirichlet rows dropped afterwards
  std::vector<double> kd(nodes, 0.0), ko(nodes - 1, 0.0), md(nodes, 0.0), mo(nodes - 1, 0.0);
  const QuadratureRule gl = gauss_legendre(4);
  double w_min = std::numeric_limits<double>::infinity();
  for (int e = 0; e + 1 < nodes; ++e) {
    const double h = x[e + 1] - x[e];
    kd[e] += 1.0 / h;
    kd[e + 1] += 1.0 / h;
    ko[e] -= 1.0 / h;
    md[e] += h / 3.0;
    md[e + 1] += h / 3.0;
    mo[e] += h / 6.0;
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double s = 0.5 * (gl.nodes[q] + 1.0);
      const double xq = x[e] + s * h;
      const double wq = W(xq);
      w_min = std::min(w_min, wq);
      const double jw = 0.5 * h * gl.weights[q] * wq;
      kd[e] += jw * (1.0 - s) * (1.0 - s);
      kd[e + 1] += jw * s * s;
      ko[e] += jw * s * (1.0 - s);
    }
  }

  auto count_below = [&](double sigma) {
    int neg = 0;
    double piv = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double diag = kd[i] - sigma * md[i];
      if (i == 1) {
        piv = diag;
      } else {
        const double off = ko[i - 1] - sigma * mo[i - 1];
        piv = diag - off * off / piv;
      }
      if (piv == 0.0) piv = -1e-300;
      if (piv < 0.0) ++neg;
    }
    return neg;
  };

  double lo = std::min(w_min, 0.0) - 1e-12;
  double hi = std::max(1.0, std::abs(lo));
  while (count_below(hi) == 0) hi *= 2.0;
  RayleighResult res{0.0, lo, 0};
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (count_below(mid) >= 1)
      hi = mid;
    else
      lo = mid;
    res.bisection_steps = it + 1;
  }
  res.min_eigenvalue = 0.5 * (lo + hi);
  return res;
}

}  // namespace kerrlab::hardy
