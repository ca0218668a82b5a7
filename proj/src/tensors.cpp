#include <cmath>

#include "kerrlab/evolution.hpp"

namespace kerrlab::evolution {

namespace {

double contract(const Mat4& T, const Vec4& X, const Vec4& Y) {
  double s = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) s += X[a] * Y[b] * T[a][b];
  return s;
}

cplx potential(const KerrParams& kp, double r, double theta) {
  const cplx p(r, -kp.a * std::cos(theta));
  return -2.0 * kp.M / (p * p * p);
}

}  // namespace

Mat4 stress_tensor(const KerrParams& kp, double r, double theta, const fields::CMat4& F) {
  const auto m = metric(kp, r, theta);
  if (m.pole_degenerate) throw DomainError("stress tensor on the axis");
  const auto& g = m.g;
  const auto& gi = m.ginv;
  // F_b^c
  fields::CMat4 Fup{};
  for (int b = 0; b < 4; ++b)
    for (int c = 0; c < 4; ++c) {
      cplx s = 0.0;
      for (int d = 0; d < 4; ++d) s += F[b][d] * gi[d][c];
      Fup[b][c] = s;
    }
  double FF = 0.0;  // Re F_cd conj(F^cd)
  for (int c = 0; c < 4; ++c)
    for (int d = 0; d < 4; ++d) {
      cplx up = 0.0;
      for (int e = 0; e < 4; ++e)
        for (int f = 0; f < 4; ++f) up += gi[c][e] * gi[d][f] * F[e][f];
      FF += (F[c][d] * std::conj(up)).real();
    }
  Mat4 T{};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      double s = 0.0;
      for (int c = 0; c < 4; ++c) s += (F[a][c] * std::conj(Fup[b][c])).real();
      T[a][b] = 4.0 * (s - 0.25 * g[a][b] * FF);
    }
  return T;
}

std::array<double, 6> stress_table_residuals(const KerrParams& kp, double r, double theta, const fields::FramePoint& f) {
  const auto F = fields::two_form(kp, r, theta, f);
  const auto T = stress_tensor(kp, r, theta, F);
  const auto e = tetrad(kp, r, theta);
  const auto s = fields::spin_components(kp, r, theta, f);
  const double p1 = std::norm(s.phi_1), p0 = std::norm(s.phi_0), pm = std::norm(s.phi_m1);
  const double scale = p1 + p0 + pm > 0.0 ? p1 + p0 + pm : 1.0;
  return {std::abs(contract(T, e.l, e.l) - 2.0 * p1) / scale,
          std::abs(contract(T, e.l, e.n) - p0) / scale,
          std::abs(contract(T, e.n, e.n) - 2.0 * pm) / scale,
          std::abs(contract(T, e.t_hat, e.t_hat) - (p1 + p0 + pm)) / scale,
          std::abs(contract(T, e.r_hat, e.r_hat) - (p1 + pm - p0)) / scale,
          std::abs(contract(T, e.theta_hat, e.theta_hat) + contract(T, e.phi_hat, e.phi_hat) - 2.0 * p0) / scale};
}

PseudoTensor fi_pseudo_tensor(const KerrParams& kp, double r, double theta, const FIPoint& p) {
  const auto m = metric(kp, r, theta);
  if (m.pole_degenerate) throw DomainError("pseudo tensor on the axis");
  PseudoTensor out{};
  double trace = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      out.P[a][b] = (std::conj(p.grad[a]) * p.grad[b]).real();
      trace += m.ginv[a][b] * out.P[a][b];
    }
  out.L = 0.5 * (trace + potential(kp, r, theta).real() * std::norm(p.ups));
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) out.T[a][b] = out.P[a][b] - m.g[a][b] * out.L;
  return out;
}

std::array<double, 4> fi_divergence_residual(const KerrParams& kp, int m, const FIClosure& u, double t, double r,
                                             double theta, double h) {
  const cplx im(0.0, double(m));
  auto point = [&](double tt, double rr, double th) {
    FIPoint p;
    p.ups = u(tt, rr, th);
    p.grad = {(u(tt + h, rr, th) - u(tt - h, rr, th)) / (2.0 * h), (u(tt, rr + h, th) - u(tt, rr - h, th)) / (2.0 * h),
              (u(tt, rr, th + h) - u(tt, rr, th - h)) / (2.0 * h), im * p.ups};
    return p;
  };
  // sqrt(-g) T^a_b
  auto density = [&](double tt, double rr, double th) {
    const auto T = fi_pseudo_tensor(kp, rr, th, point(tt, rr, th)).T;
    const auto gi = metric(kp, rr, th).ginv;
    const double vol = geometry_scalars(kp, rr, th).Sigma * std::sin(th);
    Mat4 out{};
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        double s = 0.0;
        for (int c = 0; c < 4; ++c) s += gi[a][c] * T[c][b];
        out[a][b] = vol * s;
      }
    return out;
  };
  const auto Tt0 = density(t - h, r, theta), Tt1 = density(t + h, r, theta);
  const auto Tr0 = density(t, r - h, theta), Tr1 = density(t, r + h, theta);
  const auto Th0 = density(t, r, theta - h), Th1 = density(t, r, theta + h);
  const double vol = geometry_scalars(kp, r, theta).Sigma * std::sin(theta);

  const auto c = point(t, r, theta);
  const auto T = fi_pseudo_tensor(kp, r, theta, c).T;
  const auto gi = metric(kp, r, theta).ginv;
  Mat4 Tup{};  // T^{mu nu}
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      double s = 0.0;
      for (int e = 0; e < 4; ++e)
        for (int f = 0; f < 4; ++f) s += gi[a][e] * gi[b][f] * T[e][f];
      Tup[a][b] = s;
    }
  const auto gr0 = metric(kp, r - h, theta).g, gr1 = metric(kp, r + h, theta).g;
  const auto gt0 = metric(kp, r, theta - h).g, gt1 = metric(kp, r, theta + h).g;

  const cplx V = potential(kp, r, theta);
  const cplx p(r, -kp.a * std::cos(theta));
  const cplx p4 = p * p * p * p;
  const std::array<cplx, 4> dV = {0.0, 6.0 * kp.M / p4, 6.0 * kp.M / p4 * cplx(0.0, kp.a * std::sin(theta)), 0.0};

  std::array<double, 4> res{};
  for (int b = 0; b < 4; ++b) {
    double div = (Tt1[0][b] - Tt0[0][b] + Tr1[1][b] - Tr0[1][b] + Th1[2][b] - Th0[2][b]) / (2.0 * h) / vol;
    if (b == 1 || b == 2) {
      double corr = 0.0;
      for (int e = 0; e < 4; ++e)
        for (int f = 0; f < 4; ++f) {
          const double dg = b == 1 ? (gr1[e][f] - gr0[e][f]) / (2.0 * h) : (gt1[e][f] - gt0[e][f]) / (2.0 * h);
          corr += dg * Tup[e][f];
        }
      div -= 0.5 * corr;
    }
    const double source = V.imag() * (std::conj(c.ups) * c.grad[b]).imag() - 0.5 * dV[b].real() * std::norm(c.ups);
    res[b] = div - source;
  }
  return res;
}

}  // namespace kerrlab::evolution
