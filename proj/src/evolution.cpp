#include "kerrlab/evolution.hpp"

#include <cmath>
#include <numbers>

#include "kerrlab/quadrature.hpp"

namespace kerrlab::evolution {

namespace {

constexpr cplx kI(0.0, 1.0);
const double kSqrt2 = std::sqrt(2.0);

void validate(const GridSpec& g) {
  if (!(g.rstar_max > g.rstar_min)) throw EvolutionError("empty r* interval");
  if (g.n_r < 8) throw EvolutionError("need at least 8 radial nodes");
  if (g.n_theta < 1 || g.n_theta_maxwell < 4) throw EvolutionError("too few theta nodes");
  // RK4 with the 4th-order first derivative is stable up to about 2;
  // the second-order wave operator and the shift terms need margin
  if (!(g.cfl > 0.0) || g.cfl > 1.0) throw EvolutionError("CFL factor must lie in (0, 1]");
  if (!(g.dissipation >= 0.0) || !(g.dissipation_theta >= 0.0)) throw EvolutionError("dissipation must be >= 0");
}

// 5-point Kreiss-Oliger operator, -(sigma/16h) D+^2 D-^2 h^4
inline cplx ko(const cplx* u, std::size_t stride, double sigma_over_16h) {
  return -sigma_over_16h * (u[2 * stride] - 4.0 * u[stride] + 6.0 * u[0] - 4.0 * u[-static_cast<std::ptrdiff_t>(stride)] +
                            u[-2 * static_cast<std::ptrdiff_t>(stride)]);
}

inline cplx d2_rstar(const cplx* u, std::size_t i, std::size_t n, std::size_t s, double h) {
  const cplx* c = u + i * s;
  if (i >= 2 && i + 2 < n)
    return (-c[-2 * std::ptrdiff_t(s)] + 16.0 * c[-std::ptrdiff_t(s)] - 30.0 * c[0] + 16.0 * c[s] - c[2 * s]) /
           (12.0 * h * h);
  return (c[-std::ptrdiff_t(s)] - 2.0 * c[0] + c[s]) / (h * h);
}

void axpy(std::vector<cplx>& y, const std::vector<cplx>& a, double c, const std::vector<cplx>& x) {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = a[k] + c * x[k];
}

}  // namespace

RadialGrid make_radial_grid(const KerrParams& kp, const GridSpec& g) {
  validate(g);
  const Tortoise tort(kp);
  RadialGrid rg;
  const auto n = static_cast<std::size_t>(g.n_r);
  rg.h = (g.rstar_max - g.rstar_min) / double(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double rs = (i + 1 == n) ? g.rstar_max : g.rstar_min + double(i) * rg.h;
    rg.rstar.push_back(rs);
    rg.pt.push_back(radial_point_from_x(kp, tort.x_of(rs)));
  }
  rg.weight = simpson_weights(n, rg.h);
  return rg;
}

cplx d_rstar(const cplx* u, std::size_t i, std::size_t n, std::size_t s, double h) {
  const cplx* c = u + i * s;
  const auto ps = std::ptrdiff_t(s);
  if (i == 0) return (-3.0 * c[0] + 4.0 * c[s] - c[2 * s]) / (2.0 * h);
  if (i + 1 == n) return (3.0 * c[0] - 4.0 * c[-ps] + c[-2 * ps]) / (2.0 * h);
  if (i == 1 || i + 2 == n) return (c[s] - c[-ps]) / (2.0 * h);
  return (c[-2 * ps] - 8.0 * c[-ps] + 8.0 * c[s] - c[2 * s]) / (12.0 * h);
}

// --- Fackerell-Ipser -------------------------------------------------------

FISolver::FISolver(const KerrParams& kp, const GridSpec& g)
    : kp_(kp), g_(g), rg_(make_radial_grid(kp, g)), basis_(angular::make_basis(g.m, g.n_theta)) {
  const double a = kp.a, M = kp.M, m = g.m;
  for (std::size_t i = 0; i < n_r(); ++i) {
    const auto& rp = rg_.pt[i];
    const double r = rp.r, ra = r * r + a * a;
    for (std::size_t j = 0; j < n_theta(); ++j) {
      const auto gs = geometry_scalars(kp, rp, basis_.theta[j]);
      const cplx sigma_v = -2.0 * M * std::conj(gs.p) / (gs.p * gs.p);
      c_rr_.push_back(ra * ra / gs.Pi);
      c_r_.push_back(2.0 * r * gs.Delta / gs.Pi);
      c_ang_.push_back(gs.Delta / gs.Pi);
      c_0_.push_back((m * m * a * a - gs.Delta * sigma_v) / gs.Pi);
      c_t_.push_back(-4.0 * kI * a * m * M * r / gs.Pi);
    }
  }
  work_.assign(5, zero_state());
}

ScalarState FISolver::zero_state(double t0) const {
  return {t0, std::vector<cplx>(size(), 0.0), std::vector<cplx>(size(), 0.0)};
}

std::vector<cplx> FISolver::d_rstar_field(const std::vector<cplx>& u) const {
  std::vector<cplx> out(size());
  const std::size_t nt = n_theta();
  for (std::size_t i = 0; i < n_r(); ++i)
    for (std::size_t j = 0; j < nt; ++j) out[index(i, j)] = d_rstar(u.data() + j, i, n_r(), nt, rg_.h);
  return out;
}

namespace {
void apply_rows(const Eigen::MatrixXd& A, const std::vector<cplx>& u, std::vector<cplx>& out, std::size_t nr) {
  const auto nt = static_cast<std::size_t>(A.rows());
  for (std::size_t i = 0; i < nr; ++i) {
    const cplx* row = u.data() + i * nt;
    cplx* o = out.data() + i * nt;
    for (std::size_t j = 0; j < nt; ++j) {
      cplx acc = 0.0;
      for (std::size_t k = 0; k < nt; ++k) acc += A(Eigen::Index(j), Eigen::Index(k)) * row[k];
      o[j] = acc;
    }
  }
}
}  // namespace

std::vector<cplx> FISolver::d_theta_field(const std::vector<cplx>& u) const {
  std::vector<cplx> out(size());
  apply_rows(basis_.dtheta, u, out, n_r());
  return out;
}

std::vector<cplx> FISolver::lap_field(const std::vector<cplx>& u) const {
  std::vector<cplx> out(size());
  apply_rows(basis_.lap, u, out, n_r());
  return out;
}

void FISolver::rhs(const ScalarState& s, ScalarState& out) const {
  const std::size_t nr = n_r(), nt = n_theta();
  const double h = rg_.h;
  out.t = s.t;
  out.ups = s.pi;
  auto& dpi = out.pi;
  dpi.resize(size());
  const Eigen::MatrixXd& L = basis_.lap;
  for (std::size_t i = 1; i + 1 < nr; ++i) {
    const cplx* row = s.ups.data() + i * nt;
    for (std::size_t j = 0; j < nt; ++j) {
      const std::size_t k = i * nt + j;
      cplx lap = 0.0;
      for (std::size_t l = 0; l < nt; ++l) lap += L(Eigen::Index(j), Eigen::Index(l)) * row[l];
      dpi[k] = c_rr_[k] * d2_rstar(s.ups.data() + j, i, nr, nt, h) + c_r_[k] * d_rstar(s.ups.data() + j, i, nr, nt, h) +
               c_ang_[k] * lap + c_0_[k] * s.ups[k] + c_t_[k] * s.pi[k];
    }
  }
  // ingoing at the horizon side, outgoing at the far end
  const double wh = kp_.omega_horizon() * g_.m;
  for (std::size_t j = 0; j < nt; ++j) {
    const std::size_t k0 = j, k1 = (nr - 1) * nt + j;
    dpi[k0] = d_rstar(s.pi.data() + j, 0, nr, nt, h) - kI * wh * s.pi[k0];
    dpi[k1] = -d_rstar(s.pi.data() + j, nr - 1, nr, nt, h);
  }
  if (g_.dissipation > 0.0) {
    const double c = g_.dissipation / (16.0 * h);
    for (std::size_t i = 2; i + 2 < nr; ++i)
      for (std::size_t j = 0; j < nt; ++j) {
        const std::size_t k = i * nt + j;
        out.ups[k] += ko(s.ups.data() + k, nt, c);
        dpi[k] += ko(s.pi.data() + k, nt, c);
      }
  }
}

void FISolver::step(ScalarState& s, double dt) const {
  auto& k1 = work_[0];
  auto& k2 = work_[1];
  auto& k3 = work_[2];
  auto& k4 = work_[3];
  auto& tmp = work_[4];
  rhs(s, k1);
  tmp.t = s.t + 0.5 * dt;
  axpy(tmp.ups, s.ups, 0.5 * dt, k1.ups);
  axpy(tmp.pi, s.pi, 0.5 * dt, k1.pi);
  rhs(tmp, k2);
  axpy(tmp.ups, s.ups, 0.5 * dt, k2.ups);
  axpy(tmp.pi, s.pi, 0.5 * dt, k2.pi);
  rhs(tmp, k3);
  tmp.t = s.t + dt;
  axpy(tmp.ups, s.ups, dt, k3.ups);
  axpy(tmp.pi, s.pi, dt, k3.pi);
  rhs(tmp, k4);
  const double c = dt / 6.0;
  for (std::size_t k = 0; k < s.ups.size(); ++k) {
    s.ups[k] += c * (k1.ups[k] + 2.0 * k2.ups[k] + 2.0 * k3.ups[k] + k4.ups[k]);
    s.pi[k] += c * (k1.pi[k] + 2.0 * k2.pi[k] + 2.0 * k3.pi[k] + k4.pi[k]);
  }
  s.t += dt;
}

// --- Maxwell ----------------------------------------------------------------

namespace {

// ghost values by reflection through the poles
inline cplx ghost(const cplx* row, std::ptrdiff_t j, std::ptrdiff_t n, double parity) {
  if (j < 0) return parity * row[-1 - j];
  if (j >= n) return parity * row[2 * n - 1 - j];
  return row[j];
}

inline cplx d_theta_ghost(const cplx* row, std::ptrdiff_t j, std::ptrdiff_t n, double parity, double dth) {
  return (ghost(row, j - 2, n, parity) - 8.0 * ghost(row, j - 1, n, parity) + 8.0 * ghost(row, j + 1, n, parity) -
          ghost(row, j + 2, n, parity)) /
         (12.0 * dth);
}

inline cplx ko_theta(const cplx* row, std::ptrdiff_t j, std::ptrdiff_t n, double parity, double c) {
  return -c * (ghost(row, j + 2, n, parity) - 4.0 * ghost(row, j + 1, n, parity) + 6.0 * row[j] -
               4.0 * ghost(row, j - 1, n, parity) + ghost(row, j - 2, n, parity));
}

}  // namespace

MaxwellSolver::MaxwellSolver(const KerrParams& kp, const GridSpec& g) : kp_(kp), g_(g), rg_(make_radial_grid(kp, g)) {
  const int nt = g.n_theta_maxwell;
  const double dth = std::numbers::pi / nt;
  // Fejer's first rule: spectral for int f(cos theta) sin theta d theta on these nodes
  for (int j = 0; j < nt; ++j) {
    const double th = (j + 0.5) * dth;
    double w = 1.0;
    for (int k = 1; k <= nt / 2; ++k) w -= 2.0 * std::cos(2.0 * k * th) / (4.0 * k * k - 1.0);
    theta_.push_back(th);
    theta_w_.push_back(2.0 * w / nt);
  }
  const double a = kp.a, M = kp.M;
  for (std::size_t i = 0; i < n_r(); ++i) {
    const auto& rp = rg_.pt[i];
    const double r = rp.r, ra = r * r + a * a, sd = std::sqrt(rp.Delta);
    ko_w_.push_back(std::sqrt(rp.Delta / ra));
    for (const double th : theta_) {
      const auto gs = geometry_scalars(kp, rp, th);
      const double s = std::sin(th), c = std::cos(th), sp = std::sqrt(gs.Pi);
      k_ar_.push_back(gs.Sigma / sp);
      k_at_.push_back(sd * gs.Sigma / sp);
      k_ap_.push_back(sd * s);
      sq_delta_.push_back(sd);
      c_over_sqd_.push_back(ra / sd);
      sqrt_pi_sin_.push_back(sp * s);
      sigma_.push_back(gs.Sigma);
      omega_.push_back(2.0 * a * M * r / gs.Pi);
      const double dpi_r = 4.0 * r * ra - a * a * (2.0 * r - 2.0 * M) * s * s;
      const double dpi_t = -2.0 * a * a * rp.Delta * s * c;
      const double dw_r = 2.0 * a * M * (gs.Pi - r * dpi_r) / (gs.Pi * gs.Pi);
      const double dw_t = -2.0 * a * M * r * dpi_t / (gs.Pi * gs.Pi);
      s_r_.push_back(s * std::sqrt(gs.Pi * rp.Delta) * dw_r / gs.Sigma);
      s_theta_.push_back(s * sp * dw_t / gs.Sigma);
      v_.push_back(a * sd * s / ra);
    }
  }
  ar_.resize(size());
  at_.resize(size());
  ap_.resize(size());
  work_.assign(5, zero_state());
}

MaxwellState MaxwellSolver::zero_state(double t0) const {
  MaxwellState s;
  s.t = t0;
  for (int c = 0; c < 3; ++c) {
    s.D[c].assign(size(), 0.0);
    s.B[c].assign(size(), 0.0);
  }
  return s;
}

void MaxwellSolver::curl(const std::vector<cplx>& xr, const std::vector<cplx>& xt, const std::vector<cplx>& xp,
                         std::array<std::vector<cplx>, 3>& out) const {
  const std::size_t nr = n_r(), nt = n_theta();
  const double h = rg_.h, dth = std::numbers::pi / double(nt);
  const double par = (g_.m % 2 == 0) ? 1.0 : -1.0;
  const cplx im = kI * double(g_.m);
  for (std::size_t k = 0; k < size(); ++k) {
    ar_[k] = k_ar_[k] * xr[k];
    at_[k] = k_at_[k] * xt[k];
    ap_[k] = k_ap_[k] * xp[k];
  }
  for (std::size_t i = 0; i < nr; ++i) {
    const cplx* ar = ar_.data() + i * nt;
    const cplx* ap = ap_.data() + i * nt;
    for (std::size_t j = 0; j < nt; ++j) {
      const std::size_t k = i * nt + j;
      const auto jj = std::ptrdiff_t(j), n = std::ptrdiff_t(nt);
      const cplx dth_ap = d_theta_ghost(ap, jj, n, par, dth);
      const cplx dth_ar = d_theta_ghost(ar, jj, n, par, dth);
      const cplx dr_ap = d_rstar(ap_.data() + j, i, nr, nt, h);
      const cplx dr_at = d_rstar(at_.data() + j, i, nr, nt, h);
      out[0][k] = (dth_ap - im * at_[k]) / sqrt_pi_sin_[k];
      out[1][k] = (im * ar_[k] * sq_delta_[k] - c_over_sqd_[k] * dr_ap) / sqrt_pi_sin_[k];
      out[2][k] = (c_over_sqd_[k] * dr_at - sq_delta_[k] * dth_ar) / sigma_[k];
    }
  }
}

void MaxwellSolver::rhs(const MaxwellState& s, MaxwellState& out) const {
  out.t = s.t;
  for (int c = 0; c < 3; ++c) {
    out.D[c].resize(size());
    out.B[c].resize(size());
  }
  curl(s.D[0], s.D[1], s.D[2], out.B);
  for (auto& b : out.B)
    for (auto& x : b) x = -x;
  curl(s.B[0], s.B[1], s.B[2], out.D);

  const cplx im = kI * double(g_.m);
  for (std::size_t k = 0; k < size(); ++k) {
    const cplx rot = -im * omega_[k];
    for (int c = 0; c < 3; ++c) {
      out.D[c][k] += rot * s.D[c][k];
      out.B[c][k] += rot * s.B[c][k];
    }
    out.D[2][k] += s_r_[k] * s.D[0][k] + s_theta_[k] * s.D[1][k];
    out.B[2][k] += s_r_[k] * s.B[0][k] + s_theta_[k] * s.B[1][k];
  }

  const std::size_t nr = n_r(), nt = n_theta();
  if (g_.dissipation > 0.0) {
    // on w u, w = sqrt(Delta/(r^2+a^2)), which removes the horizon blueshift
    const double c = g_.dissipation / (16.0 * rg_.h);
    std::vector<cplx> wu(size());
    auto apply = [&](const std::vector<cplx>& u, std::vector<cplx>& du) {
      for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t j = 0; j < nt; ++j) wu[i * nt + j] = ko_w_[i] * u[i * nt + j];
      for (std::size_t i = 2; i + 2 < nr; ++i)
        for (std::size_t j = 0; j < nt; ++j) {
          const std::size_t k = i * nt + j;
          du[k] += ko(wu.data() + k, nt, c) / ko_w_[i];
        }
    };
    for (int c3 = 0; c3 < 3; ++c3) {
      apply(s.D[c3], out.D[c3]);
      apply(s.B[c3], out.B[c3]);
    }
  }
  if (g_.dissipation_theta > 0.0) {
    const double c = g_.dissipation_theta / (16.0 * std::numbers::pi / double(nt));
    const double par = (g_.m % 2 == 0) ? 1.0 : -1.0;
    const auto n = std::ptrdiff_t(nt);
    for (int c3 = 0; c3 < 3; ++c3) {
      const double p = c3 == 0 ? par : -par;
      for (std::size_t i = 0; i < nr; ++i)
        for (std::ptrdiff_t j = 0; j < n; ++j) {
          const std::size_t k = i * nt + std::size_t(j);
          out.D[c3][k] += ko_theta(s.D[c3].data() + i * nt, j, n, p, c);
          out.B[c3][k] += ko_theta(s.B[c3].data() + i * nt, j, n, p, c);
        }
    }
  }

  // characteristic conditions: no incoming radiation at either end
  for (std::size_t j = 0; j < nt; ++j) {
    const std::size_t ko_ = j, k1 = (nr - 1) * nt + j;
    {
      const cplx u1 = 0.5 * (out.D[1][ko_] - out.B[2][ko_]);
      const cplx u2 = 0.5 * (out.D[2][ko_] + out.B[1][ko_]);
      out.D[1][ko_] = u1;
      out.B[2][ko_] = -u1;
      out.D[2][ko_] = u2;
      out.B[1][ko_] = u2;
    }
    {
      const cplx u1 = 0.5 * (out.D[1][k1] + out.B[2][k1]);
      const cplx u2 = 0.5 * (out.D[2][k1] - out.B[1][k1]);
      out.D[1][k1] = u1;
      out.B[2][k1] = u1;
      out.D[2][k1] = u2;
      out.B[1][k1] = -u2;
    }
  }
}

void MaxwellSolver::step(MaxwellState& s, double dt) const {
  auto& k1 = work_[0];
  auto& k2 = work_[1];
  auto& k3 = work_[2];
  auto& k4 = work_[3];
  auto& tmp = work_[4];
  auto combine = [](MaxwellState& dst, const MaxwellState& base, double c, const MaxwellState& k) {
    for (int q = 0; q < 3; ++q) {
      axpy(dst.D[q], base.D[q], c, k.D[q]);
      axpy(dst.B[q], base.B[q], c, k.B[q]);
    }
  };
  rhs(s, k1);
  tmp.t = s.t + 0.5 * dt;
  combine(tmp, s, 0.5 * dt, k1);
  rhs(tmp, k2);
  combine(tmp, s, 0.5 * dt, k2);
  rhs(tmp, k3);
  tmp.t = s.t + dt;
  combine(tmp, s, dt, k3);
  rhs(tmp, k4);
  const double c = dt / 6.0;
  for (int q = 0; q < 3; ++q)
    for (std::size_t k = 0; k < size(); ++k) {
      s.D[q][k] += c * (k1.D[q][k] + 2.0 * k2.D[q][k] + 2.0 * k3.D[q][k] + k4.D[q][k]);
      s.B[q][k] += c * (k1.B[q][k] + 2.0 * k2.B[q][k] + 2.0 * k3.B[q][k] + k4.B[q][k]);
    }
  s.t += dt;
}

Constraints MaxwellSolver::constraints(const MaxwellState& s) const {
  const std::size_t nr = n_r(), nt = n_theta();
  const double h = rg_.h, dth = std::numbers::pi / double(nt);
  const double par = (g_.m % 2 == 0) ? 1.0 : -1.0;
  const cplx im = kI * double(g_.m);
  auto div_norm = [&](const std::array<std::vector<cplx>, 3>& F) {
    std::vector<cplx> fr(size()), ft(size());
    for (std::size_t k = 0; k < size(); ++k) {
      fr[k] = sqrt_pi_sin_[k] / std::sin(theta_[k % nt]) * F[0][k];
      ft[k] = sqrt_pi_sin_[k] * F[1][k];
    }
    double num = 0.0, den = 0.0;
    // the two nodes at each end carry the one-sided closures
    for (std::size_t i = 2; i + 2 < nr; ++i) {
      const double w = rg_.weight[i] * rg_.pt[i].Delta / (rg_.pt[i].r * rg_.pt[i].r + kp_.a * kp_.a);
      for (std::size_t j = 0; j < nt; ++j) {
        const std::size_t k = i * nt + j;
        const double s = std::sin(theta_[j]);
        const double root = std::sqrt(sigma_[k]) * sqrt_pi_sin_[k];  // sqrt(Sigma Pi) sin
        const cplx div = c_over_sqd_[k] * s / root * d_rstar(fr.data() + j, i, nr, nt, h) +
                         d_theta_ghost(ft.data() + i * nt, std::ptrdiff_t(j), std::ptrdiff_t(nt), par, dth) / root +
                         im * sigma_[k] * F[2][k] / root;
        num += w * theta_w_[j] * std::norm(div);
        den += w * theta_w_[j] * (std::norm(F[0][k]) + std::norm(F[1][k]) + std::norm(F[2][k]));
      }
    }
    return den > 0.0 ? std::sqrt(num / den) * kp_.M : 0.0;
  };
  return {div_norm(s.D), div_norm(s.B)};
}

fields::FramePoint MaxwellSolver::pnv(const MaxwellState& s, std::size_t k) const {
  fields::FramePoint f;
  for (int c = 0; c < 3; ++c) {
    f.E[c] = s.D[c][k];
    f.B[c] = s.B[c][k];
  }
  return boost_phi(f, v_[k]);
}

fields::FramePoint boost_phi(const fields::FramePoint& f, double v) {
  const double g = 1.0 / std::sqrt((1.0 - v) * (1.0 + v));
  fields::FramePoint o;
  o.E[0] = g * (f.E[0] - v * f.B[1]);
  o.E[1] = g * (f.E[1] + v * f.B[0]);
  o.E[2] = f.E[2];
  o.B[0] = g * (f.B[0] + v * f.E[1]);
  o.B[1] = g * (f.B[1] - v * f.E[0]);
  o.B[2] = f.B[2];
  return o;
}

double pnv_boost_velocity(const KerrParams& kp, const RadialPoint& rp, double theta) {
  return kp.a * std::sqrt(rp.Delta) * std::sin(theta) / (rp.r * rp.r + kp.a * kp.a);
}

// --- initial data -------------------------------------------------------------

namespace {
cplx p_of(const KerrParams& kp, const RadialPoint& rp, double theta) { return {rp.r, -kp.a * std::cos(theta)}; }
}  // namespace

InitialData fi_pulse(const KerrParams&, double center, double width, int ell, int m, double amplitude) {
  if (ell < std::abs(m)) throw EvolutionError("pulse needs l >= |m|");
  InitialData d;
  d.m = m;
  d.ups = [=](const RadialPoint&, double rs, double th) {
    const double z = (rs - center) / width;
    return cplx(amplitude * std::exp(-0.5 * z * z) * angular::ybar(ell, m, th));
  };
  d.ups_t = [](const RadialPoint&, double, double) { return cplx(0.0); };
  return d;
}

InitialData curl_pulse(const KerrParams& kp, double center, double width, int ell, double amplitude) {
  if (ell < 1) throw EvolutionError("curl pulse needs l >= 1");
  InitialData d;
  d.m = 0;
  const double L = ell * (ell + 1.0);
  auto dr_hat = [=](const RadialPoint& rp, double rs, double th) {
    const double z = (rs - center) / width;
    const auto gs = geometry_scalars(kp, rp, th);
    return amplitude * std::exp(-0.5 * z * z) * L * angular::ybar(ell, 0, th) / std::sqrt(gs.Pi);
  };
  d.maxwell = [=](const RadialPoint& rp, double rs, double th) {
    const double z = (rs - center) / width;
    const auto gs = geometry_scalars(kp, rp, th);
    const double ra = rp.r * rp.r + kp.a * kp.a;
    const double dpsi = -z / width * std::exp(-0.5 * z * z);
    fields::FramePoint f;
    f.E[0] = dr_hat(rp, rs, th);
    f.E[1] = amplitude * ra * dpsi * angular::dybar(ell, 0, th) / std::sqrt(rp.Delta * gs.Pi);
    return f;
  };
  // the boost also feeds E_theta into B_R
  d.ups = [=, mx = d.maxwell](const RadialPoint& rp, double rs, double th) {
    const auto f = boost_phi(mx(rp, rs, th), pnv_boost_velocity(kp, rp, th));
    return p_of(kp, rp, th) * kSqrt2 * (f.E[0] + kI * f.B[0]);
  };
  d.ups_t = [](const RadialPoint&, double, double) { return cplx(0.0); };
  return d;
}

InitialData coulomb_data(const KerrParams& kp, cplx q) {
  InitialData d;
  d.m = 0;
  d.maxwell = [=](const RadialPoint& rp, double, double th) {
    const cplx p = p_of(kp, rp, th);
    const cplx phi0 = q / (p * p);
    fields::FramePoint f;
    f.E[0] = phi0.real() / kSqrt2;
    f.B[0] = phi0.imag() / kSqrt2;
    return boost_phi(f, -pnv_boost_velocity(kp, rp, th));
  };
  d.ups = [=](const RadialPoint& rp, double, double th) { return q / p_of(kp, rp, th); };
  d.ups_t = [](const RadialPoint&, double, double) { return cplx(0.0); };
  return d;
}

InitialData sum(const InitialData& a, const InitialData& b) {
  if (a.m != b.m) throw EvolutionError("initial data with different m");
  InitialData d;
  d.m = a.m;
  if (a.maxwell && b.maxwell)
    d.maxwell = [a, b](const RadialPoint& rp, double rs, double th) {
      auto f = a.maxwell(rp, rs, th);
      const auto g = b.maxwell(rp, rs, th);
      for (int c = 0; c < 3; ++c) {
        f.E[c] += g.E[c];
        f.B[c] += g.B[c];
      }
      return f;
    };
  if (a.ups && b.ups) d.ups = [a, b](const RadialPoint& rp, double rs, double th) { return a.ups(rp, rs, th) + b.ups(rp, rs, th); };
  if (a.ups_t && b.ups_t)
    d.ups_t = [a, b](const RadialPoint& rp, double rs, double th) { return a.ups_t(rp, rs, th) + b.ups_t(rp, rs, th); };
  return d;
}

MaxwellState maxwell_initial(const MaxwellSolver& ms, const InitialData& d, double t0) {
  if (!d.maxwell) throw EvolutionError("initial data family has no Maxwell field");
  if (d.m != ms.grid().m) throw EvolutionError("initial data m differs from the grid m");
  auto s = ms.zero_state(t0);
  const auto& rg = ms.radial();
  for (std::size_t i = 0; i < ms.n_r(); ++i)
    for (std::size_t j = 0; j < ms.n_theta(); ++j) {
      const auto f = d.maxwell(rg.pt[i], rg.rstar[i], ms.theta()[j]);
      const std::size_t k = ms.index(i, j);
      for (int c = 0; c < 3; ++c) {
        s.D[c][k] = f.E[c];
        s.B[c][k] = f.B[c];
      }
    }
  return s;
}

ScalarState fi_initial(const FISolver& fs, const InitialData& d, double t0) {
  if (!d.ups || !d.ups_t) throw EvolutionError("initial data family has no Fackerell-Ipser data");
  if (d.m != fs.grid().m) throw EvolutionError("initial data m differs from the grid m");
  auto s = fs.zero_state(t0);
  const auto& rg = fs.radial();
  for (std::size_t i = 0; i < fs.n_r(); ++i)
    for (std::size_t j = 0; j < fs.n_theta(); ++j) {
      const double th = fs.basis().theta[j];
      s.ups[fs.index(i, j)] = d.ups(rg.pt[i], rg.rstar[i], th);
      s.pi[fs.index(i, j)] = d.ups_t(rg.pt[i], rg.rstar[i], th);
    }
  return s;
}

std::vector<cplx> upsilon_from_maxwell(const MaxwellSolver& ms, const MaxwellState& s) {
  std::vector<cplx> out(ms.size());
  const auto& kp = ms.params();
  for (std::size_t i = 0; i < ms.n_r(); ++i)
    for (std::size_t j = 0; j < ms.n_theta(); ++j) {
      const std::size_t k = ms.index(i, j);
      const auto f = ms.pnv(s, k);
      out[k] = p_of(kp, ms.radial().pt[i], ms.theta()[j]) * kSqrt2 * (f.E[0] + kI * f.B[0]);
    }
  return out;
}

std::vector<cplx> to_gauss_nodes(const MaxwellSolver& ms, const FISolver& fs, const std::vector<cplx>& u) {
  if (ms.n_r() != fs.n_r() || ms.grid().m != fs.grid().m) throw EvolutionError("grids do not match");
  const auto& b = fs.basis();
  const std::size_t nu = ms.n_theta(), ng = fs.n_theta();
  Eigen::MatrixXd proj(ng, nu);  // coefficient of Ybar_l from uniform samples
  for (std::size_t l = 0; l < ng; ++l)
    for (std::size_t j = 0; j < nu; ++j)
      proj(Eigen::Index(l), Eigen::Index(j)) = ms.theta_weight()[j] * angular::ybar(b.ell(int(l)), b.m, ms.theta()[j]);
  const Eigen::MatrixXd A = b.Y * proj;
  std::vector<cplx> out(fs.size());
  for (std::size_t i = 0; i < fs.n_r(); ++i)
    for (std::size_t k = 0; k < ng; ++k) {
      cplx acc = 0.0;
      for (std::size_t j = 0; j < nu; ++j) acc += A(Eigen::Index(k), Eigen::Index(j)) * u[ms.index(i, j)];
      out[fs.index(i, k)] = acc;
    }
  return out;
}

}  // namespace kerrlab::evolution
