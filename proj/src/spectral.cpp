#include "kerrlab/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>

#include "kerrlab/fields.hpp"
#include "kerrlab/multipliers.hpp"
#include "kerrlab/quadrature.hpp"

namespace kerrlab::spectral {

namespace {

constexpr cplx kI(0.0, 1.0);

struct Galerkin {
  Eigen::VectorXd Q;
  Eigen::MatrixXd C;
};

Galerkin galerkin(double e, int m, double a, int n) {
  const int am = std::abs(m);
  const auto q = gauss_legendre(std::size_t(n + am + 2));
  Eigen::MatrixXd Y(q.nodes.size(), n);
  for (std::size_t k = 0; k < q.nodes.size(); ++k)
    for (int l = 0; l < n; ++l) Y(Eigen::Index(k), l) = angular::ybar(am + l, m, std::acos(q.nodes[k]));
  Eigen::VectorXd w(q.nodes.size());
  for (std::size_t k = 0; k < q.nodes.size(); ++k) w(Eigen::Index(k)) = q.weights[k] * (1.0 - q.nodes[k] * q.nodes[k]);
  Eigen::MatrixXd K = (a * a * e * e) * (Y.transpose() * w.asDiagonal() * Y);
  for (int l = 0; l < n; ++l) {
    const double ell = am + l;
    K(l, l) += ell * (ell + 1.0) - double(m) * m;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  Galerkin g{es.eigenvalues(), es.eigenvectors()};
  // fix signs: largest component positive
  for (int j = 0; j < n; ++j) {
    Eigen::Index imax;
    g.C.col(j).cwiseAbs().maxCoeff(&imax);
    if (g.C(imax, j) < 0.0) g.C.col(j) *= -1.0;
  }
  return g;
}

// FFTW along the slowest index of n_t blocks of `block` entries, in place
void fft_blocks(std::vector<cplx>& data, std::size_t n_t, std::size_t block, int sign) {
  const int n = int(n_t);
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  // the planner is not thread safe; execution is
  static std::mutex planner;
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner);
    plan = fftw_plan_many_dft(1, &n, int(block), p, nullptr, int(block), 1, p, nullptr, int(block), 1, sign,
                              FFTW_ESTIMATE);
  }
  if (!plan) throw SpectralError("FFTW plan failed");
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner);
  fftw_destroy_plan(plan);
}

std::vector<double> bin_frequencies(std::size_t n, double dt) {
  std::vector<double> e(n);
  const double de = 2.0 * std::numbers::pi / (double(n) * dt);
  for (std::size_t k = 0; k < n; ++k) {
    const long kk = k < (n + 1) / 2 ? long(k) : long(k) - long(n);
    e[k] = double(kk) * de;
  }
  return e;
}

void check_frames(const angular::Basis& b, const std::vector<std::vector<cplx>>& frames) {
  if (frames.empty()) throw SpectralError("no time samples");
  const std::size_t sz = frames.front().size();
  if (sz == 0 || sz % std::size_t(b.n) != 0) throw SpectralError("frame size does not match the angular basis");
  for (const auto& f : frames)
    if (f.size() != sz) throw SpectralError("frames of different size");
}

// frames (n, i, theta node) -> (n, i, l) Ybar coefficients
std::vector<cplx> to_coefficients(const angular::Basis& b, const std::vector<std::vector<cplx>>& frames) {
  const std::size_t nt = std::size_t(b.n), nr = frames.front().size() / nt;
  std::vector<cplx> c(frames.size() * nr * nt);
  for (std::size_t n = 0; n < frames.size(); ++n)
    for (std::size_t i = 0; i < nr; ++i) {
      const cplx* u = frames[n].data() + i * nt;
      cplx* o = c.data() + (n * nr + i) * nt;
      for (std::size_t l = 0; l < nt; ++l) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < nt; ++j) acc += b.Yinv(Eigen::Index(l), Eigen::Index(j)) * u[j];
        o[l] = acc;
      }
    }
  return c;
}

Transform finish(Transform tr, std::vector<cplx> c, double tail_threshold) {
  fft_blocks(c, tr.n_t, tr.n_r * tr.n_theta, FFTW_BACKWARD);
  const double norm = tr.dt / std::sqrt(2.0 * std::numbers::pi);
  tr.u.assign(c.size(), 0.0);
  double total = 0.0, tail = 0.0;
  const double e_max = std::numbers::pi / tr.dt;
  for (std::size_t k = 0; k < tr.n_t; ++k) {
    const cplx ph = norm * std::exp(kI * tr.e[k] * tr.t0);
    const auto& C = tr.eigs[k].C;
    for (std::size_t i = 0; i < tr.n_r; ++i) {
      const cplx* in = c.data() + (k * tr.n_r + i) * tr.n_theta;
      for (std::size_t j = 0; j < tr.n_theta; ++j) {
        cplx acc = 0.0;
        for (std::size_t l = 0; l < tr.n_theta; ++l) acc += C(Eigen::Index(l), Eigen::Index(j)) * in[l];
        acc *= ph;
        tr.u[tr.index(k, i, j)] = acc;
        total += std::norm(acc);
        if (std::abs(tr.e[k]) > 0.9 * e_max) tail += std::norm(acc);
      }
    }
  }
  tr.tail_fraction = total > 0.0 ? tail / total : 0.0;
  tr.aliasing = tr.tail_fraction > tail_threshold;
  return tr;
}

inline cplx d1(const cplx* u, std::size_t s) {
  const auto ps = std::ptrdiff_t(s);
  return (u[-2 * ps] - 8.0 * u[-ps] + 8.0 * u[ps] - u[2 * ps]) / 12.0;
}

inline cplx d2(const cplx* u, std::size_t s) {
  const auto ps = std::ptrdiff_t(s);
  return (-u[-2 * ps] + 16.0 * u[-ps] - 30.0 * u[0] + 16.0 * u[ps] - u[2 * ps]) / 12.0;
}

}  // namespace

Jet window(const KerrParams& kp, double T, const Jet& t) {
  CutoffSpec spec;
  spec.kind = CutoffKind::time;
  spec.T = T;
  return cutoff(spec, kp, t);
}

double window(const KerrParams& kp, double T, double t) { return window(kp, T, Jet::constant(t)).value(); }

double AngularEigs::S(int j, double theta) const {
  double s = 0.0;
  for (Eigen::Index l = 0; l < C.rows(); ++l) s += C(l, j) * angular::ybar(std::abs(m) + int(l), m, theta);
  return s;
}

AngularEigs spheroidal_eigs(double e, int m, double a, int n, double tol) {
  if (n < 1) throw SpectralError("need at least one angular mode");
  const auto g = galerkin(e, m, a, n);
  const auto fine = galerkin(e, m, a, 2 * n);
  AngularEigs out;
  out.e = e;
  out.m = m;
  out.a = a;
  out.Q.assign(g.Q.data(), g.Q.data() + n);
  out.C = g.C;
  for (int j = 0; j < std::max(1, n / 2); ++j)
    out.richardson = std::max(out.richardson, std::abs(g.Q(j) - fine.Q(j)) / std::max(1.0, std::abs(fine.Q(j))));
  out.converged = out.richardson <= tol;
  return out;
}

std::function<void(const evolution::ScalarState&)> recorder(const evolution::FISolver& fs, int stride,
                                                            TimeSeries& out) {
  if (stride < 1) throw SpectralError("recorder stride must be >= 1");
  out = TimeSeries{};
  out.m = fs.grid().m;
  out.n_r = fs.n_r();
  out.n_theta = fs.n_theta();
  auto count = std::make_shared<long>(0);
  return [&out, stride, count](const evolution::ScalarState& s) {
    if ((*count)++ % stride != 0) return;
    if (out.ups.empty()) out.t0 = s.t;
    else if (out.ups.size() == 1) out.dt = s.t - out.t0;
    else if (std::abs(s.t - out.t(out.ups.size())) > 1e-9 * std::max(1.0, std::abs(s.t)))
      throw SpectralError("time samples are not uniform");
    out.ups.push_back(s.ups);
    out.ups_t.push_back(s.pi);
  };
}

WindowedFields window_fields(const KerrParams& kp, const evolution::RadialGrid& rg, const angular::Basis& b,
                             const TimeSeries& s, double T) {
  if (s.size() < 2) throw SpectralError("need at least two time samples");
  if (s.n_r != rg.pt.size() || s.n_theta != std::size_t(b.n) || s.m != b.m)
    throw SpectralError("time series does not match the grid");
  const double tol = 1e-9 * std::max(1.0, T);
  if (s.t0 > -kp.M + tol || s.t(s.size() - 1) < T + kp.M - tol)
    throw SpectralError("run does not cover the window [-M, T + M]");
  const double a = kp.a, M = kp.M;
  const cplx im(0.0, double(s.m));
  WindowedFields w;
  for (std::size_t n = 0; n < s.size(); ++n) {
    Jet tj = Jet::variable(s.t(n));
    const Jet chi = window(kp, T, tj);
    const double c0 = chi.value(), c1 = chi.d(1), c2 = chi.d(2);
    std::vector<cplx> u(s.ups[n].size()), jc(u.size()), ji(u.size());
    for (std::size_t i = 0; i < s.n_r; ++i) {
      const auto& rp = rg.pt[i];
      const double r = rp.r;
      for (std::size_t j = 0; j < s.n_theta; ++j) {
        const std::size_t k = i * s.n_theta + j;
        const auto gs = geometry_scalars(kp, rp, b.theta[j]);
        const cplx ups = s.ups[n][k], ups_t = s.ups_t[n][k];
        const cplx sigma_v = -2.0 * M * std::conj(gs.p) / (gs.p * gs.p);
        u[k] = c0 * ups;
        jc[k] = -(gs.Pi / rp.Delta) * (ups * c2 + 2.0 * ups_t * c1) - (4.0 * M * a * r / rp.Delta) * im * ups * c1;
        ji[k] = (sigma_v + 2.0 * M / r) * u[k];
      }
    }
    w.u.push_back(std::move(u));
    w.j_chi.push_back(std::move(jc));
    w.j_im.push_back(std::move(ji));
  }
  return w;
}

Transform transform(const KerrParams& kp, const angular::Basis& b, const std::vector<std::vector<cplx>>& frames,
                    double t0, double dt, double tail_threshold) {
  check_frames(b, frames);
  if (!(dt > 0.0)) throw SpectralError("time step must be positive");
  Transform tr;
  tr.m = b.m;
  tr.a = kp.a;
  tr.n_t = frames.size();
  tr.n_theta = std::size_t(b.n);
  tr.n_r = frames.front().size() / tr.n_theta;
  tr.t0 = t0;
  tr.dt = dt;
  tr.de = 2.0 * std::numbers::pi / (double(tr.n_t) * dt);
  tr.e = bin_frequencies(tr.n_t, dt);
  // -Q depends on e^2 only
  std::map<double, AngularEigs> cache;
  for (double e : tr.e) {
    const double key = kp.a == 0.0 ? 0.0 : std::abs(e);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, spheroidal_eigs(key, b.m, kp.a, b.n)).first;
    AngularEigs ae = it->second;
    ae.e = e;
    tr.eigs.push_back(std::move(ae));
  }
  return finish(std::move(tr), to_coefficients(b, frames), tail_threshold);
}

Transform transform_like(const Transform& like, const angular::Basis& b, const std::vector<std::vector<cplx>>& frames) {
  check_frames(b, frames);
  if (frames.size() != like.n_t || frames.front().size() != like.n_r * like.n_theta || b.m != like.m)
    throw SpectralError("frames do not match the reference transform");
  Transform tr = like;
  tr.u.clear();
  return finish(std::move(tr), to_coefficients(b, frames), std::numeric_limits<double>::infinity());
}

std::vector<std::vector<cplx>> inverse(const Transform& tr, const angular::Basis& b) {
  if (std::size_t(b.n) != tr.n_theta || b.m != tr.m) throw SpectralError("basis does not match the transform");
  std::vector<cplx> c(tr.u.size());
  const double norm = std::sqrt(2.0 * std::numbers::pi) / (tr.dt * double(tr.n_t));
  for (std::size_t k = 0; k < tr.n_t; ++k) {
    const cplx ph = norm * std::exp(-kI * tr.e[k] * tr.t0);
    const auto& C = tr.eigs[k].C;
    for (std::size_t i = 0; i < tr.n_r; ++i)
      for (std::size_t l = 0; l < tr.n_theta; ++l) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < tr.n_theta; ++j) acc += C(Eigen::Index(l), Eigen::Index(j)) * tr.u[tr.index(k, i, j)];
        c[(k * tr.n_r + i) * tr.n_theta + l] = ph * acc;
      }
  }
  fft_blocks(c, tr.n_t, tr.n_r * tr.n_theta, FFTW_FORWARD);
  std::vector<std::vector<cplx>> out(tr.n_t, std::vector<cplx>(tr.n_r * tr.n_theta));
  for (std::size_t n = 0; n < tr.n_t; ++n)
    for (std::size_t i = 0; i < tr.n_r; ++i)
      for (std::size_t j = 0; j < tr.n_theta; ++j) {
        cplx acc = 0.0;
        for (std::size_t l = 0; l < tr.n_theta; ++l)
          acc += b.Y(Eigen::Index(j), Eigen::Index(l)) * c[(n * tr.n_r + i) * tr.n_theta + l];
        out[n][i * tr.n_theta + j] = acc;
      }
  return out;
}

std::vector<double> physical_norm2(const angular::Basis& b, const std::vector<std::vector<cplx>>& frames, double dt) {
  check_frames(b, frames);
  const std::size_t nt = std::size_t(b.n), nr = frames.front().size() / nt;
  const int am = std::abs(b.m);
  const auto q = gauss_legendre(nt + std::size_t(am) + 1);
  // interpolation matrix nodes -> quadrature points
  Eigen::MatrixXd Yq(q.nodes.size(), nt);
  for (std::size_t p = 0; p < q.nodes.size(); ++p)
    for (std::size_t l = 0; l < nt; ++l)
      Yq(Eigen::Index(p), Eigen::Index(l)) = angular::ybar(am + int(l), b.m, std::acos(q.nodes[p]));
  const Eigen::MatrixXcd P = (Yq * b.Yinv).cast<cplx>();
  std::vector<double> out(nr, 0.0);
  for (const auto& f : frames)
    for (std::size_t i = 0; i < nr; ++i) {
      const Eigen::Map<const Eigen::VectorXcd> u(f.data() + i * nt, Eigen::Index(nt));
      const Eigen::VectorXcd v = P * u;
      for (std::size_t p = 0; p < q.nodes.size(); ++p) out[i] += dt * q.weights[p] * std::norm(v(Eigen::Index(p)));
    }
  return out;
}

std::vector<double> spectral_norm2(const Transform& tr) {
  std::vector<double> out(tr.n_r, 0.0);
  for (std::size_t k = 0; k < tr.n_t; ++k)
    for (std::size_t i = 0; i < tr.n_r; ++i)
      for (std::size_t j = 0; j < tr.n_theta; ++j) out[i] += tr.de * std::norm(tr.u[tr.index(k, i, j)]);
  return out;
}

FIResidual spectral_fi_residual(const KerrParams& kp, const evolution::RadialGrid& rg, const Transform& u,
                                const Transform& j_chi, const Transform& j_im, std::size_t i0, std::size_t i1) {
  for (const Transform* t : {&j_chi, &j_im})
    if (t->n_t != u.n_t || t->n_r != u.n_r || t->n_theta != u.n_theta) throw SpectralError("transforms do not match");
  if (u.n_r != rg.pt.size()) throw SpectralError("radial grid does not match the transform");
  if (i0 < 2 || i1 + 2 > u.n_r || i0 >= i1) throw SpectralError("residual range must avoid two nodes at each end");
  const double a = kp.a, M = kp.M, h = rg.h;
  const std::size_t s = u.n_theta;
  FIResidual out;
  out.i0 = i0;
  out.i1 = i1;
  double num = 0.0, den = 0.0;
  for (std::size_t i = i0; i < i1; ++i) {
    const auto& rp = rg.pt[i];
    const double r = rp.r, ra = r * r + a * a;
    double res2 = 0.0, rad2 = 0.0, pot2 = 0.0, src2 = 0.0;
    for (std::size_t k = 0; k < u.n_t; ++k)
      for (std::size_t j = 0; j < s; ++j) {
        const std::size_t idx = u.index(k, i, j);
        const cplx* p = u.u.data() + idx;
        const cplx radial = ra * d2(p, s) / (h * h) + 2.0 * r * rp.Delta / ra * d1(p, s) / h;
        morawetz::SpectralPoint sp;
        sp.e = u.e[k];
        sp.ell_z = -double(u.m);
        sp.Q = u.eigs[k].Q[j];
        const double R = morawetz::curly_R(kp, sp, r);
        const cplx pot = (R / ra - rp.Delta * 2.0 * M / (r * ra)) * u.u[idx];
        const cplx src = rp.Delta / ra * (j_chi.u[idx] + j_im.u[idx]);
        res2 += u.de * std::norm(radial - pot - src);
        rad2 += u.de * std::norm(radial);
        pot2 += u.de * std::norm(pot);
        src2 += u.de * std::norm(src);
      }
    out.residual.push_back(std::sqrt(res2));
    out.scale.push_back(std::sqrt(std::max({rad2, pot2, src2})));
    num += res2;
    den += std::max({rad2, pot2, src2});
  }
  out.relative = den > 0.0 ? std::sqrt(num / den) : 0.0;
  return out;
}

std::function<void(const evolution::MaxwellState&)> maxwell_weight(const evolution::MaxwellSolver& ms, double T,
                                                                   int stride, std::vector<double>& P) {
  if (stride < 1) throw SpectralError("stride must be >= 1");
  P.assign(ms.n_r(), 0.0);
  struct Clock {
    long count = 0;
    double last = std::numeric_limits<double>::quiet_NaN();
  };
  auto clock = std::make_shared<Clock>();
  return [&ms, &P, T, stride, clock](const evolution::MaxwellState& s) {
    if (clock->count++ % stride != 0) return;
    // rectangle rule; the window makes the integrand compactly supported
    const double dt = std::isnan(clock->last) ? 0.0 : s.t - clock->last;
    clock->last = s.t;
    const auto& kp = ms.params();
    const double chi = window(kp, T, s.t);
    if (chi == 0.0 || dt == 0.0) return;
    for (std::size_t i = 0; i < ms.n_r(); ++i) {
      const auto& rp = ms.radial().pt[i];
      const double w = rp.Delta / (rp.r * rp.r + kp.a * kp.a);
      double acc = 0.0;
      for (std::size_t j = 0; j < ms.n_theta(); ++j) {
        const auto sw = fields::spin_weights(ms.pnv(s, ms.index(i, j)));
        acc += ms.theta_weight()[j] * (sw[0] + sw[2]);
      }
      P[i] += dt * chi * chi * w * acc;
    }
  };
}

std::vector<double> LowerBound::margin(double C, double a, double M) const {
  std::vector<double> out(mass.size());
  for (std::size_t i = 0; i < mass.size(); ++i) {
    const double P = maxwell.empty() ? 0.0 : maxwell[i];
    out[i] = angular[i] + C * (a * a * P + std::abs(a) / M * mass[i]) - 2.0 * mass[i];
  }
  return out;
}

double LowerBound::min_relative(double C, double a, double M) const {
  const auto mg = margin(C, a, M);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mg.size(); ++i)
    if (mass[i] > 0.0) worst = std::min(worst, mg[i] / mass[i]);
  return worst;
}

LowerBound spectral_lower_bound_check(const KerrParams& kp, const Transform& tr, const std::vector<double>& maxwell) {
  if (!maxwell.empty() && maxwell.size() != tr.n_r) throw SpectralError("Maxwell weight does not match the grid");
  LowerBound lb;
  lb.angular.assign(tr.n_r, 0.0);
  lb.mass.assign(tr.n_r, 0.0);
  lb.maxwell = maxwell;
  const double lz2 = double(tr.m) * tr.m;
  for (std::size_t k = 0; k < tr.n_t; ++k)
    for (std::size_t i = 0; i < tr.n_r; ++i)
      for (std::size_t j = 0; j < tr.n_theta; ++j) {
        const double w = tr.de * std::norm(tr.u[tr.index(k, i, j)]);
        lb.mass[i] += w;
        lb.angular[i] += (tr.eigs[k].Q[j] + lz2) * w;
      }
  const double a = std::abs(kp.a);
  for (std::size_t i = 0; i < tr.n_r; ++i) {
    const double deficit = 2.0 * lb.mass[i] - lb.angular[i];
    if (deficit <= 0.0) continue;
    const double P = maxwell.empty() ? 0.0 : maxwell[i];
    const double gain = a * a * P + a / kp.M * lb.mass[i];
    lb.best_C = gain > 0.0 ? std::max(lb.best_C, deficit / gain) : std::numeric_limits<double>::infinity();
  }
  return lb;
}

void write_eig_table(std::ostream& os, const Transform& tr) {
  std::vector<std::size_t> order(tr.n_t);
  for (std::size_t k = 0; k < tr.n_t; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return tr.e[x] < tr.e[y]; });
  os << "e,m,j,Q\n";
  for (std::size_t k : order)
    for (std::size_t j = 0; j < tr.n_theta; ++j) os << tr.e[k] << ',' << tr.m << ',' << j << ',' << tr.eigs[k].Q[j] << '\n';
}

void write_margin_table(std::ostream& os, const evolution::RadialGrid& rg, const LowerBound& lb, double C,
                        const KerrParams& kp) {
  const auto mg = lb.margin(C, kp.a, kp.M);
  os << "rstar,r,angular,mass,maxwell,margin\n";
  for (std::size_t i = 0; i < mg.size(); ++i)
    os << rg.rstar[i] << ',' << rg.pt[i].r << ',' << lb.angular[i] << ',' << lb.mass[i] << ','
       << (lb.maxwell.empty() ? 0.0 : lb.maxwell[i]) << ',' << mg[i] << '\n';
}

}  // namespace kerrlab::spectral
