#include "kerrlab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "kerrlab/quadrature.hpp"

namespace kerrlab::fields {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2 = std::sqrt(2.0);
const cplx kI{0.0, 1.0};

std::array<Vec4, 4> frame_vectors(const Tetrad& t) { return {t.t_hat, t.r_hat, t.theta_hat, t.phi_hat}; }

Vec4 lower(const Mat4& g, const Vec4& v) {
  Vec4 out{};
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) out[m] += g[m][n] * v[n];
  return out;
}

cplx contract(const CMat4& F, const CVec4& u, const CVec4& v) {
  cplx s = 0.0;
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) s += u[m] * F[m][n] * v[n];
  return s;
}

CVec4 cv(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

CVec4 conj(const CVec4& v) { return {std::conj(v[0]), std::conj(v[1]), std::conj(v[2]), std::conj(v[3])}; }


// 4th-order centred difference with a step that stays inside (lo, hi)
template <class F>
cplx diff4(F&& f, double x, double h) {
  return (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
}

}  // namespace

SpinComponents spin_components(const KerrParams& kp, double r, double theta, const FramePoint& f) {
  const auto& E = f.E;
  const auto& B = f.B;
  SpinComponents s;
  s.phi_0 = kSqrt2 * (E[0] + kI * B[0]);
  s.phi_1 = -(E[1] - B[2]) - kI * (E[2] + B[1]);
  s.phi_m1 = -(E[1] + B[2]) + kI * (E[2] - B[1]);
  s.upsilon = cplx(r, -kp.a * std::cos(theta)) * s.phi_0;
  return s;
}

FramePoint conj(const FramePoint& f) {
  FramePoint o;
  for (int k = 0; k < 3; ++k) {
    o.E[k] = std::conj(f.E[k]);
    o.B[k] = std::conj(f.B[k]);
  }
  return o;
}

std::array<double, 3> spin_weights(const FramePoint& f) {
  const KerrParams flat;
  const auto a = spin_components(flat, 1.0, 1.0, f), b = spin_components(flat, 1.0, 1.0, conj(f));
  return {0.5 * (std::norm(a.phi_m1) + std::norm(b.phi_m1)), 0.5 * (std::norm(a.phi_0) + std::norm(b.phi_0)),
          0.5 * (std::norm(a.phi_1) + std::norm(b.phi_1))};
}

double spin_density(const FramePoint& f) {
  const auto w = spin_weights(f);
  return w[0] + w[1] + w[2];
}

CMat4 two_form(const KerrParams& kp, double r, double theta, const FramePoint& f) {
  const auto t = tetrad(kp, r, theta);
  const auto g = metric(kp, r, theta).g;
  const auto e = frame_vectors(t);
  // frame components F_ab
  std::array<std::array<cplx, 4>, 4> Fab{};
  for (int i = 0; i < 3; ++i) {
    Fab[i + 1][0] = f.E[i];
    Fab[0][i + 1] = -f.E[i];
  }
  Fab[2][3] = f.B[0];
  Fab[3][2] = -f.B[0];
  Fab[3][1] = f.B[1];
  Fab[1][3] = -f.B[1];
  Fab[1][2] = f.B[2];
  Fab[2][1] = -f.B[2];
  // coframe theta^a = eta^{aa} g(e_a, .)
  std::array<Vec4, 4> co;
  for (int a = 0; a < 4; ++a) {
    co[a] = lower(g, e[a]);
    if (a == 0)
      for (auto& c : co[a]) c = -c;
  }
  CMat4 F{};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      if (Fab[a][b] == 0.0) continue;
      for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) F[m][n] += Fab[a][b] * co[a][m] * co[b][n];
    }
  return F;
}

FramePoint frame_from_two_form(const KerrParams& kp, double r, double theta, const CMat4& F) {
  const auto t = tetrad(kp, r, theta);
  const auto e = frame_vectors(t);
  FramePoint f;
  for (int i = 0; i < 3; ++i) f.E[i] = contract(F, cv(e[i + 1]), cv(e[0]));
  f.B[0] = contract(F, cv(e[2]), cv(e[3]));
  f.B[1] = contract(F, cv(e[3]), cv(e[1]));
  f.B[2] = contract(F, cv(e[1]), cv(e[2]));
  return f;
}

SpinComponents spin_from_two_form(const KerrParams& kp, double r, double theta, const CMat4& F) {
  const auto t = tetrad(kp, r, theta);
  SpinComponents s;
  s.phi_0 = kSqrt2 * (contract(F, cv(t.l), cv(t.n)) + kI * contract(F, cv(t.theta_hat), cv(t.phi_hat)));
  s.phi_1 = 2.0 * contract(F, cv(t.l), t.m);
  s.phi_m1 = 2.0 * contract(F, cv(t.n), conj(t.m));
  s.upsilon = cplx(r, -kp.a * std::cos(theta)) * s.phi_0;
  return s;
}

AnalyticField coulomb(const KerrParams& kp, cplx q) {
  return {kp, 0, [kp, q](double r, double theta) {
            const cplx p(r, -kp.a * std::cos(theta));
            const cplx phi0 = q / (p * p);
            FramePoint f;
            f.E[0] = phi0.real() / kSqrt2;
            f.B[0] = phi0.imag() / kSqrt2;
            return f;
          }};
}

SphereData sample_sphere(const AnalyticField& F, double r, int n) {
  const auto gl = gauss_legendre(static_cast<std::size_t>(n));
  SphereData sph;
  sph.m = F.m;
  sph.r = r;
  auto phi0 = [&](double th) { return spin_components(F.kp, r, th, F.f(r, th)).phi_0; };
  for (int j = n - 1; j >= 0; --j) {  // ascending theta
    const double th = std::acos(gl.nodes[j]);
    sph.theta.push_back(th);
    sph.weight.push_back(gl.weights[j]);
    sph.s.push_back(spin_components(F.kp, r, th, F.f(r, th)));
    const double h = std::min({1e-3, 0.25 * th, 0.25 * (kPi - th)});
    sph.dtheta_phi0.push_back(diff4(phi0, th, h));
  }
  return sph;
}

// flux of F and *F through the sphere: F_theta_phi carries (r^2+a^2) B_R - a sin(theta) sqrt(Delta) E_theta
ChargePair charges(const KerrParams& kp, const SphereData& sph) {
  if (sph.m != 0) return {0.0, 0.0};
  const double a = kp.a, r = sph.r;
  const double D = r * r - 2.0 * kp.M * r + a * a;
  cplx sum = 0.0;
  for (std::size_t j = 0; j < sph.theta.size(); ++j) {
    const auto& s = sph.s[j];
    sum += sph.weight[j] *
           ((r * r + a * a) * s.phi_0 + kI * a * std::sin(sph.theta[j]) * std::sqrt(D) * (s.phi_1 + s.phi_m1) / kSqrt2);
  }
  // d(omega) integral: 2 pi from phi; prefactor 1/(4 pi)
  const cplx q = sum * (2.0 * kPi) / (4.0 * kPi);
  return {q.real(), q.imag()};
}

ChargePair charges(const AnalyticField& F, double r, int n) { return charges(F.kp, sample_sphere(F, r, n)); }

double angular_lowerbound_gap(const KerrParams& kp, const SphereData& sph) {
  if (sph.dtheta_phi0.size() != sph.theta.size()) throw std::invalid_argument("angular gap needs d(theta) phi_0");
  const double r = sph.r, a = kp.a;
  const double s = r * r + a * a;
  const double VL = (r * r - 2.0 * kp.M * r + a * a) / (s * s);
  const double m2 = static_cast<double>(sph.m) * sph.m;
  double sum = 0.0;
  for (std::size_t j = 0; j < sph.theta.size(); ++j) {
    const double sn = std::sin(sph.theta[j]);
    const auto& c = sph.s[j];
    const double grad = std::norm(sph.dtheta_phi0[j]) + m2 * std::norm(c.phi_0) / (sn * sn);
    sum += sph.weight[j] * (grad - a * a * VL * std::norm(c.phi_1 + c.phi_m1) - 2.0 * std::norm(c.phi_0));
  }
  return 2.0 * kPi * sum;
}

SphereData MaxwellSnapshot::sphere(std::size_t i) const {
  SphereData sph;
  sph.m = m;
  sph.r = r[i];
  sph.theta = theta;
  sph.weight = theta_weight;
  for (std::size_t j = 0; j < theta.size(); ++j) sph.s.push_back(spin_components(kp, r[i], theta[j], v[index(i, j)]));
  if (!fi.empty()) {
    // d(theta) phi_0 from d(theta) Upsilon: phi_0 = Upsilon / p
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const cplx p(r[i], -kp.a * std::cos(theta[j]));
      const cplx dp(0.0, kp.a * std::sin(theta[j]));
      const auto& n = fi[index(i, j)];
      sph.dtheta_phi0.push_back(n.dtheta / p - n.ups * dp / (p * p));
    }
  }
  return sph;
}

RadialRule radial_rule(double r_min, double r_max, int panels, int per_panel) {
  if (!(r_max > r_min && r_min > 0.0)) throw std::invalid_argument("radial_rule needs 0 < r_min < r_max");
  RadialRule rr;
  const double ratio = std::pow(r_max / r_min, 1.0 / panels);
  double lo = r_min;
  for (int k = 0; k < panels; ++k) {
    const double hi = k + 1 == panels ? r_max : lo * ratio;
    const auto q = gauss_legendre(static_cast<std::size_t>(per_panel), lo, hi);
    rr.nodes.insert(rr.nodes.end(), q.nodes.begin(), q.nodes.end());
    rr.weights.insert(rr.weights.end(), q.weights.begin(), q.weights.end());
    lo = hi;
  }
  return rr;
}

MaxwellSnapshot sample(const AnalyticField& F, const RadialRule& rr, int n_theta, bool stationary) {
  if (!stationary) throw std::invalid_argument("closures carry no time derivative");
  const auto gl = gauss_legendre(static_cast<std::size_t>(n_theta));
  MaxwellSnapshot s;
  s.kp = F.kp;
  s.m = F.m;
  s.r = rr.nodes;
  s.r_weight = rr.weights;
  for (int j = n_theta - 1; j >= 0; --j) {
    s.theta.push_back(std::acos(gl.nodes[j]));
    s.theta_weight.push_back(gl.weights[j]);
  }
  auto ups = [&](double r, double th) { return spin_components(F.kp, r, th, F.f(r, th)).upsilon; };
  for (double r : s.r) {
    const double hr = std::min(1e-3 * r, 0.25 * (r - F.kp.r_plus));
    for (double th : s.theta) {
      s.v.push_back(F.f(r, th));
      const double ht = std::min({1e-3, 0.25 * th, 0.25 * (kPi - th)});
      s.fi.push_back({ups(r, th), 0.0, diff4([&](double x) { return ups(x, th); }, r, hr),
                      diff4([&](double x) { return ups(r, x); }, th, ht)});
    }
  }
  return s;
}

double energy_maxwell(const MaxwellSnapshot& s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < s.r.size(); ++i)
    for (std::size_t j = 0; j < s.theta.size(); ++j)
      sum += s.r_weight[i] * s.theta_weight[j] * spin_density(s.v[s.index(i, j)]) *
             s.r[i] * s.r[i];
  return 2.0 * kPi * sum;
}

double energy_maxwell_eb(const MaxwellSnapshot& s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < s.r.size(); ++i)
    for (std::size_t j = 0; j < s.theta.size(); ++j) {
      const auto& f = s.v[s.index(i, j)];
      double e = 0.0;
      for (int k = 0; k < 3; ++k) e += std::norm(f.E[k]) + std::norm(f.B[k]);
      sum += s.r_weight[i] * s.theta_weight[j] * e * s.r[i] * s.r[i];
    }
  return 2.0 * kPi * sum;
}

namespace {

cplx fi_density(const MaxwellSnapshot& s, std::size_t i, std::size_t j, const FINode& h, const FINode& f) {
  const double r = s.r[i], a = s.kp.a;
  const double w = r * r + a * a, D = r * r - 2.0 * s.kp.M * r + a * a;
  const double sn = std::sin(s.theta[j]);
  const double m2 = static_cast<double>(s.m) * s.m;
  const cplx ang = std::conj(h.dtheta) * f.dtheta + m2 * std::conj(h.ups) * f.ups / (sn * sn);
  return (w / D * std::conj(h.dt) * f.dt + D / w * std::conj(h.dr) * f.dr + ang / (r * r) +
          std::conj(h.ups) * f.ups / (r * r)) *
         r * r;
}

void require_same_grid(const MaxwellSnapshot& a, const MaxwellSnapshot& b) {
  if (a.r != b.r || a.theta != b.theta || a.m != b.m || a.kp.M != b.kp.M || a.kp.a != b.kp.a)
    throw std::invalid_argument("snapshots live on different grids");
}

}  // namespace

double energy_fi(const MaxwellSnapshot& s) {
  if (s.fi.empty()) throw std::invalid_argument("snapshot has no Fackerell-Ipser data");
  double sum = 0.0;
  for (std::size_t i = 0; i < s.r.size(); ++i)
    for (std::size_t j = 0; j < s.theta.size(); ++j) {
      const auto& n = s.fi[s.index(i, j)];
      sum += s.r_weight[i] * s.theta_weight[j] * fi_density(s, i, j, n, n).real();
    }
  return 2.0 * kPi * sum;
}

cplx inner_product(const MaxwellSnapshot& H, const MaxwellSnapshot& F) {
  require_same_grid(H, F);
  if (H.fi.empty() || F.fi.empty()) throw std::invalid_argument("inner product needs Fackerell-Ipser data");
  cplx sum = 0.0;
  for (std::size_t i = 0; i < F.r.size(); ++i)
    for (std::size_t j = 0; j < F.theta.size(); ++j) {
      const std::size_t k = F.index(i, j);
      const auto ps = spin_components(H.kp, H.r[i], H.theta[j], H.v[k]);
      const auto fs = spin_components(F.kp, F.r[i], F.theta[j], F.v[k]);
      const auto pc = spin_components(H.kp, H.r[i], H.theta[j], conj(H.v[k]));
      const auto fc = spin_components(F.kp, F.r[i], F.theta[j], conj(F.v[k]));
      // sesquilinear form whose diagonal is spin_density
      const cplx spin =
          0.5 * (std::conj(ps.phi_m1) * fs.phi_m1 + std::conj(ps.phi_0) * fs.phi_0 + std::conj(ps.phi_1) * fs.phi_1 +
                 pc.phi_m1 * std::conj(fc.phi_m1) + pc.phi_0 * std::conj(fc.phi_0) + pc.phi_1 * std::conj(fc.phi_1));
      sum += F.r_weight[i] * F.theta_weight[j] * (spin * F.r[i] * F.r[i] + fi_density(F, i, j, H.fi[k], F.fi[k]));
    }
  return 2.0 * kPi * sum;
}

Decomposition charge_decompose(const MaxwellSnapshot& s) {
  if (s.r.empty()) throw std::invalid_argument("empty snapshot");
  const std::size_t ref = s.r.size() / 2;
  const auto q = charges(s.kp, s.sphere(ref));
  double spread = 0.0;
  for (std::size_t i = 0; i < s.r.size(); ++i) spread = std::max(spread, std::abs(charges(s.kp, s.sphere(i)).q() - q.q()));

  Decomposition d{q, spread, s, s};
  const auto C = coulomb(s.kp, q.q());
  const double a = s.kp.a;
  for (std::size_t i = 0; i < s.r.size(); ++i)
    for (std::size_t j = 0; j < s.theta.size(); ++j) {
      const std::size_t k = s.index(i, j);
      const FramePoint c = s.m == 0 ? C.f(s.r[i], s.theta[j]) : FramePoint{};
      d.stationary.v[k] = c;
      for (int n = 0; n < 3; ++n) {
        d.charge_free.v[k].E[n] = s.v[k].E[n] - c.E[n];
        d.charge_free.v[k].B[n] = s.v[k].B[n] - c.B[n];
      }
      if (!s.fi.empty()) {
        const cplx p(s.r[i], -a * std::cos(s.theta[j]));
        const cplx qq = s.m == 0 ? q.q() : 0.0;
        const FINode st{qq / p, 0.0, -qq / (p * p), -qq * cplx(0.0, a * std::sin(s.theta[j])) / (p * p)};
        d.stationary.fi[k] = st;
        const auto& n = s.fi[k];
        d.charge_free.fi[k] = {n.ups - st.ups, n.dt - st.dt, n.dr - st.dr, n.dtheta - st.dtheta};
      }
    }
  return d;
}

// --- serialization ----------------------------------------------------------

void write_snapshot(const MaxwellSnapshot& s, const std::string& prefix) {
  nlohmann::json meta;
  meta["format"] = "kerrlab-snapshot";
  meta["version"] = 1;
  meta["M"] = s.kp.M;
  meta["a"] = s.kp.a;
  meta["m"] = s.m;
  meta["t"] = s.t;
  meta["r"] = s.r;
  meta["r_weight"] = s.r_weight;
  meta["theta"] = s.theta;
  meta["theta_weight"] = s.theta_weight;
  meta["has_fi"] = !s.fi.empty();
  meta["layout"] = "column-major (r fastest), complex as (re, im) double pairs; columns E1 E2 E3 B1 B2 B3 [ups dt dr dtheta]";
  std::ofstream js(prefix + ".json");
  js << meta.dump(2) << "\n";

  std::ofstream bin(prefix + ".bin", std::ios::binary);
  const std::size_t nr = s.r.size(), nt = s.theta.size();
  auto put = [&](auto&& get) {
    for (std::size_t j = 0; j < nt; ++j)
      for (std::size_t i = 0; i < nr; ++i) {
        const cplx z = get(s.index(i, j));
        const double d[2] = {z.real(), z.imag()};
        bin.write(reinterpret_cast<const char*>(d), sizeof d);
      }
  };
  for (int c = 0; c < 3; ++c) put([&](std::size_t k) { return s.v[k].E[c]; });
  for (int c = 0; c < 3; ++c) put([&](std::size_t k) { return s.v[k].B[c]; });
  if (!s.fi.empty()) {
    put([&](std::size_t k) { return s.fi[k].ups; });
    put([&](std::size_t k) { return s.fi[k].dt; });
    put([&](std::size_t k) { return s.fi[k].dr; });
    put([&](std::size_t k) { return s.fi[k].dtheta; });
  }
  if (!bin) throw std::runtime_error("failed to write " + prefix + ".bin");
}

MaxwellSnapshot read_snapshot(const std::string& prefix) {
  std::ifstream js(prefix + ".json");
  if (!js) throw std::runtime_error("cannot open " + prefix + ".json");
  const auto meta = nlohmann::json::parse(js);
  MaxwellSnapshot s;
  s.kp = KerrParams(meta.at("M").get<double>(), meta.at("a").get<double>());
  s.m = meta.at("m").get<int>();
  s.t = meta.at("t").get<double>();
  s.r = meta.at("r").get<std::vector<double>>();
  s.r_weight = meta.at("r_weight").get<std::vector<double>>();
  s.theta = meta.at("theta").get<std::vector<double>>();
  s.theta_weight = meta.at("theta_weight").get<std::vector<double>>();
  const bool has_fi = meta.at("has_fi").get<bool>();
  const std::size_t nr = s.r.size(), nt = s.theta.size();
  s.v.resize(nr * nt);
  if (has_fi) s.fi.resize(nr * nt);

  std::ifstream bin(prefix + ".bin", std::ios::binary);
  auto get = [&](auto&& set) {
    for (std::size_t j = 0; j < nt; ++j)
      for (std::size_t i = 0; i < nr; ++i) {
        double d[2];
        bin.read(reinterpret_cast<char*>(d), sizeof d);
        set(s.index(i, j), cplx(d[0], d[1]));
      }
  };
  for (int c = 0; c < 3; ++c) get([&](std::size_t k, cplx z) { s.v[k].E[c] = z; });
  for (int c = 0; c < 3; ++c) get([&](std::size_t k, cplx z) { s.v[k].B[c] = z; });
  if (has_fi) {
    get([&](std::size_t k, cplx z) { s.fi[k].ups = z; });
    get([&](std::size_t k, cplx z) { s.fi[k].dt = z; });
    get([&](std::size_t k, cplx z) { s.fi[k].dr = z; });
    get([&](std::size_t k, cplx z) { s.fi[k].dtheta = z; });
  }
  if (!bin) throw std::runtime_error("truncated " + prefix + ".bin");
  return s;
}

}  // namespace kerrlab::fields
