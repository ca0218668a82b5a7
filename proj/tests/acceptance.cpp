// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kerrlab/estimates.hpp"
#include "kerrlab/evolution.hpp"
#include "kerrlab/fields.hpp"
#include "kerrlab/hardy.hpp"
#include "kerrlab/multipliers.hpp"
#include "kerrlab/spectral.hpp"

using namespace kerrlab;
namespace ev = kerrlab::evolution;
namespace mw = kerrlab::morawetz;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double l2(const std::vector<cplx>& u, const std::vector<double>& w, std::size_t nt) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += w[k / nt] * std::norm(u[k]);
  return std::sqrt(s);
}

double contract(const Mat4& T, const Vec4& X, const Vec4& Y) {
  double s = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) s += X[a] * Y[b] * T[a][b];
  return s;
}

// closed forms at M = 1
const double kS3 = std::sqrt(3.0), kS22 = std::sqrt(22.0);
const double kAlpha = 0.5 + kS3 / 3.0;
const double kBeta = 0.5 - kS22 / 2.0;
const double kA = -kS22 / 2.0 + 0.5 - kS3 / 2.0;
const double kB = -kS22 / 2.0 + 0.5 + 7.0 * kS3 / 6.0;
const double kC = 1.0 + 2.0 * kS3 / 3.0;

double worst_param_error(const hardy::HypergeometricParams& p) {
  return std::max({std::abs(p.alpha - kAlpha), std::abs(p.beta - kBeta), std::abs(p.a - kA), std::abs(p.b - kB),
                   std::abs(p.c - kC)});
}

void c1_hypergeometric(Outcome& o) {
  const auto t0 = Clock::now();
  const hardy::WCoefficients w{11.0, -16.0, 2.0};
  const auto p = hardy::solve_parameters(w, 2.0);
  const double dt = seconds_since(t0);
  const double err = worst_param_error(p);
  o.detail << "(X,Y,Z,d) = (11,-16,2,2): alpha " << p.alpha << " beta " << p.beta << " a " << p.a << " b " << p.b
           << " c " << p.c << ", max error " << err << ", " << dt << " s";
  o.require(err < 1e-10, "closed forms at Y = -16M");
  o.require(hardy::positivity_conditions_hold(p), "a < 0 < b < c");
  o.require(dt < 1.0, "runtime");
  // informational: the same closed forms from the weighted Schwarzschild problem
  const hardy::HardyProblem prob{KerrParams(1.0, 0.0)};
  const auto wp = hardy::to_W(prob);
  const auto pp = hardy::solve_parameters(wp, prob.d());
  o.detail << "; weighted problem gives (X,Y,Z) = (" << wp.X << "," << wp.Y << "," << wp.Z << "), max error "
           << worst_param_error(pp) << ", b " << pp.b;
}

void c2_hardy(Outcome& o) {
  const auto t0 = Clock::now();
  const hardy::HardyProblem prob{KerrParams(1.0, 0.0)};
  const auto w = hardy::to_W(prob);
  const double d = prob.d();
  const auto ray = hardy::rayleigh_min([&](double x) { return w(x, d); }, 1e-4, 1e4, 4096);
  const auto p = hardy::solve_parameters(w, d);
  const auto scan = hardy::positive_solution_scan(p, w, d, 1e-4, 1e4, 4096);
  const hardy::HardyProblem weak{KerrParams(1.0, 0.0), {9.9, -66.0, 70.2}};
  const auto ww = hardy::to_W(weak);
  const auto bad = hardy::rayleigh_min([&](double x) { return ww(x, d); }, 1e-4, 1e4, 4096);
  const double dt = seconds_since(t0);
  o.detail << "Rayleigh min " << ray.min_eigenvalue << ", min v " << scan.min_v << ", perturbed min "
           << bad.min_eigenvalue << ", " << dt << " s";
  o.require(ray.min_eigenvalue >= -1e-6, "Rayleigh minimum");
  o.require(scan.positive && scan.min_v > 0.0, "min v > 0");
  o.require(bad.min_eigenvalue < 0.0, "perturbation stays nonnegative");
  o.require(dt < 10.0, "runtime");
}

void c3_root(Outcome& o) {
  const auto t0 = Clock::now();
  const KerrParams schw(1.0, 0.0);
  double err0 = 0.0;
  for (double eps : {0.01, 0.1, 0.2})
    for (const auto& k : mw::unit_directions(eps)) err0 = std::max(err0, std::abs(mw::find_root(schw, k) - 3.0));
  std::vector<double> as, es;
  for (int i = 0; i <= 10; ++i) as.push_back(0.01 * i);
  for (double e : {0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.15, 0.2}) es.push_back(e);
  const auto scan = mw::root_localization_scan(1.0, as, es);
  const double dt = seconds_since(t0);
  o.detail << "a = 0 root error " << err0 << ", fitted C " << scan.C << " (worst a " << scan.worst_a << ", eps "
           << scan.worst_eps << ") over " << scan.samples << " roots, " << scan.failures
           << " directions without a unique root (smallest s " << scan.min_failing_s << "), " << dt << " s";
  o.require(err0 < 1e-12, "r_root = 3M at a = 0");
  o.require(std::isfinite(scan.C), "finite C");
  o.require(dt < 30.0, "runtime");
}

void c4_identity(Outcome& o) {
  const auto t0 = Clock::now();
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> ua(0.0, 0.1), ue(0.01, 0.2), uk(-2.0, 2.0), ux(-2.0, 1.7);
  const mw::Variant vs[] = {mw::Variant::basic, mw::Variant::refined, mw::Variant::refined_plain};
  double worst = 0.0;
  int used = 0, skipped = 0;
  while (used < 10000) {
    const KerrParams kp(1.0, ua(rng));
    const mw::SpectralPoint k{uk(rng), uk(rng), std::abs(uk(rng)), ue(rng)};
    const double r = kp.r_plus + std::pow(10.0, ux(rng));
    try {
      const mw::Multiplier m({vs[used % 3], 0.1}, kp, k);
      const auto g = m.general(r), s = m.simplified(r);
      worst = std::max({worst, std::abs(g.A - s.A) / g.scale, std::abs(g.U - s.U) / g.scale,
                        std::abs(g.V - s.V) / g.scale});
      ++used;
    } catch (const mw::RootError&) {
      ++skipped;
    }
  }
  // a = eps = 0: U >= 0 for every k and r
  const KerrParams schw(1.0, 0.0);
  double min_u = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 2000; ++i) {
    const mw::SpectralPoint k{uk(rng), uk(rng), std::abs(uk(rng)), 0.0};
    if (k.ell_z * k.ell_z + k.Q == 0.0) continue;
    const mw::Multiplier m({mw::Variant::basic}, schw, k);
    const double r = schw.r_plus + std::pow(10.0, ux(rng));
    const auto c = m.simplified(r);
    min_u = std::min(min_u, c.U / c.scale);
  }
  const double dt = seconds_since(t0);
  o.detail << "max relative difference " << worst << " over " << used << " samples (" << skipped
           << " without a unique root), min U/scale at a = eps = 0 " << min_u << ", " << dt << " s";
  o.require(worst < 1e-10, "general vs simplified");
  o.require(min_u >= -1e-14, "U semidefinite");
  o.require(dt < 30.0, "runtime");
}

void c5_stress(Outcome& o) {
  std::mt19937 rng(97);
  std::uniform_real_distribution<double> ua(0.0, 0.1), ur(0.01, 50.0), ut(0.02, 3.12), uv(-1.0, 1.0);
  double table = 0.0, trace = 0.0, dominant = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const KerrParams kp(1.0, ua(rng));
    const double r = kp.r_plus + ur(rng), th = ut(rng);
    fields::FramePoint f;
    for (int c = 0; c < 3; ++c) {
      f.E[c] = uv(rng);
      f.B[c] = uv(rng);
    }
    for (double x : ev::stress_table_residuals(kp, r, th, f)) table = std::max(table, x);
    const auto T = ev::stress_tensor(kp, r, th, fields::two_form(kp, r, th, f));
    const auto gi = metric(kp, r, th).ginv;
    const auto e = tetrad(kp, r, th);
    const double scale = contract(T, e.t_hat, e.t_hat);
    double tr = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) tr += gi[i][j] * T[i][j];
    trace = std::max(trace, std::abs(tr) / scale);
    // future causal pairs
    for (int k = 0; k < 4; ++k) {
      Vec4 X{}, Y{};
      const double vx = std::abs(uv(rng)), vy = std::abs(uv(rng)), ax = 3.0 * uv(rng), ay = 3.0 * uv(rng);
      for (int c = 0; c < 4; ++c) {
        X[c] = e.t_hat[c] + vx * (std::cos(ax) * e.r_hat[c] + std::sin(ax) * e.phi_hat[c]);
        Y[c] = e.t_hat[c] + vy * (std::cos(ay) * e.theta_hat[c] + std::sin(ay) * e.r_hat[c]);
      }
      dominant = std::min(dominant, contract(T, X, Y) / scale);
    }
  }
  o.detail << "max table residual " << table << ", max |tr T|/T(e0,e0) " << trace << ", min T(X,Y)/T(e0,e0) "
           << dominant << " over 1000 points";
  o.require(table < 1e-12, "component table");
  o.require(trace < 1e-12, "trace free");
  o.require(dominant >= -1e-12, "dominant energy");
}

fields::AnalyticField initial_field(const KerrParams& kp, const ev::InitialData& d) {
  const Tortoise tort(kp);
  return {kp, d.m, [kp, tort, d](double r, double th) {
            const auto rp = radial_point_from_x(kp, r - kp.r_plus);
            return ev::boost_phi(d.maxwell(rp, tort.r_star(r), th), ev::pnv_boost_velocity(kp, rp, th));
          }};
}

void c6_charges(Outcome& o) {
  double coul = 0.0, spread = 0.0;
  for (double a : {0.0, 0.05, 0.1}) {
    const KerrParams kp(1.0, a);
    const cplx q(0.8, -0.35);
    for (double r : {kp.r_plus + 0.05, 3.0, 10.0, 50.0, 400.0})
      coul = std::max(coul, std::abs(fields::charges(fields::coulomb(kp, q), r).q() - q));
    // Coulomb plus a charge-free curl pulse straddling the spheres
    const auto F = initial_field(kp, ev::sum(ev::coulomb_data(kp, q), ev::curl_pulse(kp, 10.0, 4.0, 1)));
    const cplx q3 = fields::charges(F, 3.0).q();
    for (double r : {10.0, 50.0}) spread = std::max(spread, std::abs(fields::charges(F, r).q() - q3));
    spread = std::max(spread, std::abs(q3 - q));
  }
  const KerrParams kp(1.0, 0.05);
  const auto data = ev::coulomb_data(kp, cplx(1.0, 0.5));
  double res[3];
  for (int p = 0; p < 3; ++p) {
    ev::GridSpec g;
    g.rstar_min = -10.0;
    g.rstar_max = 50.0;
    g.n_r = 96 << p;
    const ev::FISolver fs(kp, g);
    ev::ScalarState out;
    fs.rhs(ev::fi_initial(fs, data), out);
    res[p] = l2(out.pi, fs.radial().weight, fs.n_theta());
  }
  const double o1 = std::log2(res[0] / res[1]), o2 = std::log2(res[1] / res[2]);
  o.detail << "Coulomb error " << coul << ", r-spread with a curl pulse " << spread << ", FI residuals " << res[0]
           << " " << res[1] << " " << res[2] << " (orders " << o1 << ", " << o2 << ")";
  o.require(coul < 1e-10, "charges(coulomb(q)) = q");
  o.require(spread < 1e-9, "r-independence");
  o.require(o1 >= 2.0 && o2 >= 2.0, "residual order");
}

void c7_conservation(Outcome& o) {
  const KerrParams kp(1.0, 0.0);
  ev::RunConfig rc;
  rc.T = 100.0;
  rc.sample_dt = 50.0;
  double drift[3];
  for (int p = 0; p < 3; ++p) {
    ev::GridSpec g;
    g.n_r = 1024 << p;
    const auto s = ev::evolve(kp, g, ev::fi_pulse(kp, 60.0, 4.0, 1, 0), rc);
    drift[p] = std::abs(s.back().E_dt_ups / s.samples.front().E_dt_ups - 1.0);
  }
  o.detail << "drift N=1024 " << drift[0] << ", N=2048 " << drift[1] << ", N=4096 " << drift[2] << " (factors "
           << drift[0] / drift[1] << ", " << drift[1] / drift[2] << ")";
  o.require(drift[1] <= 1e-5, "drift at N = 2048");
  o.require(drift[0] / drift[1] >= 4.0 && drift[1] / drift[2] >= 4.0, "factor 4 per doubling");
}

// shared by 8 and 10: the a = 0.05 charge-free curl pulse
struct KerrRuns {
  KerrParams kp{1.0, 0.05};
  ev::DiagnosticSeries base, refined, doubled;
  estimates::CoreEstimateReport r_base, r_refined, r_doubled;
};

KerrRuns kerr_runs() {
  KerrRuns k;
  const auto d = ev::curl_pulse(k.kp, 40.0, 4.0, 1);
  ev::RunConfig rc;
  rc.T = 100.0;
  rc.fi = true;
  rc.maxwell = true;
  ev::GridSpec g;  // [-60, 200], N = 2048
  k.base = ev::evolve(k.kp, g, d, rc);
  k.r_base = estimates::evaluate_core_estimates(k.kp, k.base, 100.0);
  auto gr = g;
  gr.n_r = 2 * (g.n_r - 1) + 1;
  k.refined = ev::evolve(k.kp, gr, d, rc);
  k.r_refined = estimates::evaluate_core_estimates(k.kp, k.refined, 100.0);
  // same spacing on a domain wide enough that nothing reaches the ends by T = 200
  auto gw = g;
  gw.rstar_min -= 100.0;
  gw.rstar_max += 100.0;
  gw.n_r = int(std::lround((gw.rstar_max - gw.rstar_min) / ((g.rstar_max - g.rstar_min) / (g.n_r - 1)))) + 1;
  auto rw = rc;
  rw.T = 200.0;
  k.doubled = ev::evolve(k.kp, gw, d, rw);
  k.r_doubled = estimates::evaluate_core_estimates(k.kp, k.doubled, 200.0);
  return k;
}

void c8_energy(Outcome& o, const KerrRuns& k) {
  const double e0 = k.base.samples.front().E_Tchi_ups;
  double worst = 0.0;
  for (const auto& s : k.base.samples) worst = std::max(worst, s.E_Tchi_ups / e0);
  const auto t_ref = estimates::trend({k.r_base, k.r_refined}, {"base", "refined"});
  const auto t_win = estimates::trend({k.r_base, k.r_doubled}, {"base", "doubled"});
  bool finite = true;
  double spread = 0.0;
  o.detail << "max E_Tchi/E(0) " << worst << "; C";
  const char* ids[5] = {"I", "II", "III", "IV", "V"};
  for (int i = 0; i < 5; ++i) {
    const auto& e = k.r_base.core[std::size_t(i)];
    finite = finite && (e.vacuous || std::isfinite(e.C));
    spread = std::max({spread, t_ref.spread[std::size_t(i)], t_win.spread[std::size_t(i)]});
    o.detail << " " << ids[i] << "=" << e.C << " (" << t_ref.spread[std::size_t(i)] << ", "
             << t_win.spread[std::size_t(i)] << ")";
  }
  o.detail << "; worst spread " << spread;
  o.require(worst <= 1.1, "E_Tchi <= 1.1 E(0)");
  o.require(finite, "finite constants");
  o.require(spread < 0.25, "spread under refinement and T-doubling");
}

// accumulated B_0 + B_20, linear between samples
double bulk_at(const ev::DiagnosticSeries& s, double t) {
  const auto& v = s.samples;
  auto b = [](const ev::DiagnosticSample& x) { return x.B_0 + x.B_20; };
  for (std::size_t n = 1; n < v.size(); ++n)
    if (v[n].t >= t) return b(v[n - 1]) + (t - v[n - 1].t) / (v[n].t - v[n - 1].t) * (b(v[n]) - b(v[n - 1]));
  throw std::runtime_error("series ends before t");
}

void c10_morawetz(Outcome& o, const KerrRuns& k) {
  const double b1 = bulk_at(k.doubled, 100.0), b2 = bulk_at(k.doubled, 200.0);
  const double change = std::abs(b2 - b1) / b1;
  o.detail << "B_0 + B_20 at T = 100: " << b1 << ", at T = 200: " << b2 << ", change " << change;
  o.require(b1 > 0.0, "nonzero bulk");
  o.require(change < 0.05, "change < 5%");
}

void c9_spectral(Outcome& o) {
  double q_err = 0.0;
  for (int m = 0; m <= 10; ++m) {
    const auto eg = spectral::spheroidal_eigs(0.7, m, 0.0, 16);
    for (int l = m; l <= 10; ++l) q_err = std::max(q_err, std::abs(eg.Q[std::size_t(l - m)] - double(l * (l + 1) - m * m)));
  }

  const KerrParams kp(1.0, 0.0);
  ev::GridSpec g;
  g.rstar_min = -30.0;
  g.rstar_max = 70.0;
  g.n_r = 512;
  const double T = 30.0;
  auto run = [&](const ev::InitialData& d, double& parseval) {
    const ev::FISolver fs(kp, g);
    spectral::TimeSeries ts;
    ev::Observer obs;
    obs.fi = spectral::recorder(fs, 1, ts);
    ev::RunConfig rc;
    rc.t0 = -1.0;
    rc.T = T + 1.0;
    ev::evolve(kp, g, d, rc, obs);
    const auto w = spectral::window_fields(kp, fs.radial(), fs.basis(), ts, T);
    const auto tu = spectral::transform(kp, fs.basis(), w.u, ts.t0, ts.dt);
    const auto phys = spectral::physical_norm2(fs.basis(), w.u, ts.dt);
    const auto spec = spectral::spectral_norm2(tu);
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < phys.size(); ++i) {
      diff = std::max(diff, std::abs(phys[i] - spec[i]));
      scale = std::max(scale, phys[i]);
    }
    parseval = std::max(parseval, diff / scale);
    return spectral::spectral_lower_bound_check(kp, tu).min_relative(0.0, 0.0, 1.0);
  };
  double parseval = 0.0;
  const auto clean = ev::sum(ev::fi_pulse(kp, 20.0, 3.0, 1, 0), ev::fi_pulse(kp, 20.0, 3.0, 2, 0, 0.5));
  const double m_clean = run(clean, parseval);
  const double m_dirty = run(ev::sum(clean, ev::fi_pulse(kp, 20.0, 3.0, 0, 0, 0.3)), parseval);
  o.detail << "max Q error (l <= 10) " << q_err << ", Parseval " << parseval << ", min relative margin charge-free "
           << m_clean << ", with l = 0 " << m_dirty;
  o.require(q_err < 1e-8, "Q at a = 0");
  o.require(parseval < 1e-10, "Parseval");
  o.require(m_clean >= 0.0, "charge-free margin");
  o.require(m_dirty < 0.0, "contaminated margin");
}

}  // namespace

// optional arguments: criterion numbers to run
int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  int failed = 0;
  auto report = [&](int id, const std::function<void(Outcome&)>& f) {
    if (!wanted(id)) return;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      f(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failed;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail.str() << "  ("
              << seconds_since(t0) << " s)" << std::endl;
  };
  std::cout.precision(6);
  report(1, c1_hypergeometric);
  report(2, c2_hardy);
  report(3, c3_root);
  report(4, c4_identity);
  report(5, c5_stress);
  report(6, c6_charges);
  report(7, c7_conservation);
  KerrRuns k;
  std::string runs_error;
  if (wanted(8) || wanted(10)) {
    const auto t0 = Clock::now();
    try {
      k = kerr_runs();
    } catch (const std::exception& e) {
      runs_error = e.what();
    }
    std::cout << "a = 0.05 coupled runs (base, refined, doubled): " << seconds_since(t0) << " s" << std::endl;
  }
  auto with_runs = [&](void (*f)(Outcome&, const KerrRuns&)) {
    return [&, f](Outcome& o) {
      if (!runs_error.empty()) throw std::runtime_error(runs_error);
      f(o, k);
    };
  };
  report(8, with_runs(c8_energy));
  report(9, c9_spectral);
  report(10, with_runs(c10_morawetz));
  std::cout << (failed == 0 ? "all criteria PASS" : std::to_string(failed) + " criteria FAIL") << std::endl;
  return failed == 0 ? 0 : 1;
}
