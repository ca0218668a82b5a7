#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "kerrlab/evolution.hpp"

namespace kerrlab::evolution {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr cplx kI(0.0, 1.0);

double dr_factor(const KerrParams& kp, const RadialPoint& rp) { return rp.Delta / (rp.r * rp.r + kp.a * kp.a); }

double chi_far(const KerrParams& kp, double r, double r_gap) {
  return cutoff(CutoffSpec{CutoffKind::far, r_gap}, kp, r);
}

double omega_chi(const KerrParams& kp, double r) { return cutoff(CutoffSpec{CutoffKind::blend}, kp, r) * kp.omega_horizon(); }

}  // namespace

const DiagnosticSample& DiagnosticSeries::at(double t) const {
  if (samples.empty()) throw EvolutionError("empty diagnostic series");
  std::size_t best = 0;
  for (std::size_t k = 1; k < samples.size(); ++k)
    if (std::abs(samples[k].t - t) < std::abs(samples[best].t - t)) best = k;
  return samples[best];
}

double fi_energy_crude(const FISolver& fs, const ScalarState& s) {
  const auto& kp = fs.params();
  const auto& rg = fs.radial();
  const auto& w = fs.basis().weight;
  const auto dr = fs.d_rstar_field(s.ups);
  const auto lap = fs.lap_field(s.ups);
  double sum = 0.0;
  for (std::size_t i = 0; i < fs.n_r(); ++i) {
    const auto& rp = rg.pt[i];
    const double f = dr_factor(kp, rp) / (rp.r * rp.r);
    double row = 0.0;
    for (std::size_t j = 0; j < fs.n_theta(); ++j) {
      const std::size_t k = fs.index(i, j);
      // int |grad_S2 U|^2 = -int conj(U) L U
      const double ang = -(std::conj(s.ups[k]) * lap[k]).real();
      row += w[j] * (std::norm(s.pi[k]) + std::norm(dr[k]) + f * (ang + std::norm(s.ups[k])));
    }
    sum += rg.weight[i] * rp.r * rp.r * row;
  }
  return kTwoPi * sum;
}

double fi_flux_energy(const FISolver& fs, const ScalarState& s, double chi_scale) {
  const auto& kp = fs.params();
  const auto& rg = fs.radial();
  const auto& b = fs.basis();
  const double a = kp.a, M = kp.M, m = fs.grid().m;
  const auto dr = fs.d_rstar_field(s.ups);
  const auto dth = fs.d_theta_field(s.ups);
  double sum = 0.0;
  for (std::size_t i = 0; i < fs.n_r(); ++i) {
    const auto& rp = rg.pt[i];
    const double r = rp.r, ra = r * r + a * a;
    const double wx = chi_scale * omega_chi(kp, r);
    double row = 0.0;
    for (std::size_t j = 0; j < fs.n_theta(); ++j) {
      const std::size_t k = fs.index(i, j);
      const auto gs = geometry_scalars(kp, rp, b.theta[j]);
      const double sn = std::sin(b.theta[j]);
      const double w = 2.0 * a * M * r / gs.Pi;
      const cplx u = s.ups[k];
      const cplx Tu = s.pi[k] + kI * m * w * u;
      const cplx Xu = s.pi[k] + kI * m * wx * u;
      const cplx V = -2.0 * M / (gs.p * gs.p * gs.p);
      const double grad = ra * ra / gs.Pi * std::norm(dr[k]) + gs.Delta / gs.Pi * std::norm(dth[k]) +
                          gs.Delta * gs.Sigma * gs.Sigma * m * m * std::norm(u) / (gs.Pi * gs.Pi * sn * sn) +
                          gs.Delta * gs.Sigma / gs.Pi * V.real() * std::norm(u);
      const double T = (std::conj(Xu) * Tu).real() - 0.5 * std::norm(Tu) + 0.5 * grad;
      row += b.weight[j] * T * gs.Pi / ra;
    }
    sum += rg.weight[i] * row;
  }
  return kTwoPi * sum;
}

double maxwell_energy(const MaxwellSolver& ms, const MaxwellState& s) {
  const auto& kp = ms.params();
  const auto& rg = ms.radial();
  double sum = 0.0;
  for (std::size_t i = 0; i < ms.n_r(); ++i) {
    const auto& rp = rg.pt[i];
    double row = 0.0;
    for (std::size_t j = 0; j < ms.n_theta(); ++j) {
      const std::size_t k = ms.index(i, j);
      row += ms.theta_weight()[j] * fields::spin_density(ms.pnv(s, k));
    }
    sum += rg.weight[i] * dr_factor(kp, rp) * rp.r * rp.r * row;
  }
  return kTwoPi * sum;
}

double maxwell_flux_energy(const MaxwellSolver& ms, const MaxwellState& s, double chi_scale) {
  const auto& kp = ms.params();
  const auto& rg = ms.radial();
  const double a = kp.a, M = kp.M;
  double sum = 0.0;
  for (std::size_t i = 0; i < ms.n_r(); ++i) {
    const auto& rp = rg.pt[i];
    const double r = rp.r, ra = r * r + a * a, sd = std::sqrt(rp.Delta);
    const double wx = chi_scale * omega_chi(kp, r);
    double row = 0.0;
    for (std::size_t j = 0; j < ms.n_theta(); ++j) {
      const std::size_t k = ms.index(i, j);
      const double th = ms.theta()[j];
      const auto gs = geometry_scalars(kp, rp, th);
      const double w = 2.0 * a * M * r / gs.Pi;
      double eb = 0.0;
      for (int c = 0; c < 3; ++c) eb += std::norm(s.D[c][k]) + std::norm(s.B[c][k]);
      const double poynting = (s.D[0][k] * std::conj(s.B[1][k]) - s.D[1][k] * std::conj(s.B[0][k])).real();
      const double dens = rp.Delta * gs.Sigma * 2.0 * eb + (wx - w) * sd * std::sin(th) * gs.Pi * (-4.0 * poynting);
      row += ms.theta_weight()[j] * dens / ra;
    }
    sum += rg.weight[i] * row;
  }
  return kTwoPi * sum;
}

BulkRates fi_bulk_rates(const FISolver& fs, const ScalarState& s, double r_gap) {
  const auto& kp = fs.params();
  const auto& rg = fs.radial();
  const auto& w = fs.basis().weight;
  const double M = kp.M;
  const auto dr = fs.d_rstar_field(s.ups);
  const auto lap = fs.lap_field(s.ups);
  BulkRates out;
  for (std::size_t i = 0; i < fs.n_r(); ++i) {
    const auto& rp = rg.pt[i];
    const double r = rp.r, f = dr_factor(kp, rp), chi = chi_far(kp, r, r_gap);
    double zero = 0.0, radial = 0.0, rest = 0.0;
    for (std::size_t j = 0; j < fs.n_theta(); ++j) {
      const std::size_t k = fs.index(i, j);
      zero += w[j] * std::norm(s.ups[k]);
      radial += w[j] * std::norm(dr[k]);
      rest += w[j] * (M * M * std::norm(s.pi[k]) - (std::conj(s.ups[k]) * lap[k]).real());
    }
    out.zero += rg.weight[i] * f * M * zero / (r * r);
    out.two_zero += rg.weight[i] * (M * rp.Delta / (r * r) * radial + chi * rest / r * f);
  }
  out.zero *= kTwoPi;
  out.two_zero *= kTwoPi;
  return out;
}

double maxwell_bulk_rate(const MaxwellSolver& ms, const MaxwellState& s) {
  const auto& kp = ms.params();
  const auto& rg = ms.radial();
  double sum = 0.0;
  for (std::size_t i = 0; i < ms.n_r(); ++i) {
    const auto& rp = rg.pt[i];
    const double ra = rp.r * rp.r + kp.a * kp.a;
    double row = 0.0;
    for (std::size_t j = 0; j < ms.n_theta(); ++j) {
      const std::size_t k = ms.index(i, j);
      const double th = ms.theta()[j];
      const double sigma = rp.r * rp.r + std::pow(kp.a * std::cos(th), 2);
      const auto w = fields::spin_weights(ms.pnv(s, k));
      row += ms.theta_weight()[j] * sigma * (w[0] + w[2]);
    }
    sum += rg.weight[i] * dr_factor(kp, rp) * kp.M * rp.Delta / (ra * ra) * row;
  }
  return kTwoPi * sum;
}

std::vector<double> fi_b1_density(const FISolver& fs, const ScalarState& s) {
  std::vector<double> out(fs.n_r(), 0.0);
  const auto& w = fs.basis().weight;
  for (std::size_t i = 0; i < fs.n_r(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < fs.n_theta(); ++j) {
      const std::size_t k = fs.index(i, j);
      row += w[j] * (std::conj(s.ups[k]) * s.pi[k]).imag();
    }
    out[i] = kTwoPi * row;
  }
  return out;
}

double fi_b1_finalize(const FISolver& fs, const std::vector<double>& inner, double r_gap) {
  const auto& kp = fs.params();
  const auto& rg = fs.radial();
  if (inner.size() != fs.n_r()) throw EvolutionError("B_1 accumulator does not match the grid");
  double sum = 0.0;
  for (std::size_t i = 0; i < fs.n_r(); ++i) {
    const auto& rp = rg.pt[i];
    sum += rg.weight[i] * dr_factor(kp, rp) * (1.0 - chi_far(kp, rp.r, r_gap)) * std::abs(inner[i]);
  }
  return sum;
}

// --- runner ---------------------------------------------------------------------

namespace {

double fi_size(const ScalarState& s) {
  double m = 0.0;
  for (std::size_t k = 0; k < s.ups.size(); ++k) {
    const double v = std::max(std::abs(s.ups[k]), std::abs(s.pi[k]));
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    m = std::max(m, v);
  }
  return m;
}

// weighted by sqrt(Delta/(r^2+a^2)) so the horizon blueshift does not count as growth
double maxwell_size(const MaxwellSolver& ms, const MaxwellState& s) {
  double m = 0.0;
  for (std::size_t i = 0; i < ms.n_r(); ++i) {
    const auto& rp = ms.radial().pt[i];
    const double w = std::sqrt(dr_factor(ms.params(), rp));
    for (std::size_t j = 0; j < ms.n_theta(); ++j)
      for (int c = 0; c < 3; ++c) {
        const std::size_t k = ms.index(i, j);
        const double v = w * std::max(std::abs(s.D[c][k]), std::abs(s.B[c][k]));
        if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
        m = std::max(m, v);
      }
  }
  return m;
}

void check_growth(double now, double initial, double limit, double t, const char* what) {
  if (!std::isfinite(now))
    throw EvolutionError(std::string(what) + " field is not finite at t = " + std::to_string(t));
  if (initial > 0.0 && now > limit * initial)
    throw EvolutionError(std::string(what) + " field grew by more than " + std::to_string(limit) + " at t = " +
                         std::to_string(t));
}

}  // namespace

DiagnosticSeries evolve(const KerrParams& kp, const GridSpec& g, const InitialData& d, const RunConfig& cfg,
                        const Observer& obs) {
  if (!(cfg.T > cfg.t0)) throw EvolutionError("final time must exceed the initial time");
  if (!cfg.fi && !cfg.maxwell) throw EvolutionError("nothing to evolve");
  if (!(cfg.sample_dt > 0.0)) throw EvolutionError("sample interval must be positive");

  std::optional<FISolver> fs;
  std::optional<MaxwellSolver> ms;
  ScalarState us;
  MaxwellState mstate;
  if (cfg.fi) {
    fs.emplace(kp, g);
    us = fi_initial(*fs, d, cfg.t0);
  }
  if (cfg.maxwell) {
    ms.emplace(kp, g);
    mstate = maxwell_initial(*ms, d, cfg.t0);
  }
  const double h = fs ? fs->radial().h : ms->radial().h;
  const auto n_steps = static_cast<long>(std::ceil((cfg.T - cfg.t0) / (g.cfl * h) - 1e-9));
  const double dt = (cfg.T - cfg.t0) / double(n_steps);
  const long every = std::max(1L, std::lround(cfg.sample_dt / dt));

  DiagnosticSeries series;
  series.has_fi = cfg.fi;
  series.has_maxwell = cfg.maxwell;
  series.r_gap = cfg.r_gap;
  if (fs) series.b1_inner.assign(fs->n_r(), 0.0);

  BulkRates rate_prev;
  double pm_prev = 0.0;
  std::vector<double> j_prev;
  auto rates = [&](BulkRates& r, double& pm, std::vector<double>& jd) {
    if (fs) {
      r = fi_bulk_rates(*fs, us, cfg.r_gap);
      jd = fi_b1_density(*fs, us);
    }
    if (ms) pm = maxwell_bulk_rate(*ms, mstate);
  };
  rates(rate_prev, pm_prev, j_prev);

  DiagnosticSample acc;
  auto take_sample = [&](double t) {
    DiagnosticSample smp = acc;
    smp.t = t;
    if (fs) {
      smp.E_FI = fi_energy_crude(*fs, us);
      smp.E_dt_ups = fi_flux_energy(*fs, us, 0.0);
      smp.E_Tchi_ups = fi_flux_energy(*fs, us, 1.0);
      smp.B_1 = fi_b1_finalize(*fs, series.b1_inner, cfg.r_gap);
    }
    if (ms) {
      smp.E_F = maxwell_energy(*ms, mstate);
      smp.E_dt_F = maxwell_flux_energy(*ms, mstate, 0.0);
      smp.E_Tchi_F = maxwell_flux_energy(*ms, mstate, 1.0);
      const auto c = ms->constraints(mstate);
      smp.div_D = c.div_D;
      smp.div_B = c.div_B;
    }
    series.samples.push_back(smp);
  };

  const double fi0 = fs ? fi_size(us) : 0.0;
  const double mx0 = ms ? maxwell_size(*ms, mstate) : 0.0;
  if (obs.fi && fs) obs.fi(us);
  if (obs.maxwell && ms) obs.maxwell(mstate);
  take_sample(cfg.t0);

  for (long n = 1; n <= n_steps; ++n) {
    if (fs) fs->step(us, dt);
    if (ms) ms->step(mstate, dt);
    const double t = cfg.t0 + double(n) * dt;
    if (fs) us.t = t;
    if (ms) mstate.t = t;

    BulkRates r;
    double pm = 0.0;
    std::vector<double> jd;
    rates(r, pm, jd);
    acc.B_0 += 0.5 * dt * (rate_prev.zero + r.zero);
    acc.B_20 += 0.5 * dt * (rate_prev.two_zero + r.two_zero);
    acc.B_pm += 0.5 * dt * (pm_prev + pm);
    for (std::size_t i = 0; i < jd.size(); ++i) series.b1_inner[i] += 0.5 * dt * (j_prev[i] + jd[i]);
    rate_prev = r;
    pm_prev = pm;
    j_prev = std::move(jd);

    if (obs.fi && fs) obs.fi(us);
    if (obs.maxwell && ms) obs.maxwell(mstate);
    if (n % every == 0 || n == n_steps) {
      if (fs) check_growth(fi_size(us), fi0, cfg.blowup, t, "Fackerell-Ipser");
      if (ms) check_growth(maxwell_size(*ms, mstate), mx0, cfg.blowup, t, "Maxwell");
      take_sample(t);
    }
  }
  return series;
}

}  // namespace kerrlab::evolution
