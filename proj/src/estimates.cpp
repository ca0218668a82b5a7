#include "kerrlab/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kerrlab/fields.hpp"

namespace kerrlab::estimates {

namespace {

Estimate make(std::string id, double lhs, std::vector<Term> terms) {
  Estimate e;
  e.id = std::move(id);
  e.lhs = lhs;
  e.rhs_terms = std::move(terms);
  for (const auto& t : e.rhs_terms) e.rhs += t.value;
  if (e.lhs == 0.0 && e.rhs == 0.0) {
    e.vacuous = true;
    e.C = std::numeric_limits<double>::quiet_NaN();
  } else {
    e.C = e.rhs > 0.0 ? e.lhs / e.rhs : std::numeric_limits<double>::infinity();
  }
  return e;
}

// lhs at roundoff relative to the rhs, e.g. B_1 for a single-phase m = 0 field
constexpr double kRoundoffC = 1e-12;

double spread(double ref, double x) {
  if (std::isnan(ref) && std::isnan(x)) return 0.0;
  if (std::abs(ref) < kRoundoffC && std::abs(x) < kRoundoffC) return 0.0;
  if (!(std::isfinite(ref) && std::isfinite(x)) || ref == 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(x - ref) / std::abs(ref);
}

}  // namespace

CoreEstimateReport evaluate_core_estimates(const KerrParams& kp, const evolution::DiagnosticSeries& s, double T) {
  if (!s.has_fi || !s.has_maxwell) throw EstimateError("core estimates need a coupled Maxwell and FI run");
  if (s.samples.empty()) throw EstimateError("empty diagnostic series");
  const auto& s0 = s.samples.front();
  const auto& sT = s.at(T);
  const double tol = 1e-9 * std::max(1.0, std::abs(T));
  if (std::abs(s0.t) > tol || std::abs(sT.t - T) > tol) throw EstimateError("series has no samples at 0 and T");
  const double e = std::abs(kp.a) / kp.M;

  CoreEstimateReport r;
  r.kp = kp;
  r.T = T;
  r.core[0] = make("I", sT.E_F, {{"E_F(0)", s0.E_F}, {"|a|/M B_pm", e * sT.B_pm}, {"|a|/M B_0", e * sT.B_0}});
  r.core[1] = make("II", sT.B_pm, {{"E_F(T)", sT.E_F}, {"E_F(0)", s0.E_F}, {"B_0", sT.B_0}});
  r.core[2] = make("III", sT.E_FI,
                   {{"E_FI(0)", s0.E_FI},
                    {"E_F(0)", s0.E_F},
                    {"|a|/M B_pm", e * sT.B_pm},
                    {"|a|/M B_0", e * sT.B_0},
                    {"|a|/M B_1", e * sT.B_1},
                    {"|a|/M B_20", e * sT.B_20}});
  r.core[3] = make("IV", sT.B_0 + sT.B_20,
                   {{"E_FI(T)", sT.E_FI},
                    {"E_FI(0)", s0.E_FI},
                    {"E_F(T)", sT.E_F},
                    {"E_F(0)", s0.E_F},
                    {"|a|/M B_pm", e * sT.B_pm}});
  r.core[4] = make("V", sT.B_1, {{"E_FI(T)", sT.E_FI}, {"E_FI(0)", s0.E_FI}, {"B_0", sT.B_0}, {"B_20", sT.B_20}});
  const double bulks = sT.B_pm + sT.B_0 + sT.B_1 + sT.B_20;
  r.energy_bound = make("energy_bound", sT.E_F + sT.E_FI + bulks, {{"E_F(0)", s0.E_F}, {"E_FI(0)", s0.E_FI}});
  r.morawetz = make("morawetz", bulks,
                    {{"E_F(T)", sT.E_F}, {"E_F(0)", s0.E_F}, {"E_FI(T)", sT.E_FI}, {"E_FI(0)", s0.E_FI}});
  return r;
}

double Trend::worst() const {
  double w = std::max(energy_bound, morawetz);
  for (double x : spread) w = std::max(w, x);
  return w;
}

Trend trend(const std::vector<CoreEstimateReport>& reports, std::vector<std::string> labels) {
  if (reports.size() < 2) throw EstimateError("a trend needs at least two reports");
  Trend t;
  t.labels = std::move(labels);
  const auto& ref = reports.front();
  for (std::size_t k = 1; k < reports.size(); ++k) {
    for (std::size_t i = 0; i < 5; ++i) t.spread[i] = std::max(t.spread[i], spread(ref.core[i].C, reports[k].core[i].C));
    t.energy_bound = std::max(t.energy_bound, spread(ref.energy_bound.C, reports[k].energy_bound.C));
    t.morawetz = std::max(t.morawetz, spread(ref.morawetz.C, reports[k].morawetz.C));
  }
  return t;
}

double CoulombConvergence::plateau() const {
  if (t.size() < 2) return 0.0;
  const double T = t.back();
  std::size_t half = 0;
  for (std::size_t k = 1; k < t.size(); ++k)
    if (std::abs(t[k] - 0.5 * T) < std::abs(t[half] - 0.5 * T)) half = k;
  if (integral[half] == 0.0) return integral.back() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return integral.back() / integral[half] - 1.0;
}

CoulombConvergence coulomb_convergence_check(const KerrParams& kp, const evolution::GridSpec& g,
                                             const evolution::InitialData& d, const evolution::RunConfig& cfg,
                                             double charge_radius) {
  if (!d.maxwell) throw EstimateError("charge decomposition needs Maxwell initial data");
  if (d.m != 0) throw EstimateError("charges vanish unless m = 0");
  const Tortoise tort(kp);
  fields::AnalyticField initial;
  initial.kp = kp;
  initial.m = d.m;
  initial.f = [&](double r, double th) {
    const auto rp = radial_point_from_x(kp, r - kp.r_plus);
    const auto f = d.maxwell(rp, tort.r_star(r), th);
    return evolution::boost_phi(f, evolution::pnv_boost_velocity(kp, rp, th));
  };
  CoulombConvergence out;
  out.q = fields::charges(initial, charge_radius).q();
  const auto stat = fields::coulomb(kp, out.q);

  evolution::RunConfig run = cfg;
  run.fi = true;
  run.maxwell = true;
  const evolution::MaxwellSolver ms(kp, g);
  std::vector<fields::FramePoint> target(ms.size());
  for (std::size_t i = 0; i < ms.n_r(); ++i)
    for (std::size_t j = 0; j < ms.n_theta(); ++j) target[ms.index(i, j)] = stat.f(ms.radial().pt[i].r, ms.theta()[j]);

  double acc = 0.0, prev_t = 0.0, prev_v = 0.0;
  bool first = true;
  evolution::Observer obs;
  obs.maxwell = [&](const evolution::MaxwellState& s) {
    double v = 0.0;
    for (std::size_t i = 0; i < ms.n_r(); ++i) {
      const auto& rp = ms.radial().pt[i];
      double row = 0.0;
      for (std::size_t j = 0; j < ms.n_theta(); ++j) {
        const std::size_t k = ms.index(i, j);
        const auto f = ms.pnv(s, k);
        for (int c = 0; c < 3; ++c) row += ms.theta_weight()[j] * (std::norm(f.E[c] - target[k].E[c]) + std::norm(f.B[c] - target[k].B[c]));
      }
      v += ms.radial().weight[i] * rp.Delta / (rp.r * rp.r + kp.a * kp.a) * row;
    }
    v *= 2.0 * std::numbers::pi;
    if (!first) acc += 0.5 * (s.t - prev_t) * (v + prev_v);
    first = false;
    prev_t = s.t;
    prev_v = v;
    out.t.push_back(s.t - cfg.t0);
    out.integral.push_back(acc);
  };
  const auto series = evolution::evolve(kp, g, d, run, obs);
  out.initial_energy = series.samples.front().E_F + series.samples.front().E_FI;
  return out;
}

}  // namespace kerrlab::estimates
