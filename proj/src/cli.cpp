#include "kerrlab/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "kerrlab/estimates.hpp"
#include "kerrlab/fields.hpp"
#include "kerrlab/hardy.hpp"
#include "kerrlab/spectral.hpp"

namespace kerrlab::cli {

namespace fsys = std::filesystem;
namespace ev = kerrlab::evolution;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// --- config reading -------------------------------------------------------------

class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }

  std::string at(const std::string& k) const { return path_ + "/" + k; }

  const json* get(const std::string& k) {
    used_.insert(k);
    const auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  double number(const std::string& k, double def, double lo = -kInf, double hi = kInf, bool lo_open = false) {
    const json* v = get(k);
    if (!v) return def;
    if (!v->is_number()) throw ConfigError(at(k), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x) || x < lo || x > hi || (lo_open && x == lo))
      throw ConfigError(at(k), "value " + fmt(x) + " outside " + (lo_open ? "(" : "[") + fmt(lo) + ", " + fmt(hi) + "]");
    return x;
  }

  int integer(const std::string& k, int def, int lo, int hi) {
    const json* v = get(k);
    if (!v) return def;
    if (!v->is_number_integer()) throw ConfigError(at(k), "expected an integer");
    const auto x = v->get<long long>();
    if (x < lo || x > hi)
      throw ConfigError(at(k), "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                                   std::to_string(hi) + "]");
    return int(x);
  }

  bool boolean(const std::string& k, bool def) {
    const json* v = get(k);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError(at(k), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& k, const std::string& def, const std::set<std::string>& allowed = {}) {
    const json* v = get(k);
    if (!v) return def;
    if (!v->is_string()) throw ConfigError(at(k), "expected a string");
    auto s = v->get<std::string>();
    if (!allowed.empty() && !allowed.count(s)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(at(k), "'" + s + "' is not one of " + list);
    }
    return s;
  }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

InitialSpec parse_initial(const json& j, const std::string& path) {
  Obj o(j, path);
  InitialSpec s;
  if (!o.get("type")) throw ConfigError(o.at("type"), "missing");
  s.type = o.string("type", "", {"zero", "coulomb", "pulse", "mixed"});
  if (s.type == "zero") {
    s.m = o.integer("m", 0, -20, 20);
  } else if (s.type == "coulomb") {
    const json* q = o.get("q");
    if (!q) throw ConfigError(o.at("q"), "missing");
    if (q->is_number()) {
      s.q_re = q->get<double>();
    } else if (q->is_array() && q->size() == 2 && (*q)[0].is_number() && (*q)[1].is_number()) {
      s.q_re = (*q)[0].get<double>();
      s.q_im = (*q)[1].get<double>();
    } else {
      throw ConfigError(o.at("q"), "expected a number or [re, im]");
    }
    if (!std::isfinite(s.q_re) || !std::isfinite(s.q_im)) throw ConfigError(o.at("q"), "not finite");
  } else if (s.type == "pulse") {
    s.field = o.string("field", "maxwell", {"fi", "maxwell"});
    s.center = o.number("center", 20.0);
    s.width = o.number("width", 3.0, 0.0, kInf, true);
    s.m = o.integer("m", 0, -20, 20);
    s.ell = o.integer("ell", std::max(1, std::abs(s.m)), 0, 60);
    s.amplitude = o.number("amplitude", 1.0);
    if (s.ell < std::abs(s.m)) throw ConfigError(o.at("ell"), "ell must be at least |m|");
    if (s.field == "maxwell" && s.m != 0) throw ConfigError(o.at("m"), "Maxwell pulses are axisymmetric (m = 0)");
    if (s.field == "maxwell" && s.ell < 1) throw ConfigError(o.at("ell"), "Maxwell pulses need ell >= 1");
  } else {
    const json* c = o.get("components");
    if (!c || !c->is_array() || c->empty()) throw ConfigError(o.at("components"), "expected a non-empty array");
    for (std::size_t i = 0; i < c->size(); ++i)
      s.components.push_back(parse_initial((*c)[i], o.at("components") + "/" + std::to_string(i)));
    for (std::size_t i = 1; i < s.components.size(); ++i)
      if (initial_m(s.components[i]) != initial_m(s.components[0]))
        throw ConfigError(o.at("components") + "/" + std::to_string(i), "all components need the same m");
  }
  o.done();
  return s;
}

json initial_json(const InitialSpec& s) {
  json j;
  j["type"] = s.type;
  if (s.type == "zero") {
    j["m"] = s.m;
  } else if (s.type == "coulomb") {
    j["q"] = {s.q_re, s.q_im};
  } else if (s.type == "pulse") {
    j["field"] = s.field;
    j["center"] = s.center;
    j["width"] = s.width;
    j["ell"] = s.ell;
    j["m"] = s.m;
    j["amplitude"] = s.amplitude;
  } else {
    j["components"] = json::array();
    for (const auto& c : s.components) j["components"].push_back(initial_json(c));
  }
  return j;
}

// --- output ---------------------------------------------------------------------

void write_json(std::string& o, const json& j, int indent, int level) {
  const auto nl = [&](int l) {
    if (indent < 0) return;
    o += '\n';
    o.append(std::size_t(indent * l), ' ');
  };
  switch (j.type()) {
    case json::value_t::object:
    case json::value_t::array: {
      const bool obj = j.is_object();
      if (j.empty()) {
        o += obj ? "{}" : "[]";
        return;
      }
      o += obj ? '{' : '[';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) o += ',';
        first = false;
        nl(level + 1);
        if (obj) {
          o += json(it.key()).dump();
          o += indent < 0 ? ":" : ": ";
        }
        write_json(o, it.value(), indent, level + 1);
      }
      nl(level);
      o += obj ? '}' : ']';
      return;
    }
    case json::value_t::number_float: {
      const double x = j.get<double>();
      o += std::isfinite(x) ? fmt(x) : "null";
      return;
    }
    default:
      o += j.dump();
  }
}

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) s_ += (i ? "," : "") + cols[i];
    s_ += '\n';
  }
  void row(const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) s_ += (i ? "," : "") + fmt(v[i]);
    s_ += '\n';
  }
  const std::string& str() const { return s_; }

 private:
  std::string s_;
};

fsys::path prepare(const ScenarioConfig& c) {
  std::error_code ec;
  fsys::create_directories(c.output_dir, ec);
  if (ec) throw IOError("cannot create " + c.output_dir + ": " + ec.message());
  return c.output_dir;
}

void write_file(const fsys::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IOError("cannot write " + p.string());
  f << text;
  if (!f) throw IOError("write failed for " + p.string());
}

json report_head(const std::string& cmd, const ScenarioConfig& c) {
  const auto kp = c.params();
  json r;
  r["command"] = cmd;
  r["schema_version"] = kSchemaVersion;
  r["scenario"] = to_json(c);
  r["params"] = {{"M", kp.M}, {"a", kp.a}, {"r_plus", kp.r_plus}};
  return r;
}

json grid_json(const ev::GridSpec& g, const ev::RadialGrid& rg) {
  return {{"rstar_min", g.rstar_min}, {"rstar_max", g.rstar_max}, {"n_r", g.n_r},
          {"n_theta", g.n_theta},     {"n_theta_maxwell", g.n_theta_maxwell}, {"m", g.m},
          {"h", rg.h},                {"dt", g.cfl * rg.h}};
}

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

// relative change, 0 when both vanish
double rel_change(double x0, double x1) {
  if (x0 == 0.0) return x1 == 0.0 ? 0.0 : kInf;
  return std::abs(x1 - x0) / std::abs(x0);
}

// --- scenario plumbing ------------------------------------------------------------

ev::GridSpec phys_grid(const ScenarioConfig& c) {
  auto g = c.grid;
  g.rstar_min *= c.M;
  g.rstar_max *= c.M;
  g.m = initial_m(c.initial);
  return g;
}

ev::RunConfig run_config(const ScenarioConfig& c) {
  ev::RunConfig rc;
  rc.T = c.T * c.M;
  rc.t0 = 0.0;
  rc.r_gap = c.r_gap;
  rc.sample_dt = c.sample_dt * c.M;
  return rc;
}

bool at_time(double t, double T) { return std::abs(t - T) <= 1e-9 * std::max(1.0, std::abs(T)); }

std::size_t nearest(const std::vector<double>& xs, double x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (std::abs(xs[i] - x) < std::abs(xs[best] - x)) best = i;
  return best;
}

// value recorded at the step closest to t
cplx probe_at(const std::vector<std::pair<double, cplx>>& rec, double t) {
  if (rec.empty()) return 0.0;
  const auto it = std::lower_bound(rec.begin(), rec.end(), t, [](const auto& p, double x) { return p.first < x; });
  if (it == rec.end()) return rec.back().second;
  if (it == rec.begin()) return it->second;
  return std::abs(it->first - t) < std::abs(std::prev(it)->first - t) ? it->second : std::prev(it)->second;
}

fields::AnalyticField initial_field(const KerrParams& kp, const ev::InitialData& d) {
  const Tortoise tort(kp);
  fields::AnalyticField F;
  F.kp = kp;
  F.m = d.m;
  F.f = [kp, tort, d](double r, double th) {
    const auto rp = radial_point_from_x(kp, r - kp.r_plus);
    return ev::boost_phi(d.maxwell(rp, tort.r_star(r), th), ev::pnv_boost_velocity(kp, rp, th));
  };
  return F;
}

fields::MaxwellSnapshot snapshot(const ev::MaxwellSolver& ms, const ev::MaxwellState& s) {
  const auto& kp = ms.params();
  fields::MaxwellSnapshot snap;
  snap.kp = kp;
  snap.m = ms.grid().m;
  snap.t = s.t;
  for (std::size_t i = 0; i < ms.n_r(); ++i) {
    const auto& rp = ms.radial().pt[i];
    snap.r.push_back(rp.r);
    snap.r_weight.push_back(ms.radial().weight[i] * rp.Delta / (rp.r * rp.r + kp.a * kp.a));
  }
  snap.theta = ms.theta();
  snap.theta_weight = ms.theta_weight();
  snap.v.resize(ms.size());
  for (std::size_t k = 0; k < ms.size(); ++k) snap.v[k] = ms.pnv(s, k);
  return snap;
}

struct Options {
  std::string config;
  std::string out_dir;
  std::optional<double> M, a, T, eps_dt2;
  std::optional<int> n_r;
  std::optional<unsigned> seed;
  bool allow_large_a = false;
  int jobs = 1;
  // subcommand specific
  std::string snapshot;
  double r_max = 100.0;
  double charge_tol = 1e-9;
  int hardy_n = 4096;
  double weaken = 0.0;
  std::string variant;
  std::optional<double> C_lower;
  std::string system = "fi";
  double min_order = 2.0;
  bool coulomb = false;
};

using Command = std::function<int(const ScenarioConfig&, const Options&, std::ostream&)>;

// --- subcommands ----------------------------------------------------------------

int evolve_fi(const ScenarioConfig& c, const Options&, std::ostream& out) {
  const auto kp = c.params();
  const auto g = phys_grid(c);
  const auto d = make_initial(kp, c.initial);
  auto rc = run_config(c);
  const auto rg = ev::make_radial_grid(kp, g);
  const auto basis = angular::make_basis(g.m, g.n_theta);
  const std::size_t nt = basis.theta.size();
  const std::size_t ip = nearest(rg.rstar, c.probe_rstar * c.M);
  const std::size_t jp = nearest(basis.theta, 0.5 * std::numbers::pi);
  std::vector<std::pair<double, cplx>> probe;
  ev::Observer obs;
  obs.fi = [&](const ev::ScalarState& s) { probe.emplace_back(s.t, s.ups[ip * nt + jp]); };
  const auto series = ev::evolve(kp, g, d, rc, obs);

  Csv csv({"t", "E_FI", "E_dt_ups", "E_Tchi_ups", "B_pm", "B_0", "B_20", "B_1", "ups_probe_re", "ups_probe_im"});
  double tchi_max = 0.0;
  for (const auto& s : series.samples) {
    const cplx u = probe_at(probe, s.t);
    csv.row({s.t, s.E_FI, s.E_dt_ups, s.E_Tchi_ups, s.B_pm, s.B_0, s.B_20, s.B_1, u.real(), u.imag()});
    tchi_max = std::max(tchi_max, s.E_Tchi_ups);
  }
  const auto& s0 = series.samples.front();
  const auto& sT = series.back();
  const auto dir = prepare(c);
  write_file(dir / "series.csv", csv.str());

  auto r = report_head("evolve-fi", c);
  r["grid"] = grid_json(g, rg);
  r["probe"] = {{"rstar", rg.rstar[ip]}, {"theta", basis.theta[jp]}};
  r["results"] = {{"samples", series.samples.size()},
                  {"E_FI_0", s0.E_FI},
                  {"E_FI_T", sT.E_FI},
                  {"E_dt_0", s0.E_dt_ups},
                  {"E_dt_T", sT.E_dt_ups},
                  {"E_dt_drift", rel_change(s0.E_dt_ups, sT.E_dt_ups)},
                  {"E_Tchi_max_over_initial", s0.E_Tchi_ups > 0.0 ? tchi_max / s0.E_Tchi_ups : 0.0},
                  {"B_0", sT.B_0},
                  {"B_20", sT.B_20},
                  {"B_1", sT.B_1}};
  write_file(dir / "report.json", dump(r));
  out << "evolve-fi: " << series.samples.size() << " samples to t = " << fmt(sT.t) << ", E_dt drift "
      << fmt(rel_change(s0.E_dt_ups, sT.E_dt_ups)) << "\n";
  return kPass;
}

int evolve_maxwell(const ScenarioConfig& c, const Options&, std::ostream& out) {
  if (!has_maxwell(c.initial)) throw ConfigError("/initial_data", "evolve-maxwell needs Maxwell initial data");
  const auto kp = c.params();
  const auto g = phys_grid(c);
  const auto d = make_initial(kp, c.initial);
  auto rc = run_config(c);
  rc.fi = false;
  rc.maxwell = true;
  const ev::MaxwellSolver ms(kp, g);
  const std::size_t ip = nearest(ms.radial().rstar, c.probe_rstar * c.M);
  const std::size_t jp = nearest(ms.theta(), 0.5 * std::numbers::pi);
  const double rp = ms.radial().pt[ip].r;
  std::vector<std::pair<double, cplx>> probe;
  std::optional<ev::MaxwellState> last;
  ev::Observer obs;
  obs.maxwell = [&](const ev::MaxwellState& s) {
    probe.emplace_back(s.t, fields::spin_components(kp, rp, ms.theta()[jp], ms.pnv(s, ms.index(ip, jp))).phi_0);
    if (at_time(s.t, rc.T)) last = s;
  };
  const auto series = ev::evolve(kp, g, d, rc, obs);
  if (!last) throw ev::EvolutionError("no state at the final time");

  Csv csv({"t", "E_F", "E_dt_F", "E_Tchi_F", "B_pm", "div_D", "div_B", "phi0_probe_re", "phi0_probe_im"});
  for (const auto& s : series.samples) {
    const cplx p = probe_at(probe, s.t);
    csv.row({s.t, s.E_F, s.E_dt_F, s.E_Tchi_F, s.B_pm, s.div_D, s.div_B, p.real(), p.imag()});
  }
  const auto dir = prepare(c);
  write_file(dir / "series.csv", csv.str());
  const auto snap = snapshot(ms, *last);
  fields::write_snapshot(snap, (dir / "final").string());
  const auto q = fields::charges(kp, snap.sphere(ip));

  const auto& s0 = series.samples.front();
  const auto& sT = series.back();
  auto r = report_head("evolve-maxwell", c);
  r["grid"] = grid_json(g, ms.radial());
  r["probe"] = {{"rstar", ms.radial().rstar[ip]}, {"theta", ms.theta()[jp]}};
  r["results"] = {{"samples", series.samples.size()},
                  {"E_F_0", s0.E_F},
                  {"E_F_T", sT.E_F},
                  {"E_dt_0", s0.E_dt_F},
                  {"E_dt_T", sT.E_dt_F},
                  {"E_dt_drift", rel_change(s0.E_dt_F, sT.E_dt_F)},
                  {"B_pm", sT.B_pm},
                  {"div_D_T", sT.div_D},
                  {"div_B_T", sT.div_B},
                  {"charge_at_probe", {q.q_E, q.q_B}},
                  {"snapshot", "final"}};
  write_file(dir / "report.json", dump(r));
  out << "evolve-maxwell: " << series.samples.size() << " samples to t = " << fmt(sT.t) << ", E_dt drift "
      << fmt(rel_change(s0.E_dt_F, sT.E_dt_F)) << ", div D " << fmt(sT.div_D) << "\n";
  return kPass;
}

int charge_decompose(const ScenarioConfig& c, const Options& o, std::ostream& out) {
  fields::MaxwellSnapshot s;
  std::string source;
  if (!o.snapshot.empty()) {
    try {
      s = fields::read_snapshot(o.snapshot);
    } catch (const std::exception& e) {
      throw IOError(e.what());
    }
    source = o.snapshot;
  } else {
    if (!has_maxwell(c.initial)) throw ConfigError("/initial_data", "charge-decompose needs Maxwell initial data");
    const auto kp = c.params();
    const auto F = initial_field(kp, make_initial(kp, c.initial));
    const auto rr = fields::radial_rule(kp.r_plus + 0.01 * kp.M, o.r_max * kp.M, 24, 8);
    s = fields::sample(F, rr, c.grid.n_theta_maxwell);
    source = "initial_data";
  }
  const auto dcmp = fields::charge_decompose(s);
  const double qabs = std::abs(dcmp.q.q());
  const bool ok = dcmp.q_spread <= o.charge_tol * std::max(1.0, qabs);
  const double e_in = fields::energy_maxwell(s), e_st = fields::energy_maxwell(dcmp.stationary),
               e_cf = fields::energy_maxwell(dcmp.charge_free);
  const auto dir = prepare(c);
  fields::write_snapshot(dcmp.stationary, (dir / "stationary").string());
  fields::write_snapshot(dcmp.charge_free, (dir / "charge_free").string());

  auto r = report_head("charge-decompose", c);
  r["source"] = source;
  r["results"] = {{"q", {dcmp.q.q_E, dcmp.q.q_B}},
                  {"q_spread", dcmp.q_spread},
                  {"charge_r_independent", ok},
                  {"E_input", e_in},
                  {"E_stationary", e_st},
                  {"E_charge_free", e_cf},
                  {"cross_term", s.fi.empty() ? json(nullptr)
                                              : json(std::abs(fields::inner_product(dcmp.stationary, dcmp.charge_free)))},
                  {"snapshots", {"stationary", "charge_free"}}};
  r["status"] = verdict(ok);
  write_file(dir / "report.json", dump(r));
  out << "charge-decompose: " << verdict(ok) << " q = (" << fmt(dcmp.q.q_E) << ", " << fmt(dcmp.q.q_B)
      << ") spread " << fmt(dcmp.q_spread) << "\n";
  return ok ? kPass : kFail;
}

int verify_hardy(const ScenarioConfig& c, const Options& o, std::ostream& out) {
  const auto kp = c.params();
  hardy::HardyProblem prob{kp};
  for (auto& v : prob.v_numerator) v -= o.weaken * std::abs(v);
  const double d = prob.d();
  const double x_min = 1e-4 * kp.M, x_max = 1e4 * kp.M;

  auto r = report_head("verify-hardy", c);
  r["weaken"] = o.weaken;
  r["v_numerator"] = prob.v_numerator;
  bool ok = true;
  json hyp;
  std::function<double(double)> W;
  try {
    const auto w = hardy::to_W(prob);
    W = [w, d](double x) { return w(x, d); };
    r["W"] = {{"X", w.X}, {"Y", w.Y}, {"Z", w.Z}, {"d", d}};
    try {
      const auto p = hardy::solve_parameters(w, d);
      const auto res = hardy::condition_residuals(p, w, d);
      double worst = 0.0;
      for (double x : res) worst = std::max(worst, std::abs(x));
      const bool cond = hardy::positivity_conditions_hold(p);
      const auto scan = hardy::positive_solution_scan(p, w, d, x_min, x_max, 1201);
      hyp = {{"alpha", p.alpha},           {"beta", p.beta},
             {"a", p.a},                   {"b", p.b},
             {"c", p.c},                   {"alpha_integer", p.alpha_integer},
             {"condition_residuals", res}, {"conditions_hold", cond},
             {"min_v", scan.min_v},        {"argmin_v", scan.argmin_x},
             {"max_relative_residual", scan.max_relative_residual}};
      ok = ok && worst < 1e-10 && cond && scan.positive && scan.min_v > 0.0;
    } catch (const std::domain_error& e) {
      hyp = {{"error", e.what()}};
      ok = false;
    }
  } catch (const hardy::StructureError& e) {
    // rotating case: no hypergeometric form, positivity from the Rayleigh quotient alone
    W = [prob](double x) { return prob.transformed_potential(x); };
    hyp = {{"not_applicable", e.what()}};
  }
  const auto ray = hardy::rayleigh_min(W, x_min, x_max, o.hardy_n);
  const double scaled = ray.min_eigenvalue * kp.M * kp.M;
  ok = ok && scaled >= -1e-6;
  r["hypergeometric"] = hyp;
  r["rayleigh"] = {{"n", o.hardy_n},
                   {"x_min", x_min},
                   {"x_max", x_max},
                   {"min_eigenvalue", ray.min_eigenvalue},
                   {"min_eigenvalue_M2", scaled},
                   {"lower_bracket", ray.lower_bracket}};
  r["status"] = verdict(ok);
  const auto dir = prepare(c);
  write_file(dir / "report.json", dump(r));
  out << "verify-hardy: " << verdict(ok);
  if (hyp.contains("alpha")) out << " alpha=" << fmt(hyp["alpha"].get<double>()) << " b=" << fmt(hyp["b"].get<double>());
  out << " min_eigenvalue=" << fmt(scaled) << "\n";
  return ok ? kPass : kFail;
}

morawetz::Variant parse_variant(const std::string& s) {
  if (s == "oversimplified") return morawetz::Variant::oversimplified;
  if (s == "refined") return morawetz::Variant::refined;
  if (s == "refined_plain") return morawetz::Variant::refined_plain;
  if (s == "basic") return morawetz::Variant::basic;
  throw ConfigError("/verify/multiplier_variant", "unknown variant '" + s + "'");
}

struct PointMargins {
  double min_A = kInf, min_U = kInf, min_rtp = kInf, min_rtt = kInf;
  int directions = 0, failures = 0;
  bool positive() const { return failures == 0 && min_A > 0.0 && min_U >= -1e-12 && min_rtp > 0.0 && min_rtt > 0.0; }
};

PointMargins scan_point(const morawetz::MultiplierSpec& spec, const KerrParams& kp, double eps,
                        const std::vector<double>& grid, Csv* surface, json* dirs) {
  PointMargins pm;
  const auto directions = morawetz::unit_directions(eps);
  pm.directions = int(directions.size());
  for (std::size_t n = 0; n < directions.size(); ++n) {
    const auto& k = directions[n];
    try {
      const auto p = morawetz::positivity_scan(spec, kp, k, grid);
      pm.min_A = std::min(pm.min_A, p.min_A_ratio);
      pm.min_U = std::min(pm.min_U, p.min_U);
      pm.min_rtp = std::min(pm.min_rtp, p.min_rtp_ratio);
      pm.min_rtt = std::min(pm.min_rtt, p.min_rtt_ratio);
      if (surface) {
        const morawetz::Multiplier m(spec, kp, k);
        const auto v = morawetz::scaled_vector(k);
        for (double x : grid) {
          const auto t = m.simplified(x);
          surface->row({double(n), v[0], v[1], v[2], p.r_root, x, t.A, t.U, t.V});
        }
      }
      if (dirs)
        dirs->push_back({{"k", {k.e, k.ell_z, k.Q}},
                         {"r_root", p.r_root},
                         {"min_A_ratio", p.min_A_ratio},
                         {"argmin_A", p.argmin_A},
                         {"min_U", p.min_U},
                         {"argmin_U", p.argmin_U}});
    } catch (const morawetz::RootError& e) {
      ++pm.failures;
      if (dirs) dirs->push_back({{"k", {k.e, k.ell_z, k.Q}}, {"error", e.what()}});
    }
  }
  return pm;
}

json margins_json(const PointMargins& m) {
  return {{"directions", m.directions}, {"root_failures", m.failures}, {"min_A_ratio", m.min_A},
          {"min_U", m.min_U},           {"min_rtp_ratio", m.min_rtp}, {"min_rtt_ratio", m.min_rtt},
          {"positive", m.positive()}};
}

int verify_multiplier(const ScenarioConfig& c, const Options& o, std::ostream& out) {
  const auto kp = c.params();
  const std::string vname = o.variant.empty() ? c.variant : o.variant;
  const auto variant = parse_variant(vname);
  std::vector<double> grid;
  for (int i = 0; i < 600; ++i) grid.push_back(kp.r_plus + kp.M * std::pow(10.0, -3.0 + 6.0 * i / 599.0));
  auto r = report_head("verify-multiplier", c);
  r["variant"] = vname;
  const auto dir = prepare(c);

  if (variant == morawetz::Variant::oversimplified) {
    const auto rep = morawetz::oversimplified_margin(kp, 1.0, grid);
    const bool ok = rep.radial_identity_residual < 1e-10;
    r["results"] = {{"min_ratio", rep.min_ratio},
                    {"D_required", rep.D_required},
                    {"radial_identity_residual", rep.radial_identity_residual}};
    Csv csv({"r", "f"});
    for (double x : grid) csv.row({x, morawetz::oversimplified_f(kp, x)});
    write_file(dir / "margins.csv", csv.str());
    r["status"] = verdict(ok);
    write_file(dir / "report.json", dump(r));
    out << "verify-multiplier: " << verdict(ok) << " oversimplified min ratio " << fmt(rep.min_ratio) << "\n";
    return ok ? kPass : kFail;
  }

  const double eps = c.eps_dt2;
  if (eps == 0.0 && kp.a != 0.0) throw ConfigError("/eps_dt2", "must be positive when a != 0");
  const morawetz::MultiplierSpec spec{variant, c.r_gap};
  Csv surface({"direction", "eps_e", "ell_z", "sqrt_Q", "r_root", "r", "A", "U", "V"});
  json dirs = json::array();
  const auto primary = scan_point(spec, kp, eps, grid, &surface, &dirs);
  const auto schw = scan_point(spec, KerrParams(kp.M, 0.0), 0.0, grid, nullptr, nullptr);

  // default envelope; negative margins are reported, not failed
  Csv env({"a", "eps_dt2", "s", "min_A_ratio", "min_U", "min_rtp_ratio", "min_rtt_ratio", "root_failures"});
  double s_pos = 0.0, s_neg = kInf, C_rtt = 0.0;
  for (double a : {0.0, 0.025, 0.05, 0.075, 0.1})
    for (double e : {0.01, 0.02, 0.05, 0.1, 0.2}) {
      const auto m = scan_point(spec, KerrParams(kp.M, a * kp.M), e, grid, nullptr, nullptr);
      const double s = std::max(a / e, e);
      env.row({a, e, s, m.min_A, m.min_U, m.min_rtp, m.min_rtt, double(m.failures)});
      if (m.positive()) {
        s_pos = std::max(s_pos, s);
        C_rtt = std::max(C_rtt, (1.0 - m.min_rtt) / s);
      } else {
        s_neg = std::min(s_neg, s);
      }
    }

  // general vs factored coefficients at random samples
  std::mt19937 rng(c.seed);
  std::uniform_real_distribution<double> ua(0.0, 0.1), ue(0.01, 0.2), uk(-2.0, 2.0), ux(-2.0, 1.7);
  double worst = 0.0;
  int used = 0, skipped = 0;
  for (int i = 0; i < c.identity_samples; ++i) {
    const KerrParams kq(kp.M, kp.M * ua(rng));
    const morawetz::SpectralPoint k{uk(rng) / kp.M, uk(rng), std::abs(uk(rng)), ue(rng)};
    const double x = kq.r_plus + kp.M * std::pow(10.0, ux(rng));
    try {
      const morawetz::Multiplier m(spec, kq, k);
      const auto g = m.general(x), s = m.simplified(x);
      worst = std::max({worst, std::abs(g.A - s.A) / g.scale, std::abs(g.U - s.U) / g.scale,
                        std::abs(g.V - s.V) / g.scale});
      ++used;
    } catch (const morawetz::RootError&) {
      ++skipped;
    }
  }

  const bool ok = worst < 1e-10 && schw.positive();
  r["results"] = {{"eps_dt2", eps},
                  {"primary", margins_json(primary)},
                  {"schwarzschild", margins_json(schw)},
                  {"envelope", {{"largest_positive_s", s_pos}, {"smallest_negative_s", s_neg}, {"C_rtt", C_rtt}}},
                  {"identity_samples", used},
                  {"identity_skipped", skipped},
                  {"identity_worst", worst},
                  {"per_direction", dirs}};
  r["status"] = verdict(ok);
  write_file(dir / "margins.csv", surface.str());
  write_file(dir / "envelope.csv", env.str());
  write_file(dir / "report.json", dump(r));
  out << "verify-multiplier: " << verdict(ok) << " identity " << fmt(worst) << ", min A ratio " << fmt(primary.min_A)
      << ", min U " << fmt(primary.min_U) << ", margins positive up to s = " << fmt(s_pos) << "\n";
  return ok ? kPass : kFail;
}

int spectral_check(const ScenarioConfig& c, const Options& o, std::ostream& out) {
  const auto kp = c.params();
  const auto g = phys_grid(c);
  const auto d = make_initial(kp, c.initial);
  const double T = c.T * kp.M;
  const std::optional<double> C_given = o.C_lower ? o.C_lower : c.C_lower;
  auto rc = run_config(c);
  rc.t0 = -kp.M;
  rc.T = T + kp.M;
  const bool coupled = c.lower_bound && has_maxwell(c.initial);
  rc.maxwell = coupled;

  const ev::FISolver fs(kp, g);
  spectral::TimeSeries ts;
  ev::Observer obs;
  obs.fi = spectral::recorder(fs, c.spectral_stride, ts);
  std::vector<double> P;
  std::optional<ev::MaxwellSolver> ms;
  if (coupled) {
    ms.emplace(kp, g);
    obs.maxwell = spectral::maxwell_weight(*ms, T, c.spectral_stride, P);
  }
  ev::evolve(kp, g, d, rc, obs);

  const auto w = spectral::window_fields(kp, fs.radial(), fs.basis(), ts, T);
  const auto tu = spectral::transform(kp, fs.basis(), w.u, ts.t0, ts.dt);
  const auto phys = spectral::physical_norm2(fs.basis(), w.u, ts.dt);
  const auto spec = spectral::spectral_norm2(tu);
  double parseval = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < phys.size(); ++i) {
    parseval = std::max(parseval, std::abs(phys[i] - spec[i]));
    scale = std::max(scale, phys[i]);
  }
  parseval = scale > 0.0 ? parseval / scale : parseval;
  const auto tj = spectral::transform_like(tu, fs.basis(), w.j_chi);
  const auto ti = spectral::transform_like(tu, fs.basis(), w.j_im);
  const std::size_t n = fs.n_r();
  const double residual = spectral::spectral_fi_residual(kp, fs.radial(), tu, tj, ti, n / 8, n - n / 8).relative;

  // Q at a = 0 against l(l+1) - m^2, l <= 10
  const int am = std::abs(g.m);
  double q_err = 0.0;
  if (am <= 10) {
    const auto e0 = spectral::spheroidal_eigs(0.0, g.m, 0.0, 16);
    for (int l = am; l <= 10; ++l)
      q_err = std::max(q_err, std::abs(e0.Q[std::size_t(l - am)] - double(l * (l + 1) - g.m * g.m)));
  }

  const auto dir = prepare(c);
  {
    std::ostringstream os;
    os << std::setprecision(17);
    spectral::write_eig_table(os, tu);
    write_file(dir / "eigs.csv", os.str());
  }
  auto r = report_head("spectral-check", c);
  r["grid"] = grid_json(g, fs.radial());
  json res = {{"time_samples", ts.size()},
              {"dt", ts.dt},
              {"de", tu.de},
              {"parseval", parseval},
              {"tail_fraction", tu.tail_fraction},
              {"aliasing", tu.aliasing},
              {"fi_residual", residual},
              {"Q_a0_error", q_err}};
  bool ok = parseval < 1e-10 && q_err < 1e-8;
  if (c.lower_bound) {
    const auto lb = spectral::spectral_lower_bound_check(kp, tu, P);
    const double C = C_given ? *C_given : (std::isfinite(lb.best_C) ? lb.best_C : 0.0);
    const double mr = lb.min_relative(C, kp.a, kp.M);
    res["lower_bound"] = {{"C", C},
                          {"C_given", C_given.has_value()},
                          {"min_relative_margin", mr},
                          {"best_C", lb.best_C},
                          {"maxwell_weight", coupled}};
    ok = ok && (C_given ? mr >= -1e-9 : std::isfinite(lb.best_C));
    std::ostringstream os;
    os << std::setprecision(17);
    spectral::write_margin_table(os, fs.radial(), lb, C, kp);
    write_file(dir / "margins.csv", os.str());
  }
  r["results"] = res;
  r["status"] = verdict(ok);
  write_file(dir / "report.json", dump(r));
  out << "spectral-check: " << verdict(ok) << " parseval " << fmt(parseval) << ", Q(a=0) " << fmt(q_err);
  if (res.contains("lower_bound")) out << ", min margin " << fmt(res["lower_bound"]["min_relative_margin"].get<double>());
  out << "\n";
  return ok ? kPass : kFail;
}

json estimate_json(const estimates::Estimate& e) {
  json terms;
  for (const auto& t : e.rhs_terms) terms[t.name] = t.value;
  return {{"lhs", e.lhs}, {"rhs_terms", terms}, {"rhs", e.rhs}, {"C", e.C}, {"vacuous", e.vacuous}};
}

const char* const kIds[5] = {"I", "II", "III", "IV", "V"};

json trend_json(const estimates::Trend& t) {
  json j;
  j["labels"] = t.labels;
  for (int i = 0; i < 5; ++i) j[kIds[i]] = t.spread[std::size_t(i)];
  j["energy_bound"] = t.energy_bound;
  j["morawetz"] = t.morawetz;
  j["worst"] = t.worst();
  return j;
}

int core_estimates(const ScenarioConfig& c, const Options& o, std::ostream& out) {
  if (!has_maxwell(c.initial)) throw ConfigError("/initial_data", "core estimates need Maxwell initial data");
  const auto kp = c.params();
  const auto g = phys_grid(c);
  const auto d = make_initial(kp, c.initial);
  const double T = c.T * kp.M;
  auto rc = run_config(c);
  rc.maxwell = true;

  json runs = json::array();
  auto run = [&](const ev::GridSpec& gg, double TT, const std::string& label) {
    auto r2 = rc;
    r2.T = TT;
    auto s = ev::evolve(kp, gg, d, r2);
    runs.push_back({{"label", label}, {"n_r", gg.n_r}, {"rstar_min", gg.rstar_min}, {"rstar_max", gg.rstar_max}, {"T", TT}});
    return std::pair{s, estimates::evaluate_core_estimates(kp, s, TT)};
  };
  const auto [series, base] = run(g, T, "base");
  std::optional<estimates::Trend> t_ref, t_win;
  if (c.refinement) t_ref = estimates::trend({base, run(refined(g, 1), T, "refined").second}, {"base", "refined"});
  if (c.window_doubling)
    t_win = estimates::trend({base, run(widened(g, T), 2.0 * T, "doubled").second}, {"base", "doubled"});

  Csv csv({"t", "E_F", "E_FI", "E_dt_ups", "E_Tchi_ups", "E_dt_F", "E_Tchi_F", "B_pm", "B_0", "B_20", "B_1"});
  double tchi = 0.0;
  for (const auto& s : series.samples) {
    csv.row({s.t, s.E_F, s.E_FI, s.E_dt_ups, s.E_Tchi_ups, s.E_dt_F, s.E_Tchi_F, s.B_pm, s.B_0, s.B_20, s.B_1});
    tchi = std::max(tchi, s.E_Tchi_ups);
  }
  const double e0 = series.samples.front().E_Tchi_ups;

  bool ok = true;
  json est;
  for (int i = 0; i < 5; ++i) {
    const auto& e = base.core[std::size_t(i)];
    est[kIds[i]] = estimate_json(e);
    ok = ok && (e.vacuous || std::isfinite(e.C));
  }
  est["energy_bound"] = estimate_json(base.energy_bound);
  est["morawetz"] = estimate_json(base.morawetz);
  json trends;
  if (t_ref) {
    trends["refinement"] = trend_json(*t_ref);
    ok = ok && t_ref->worst() < 0.25;
  }
  if (t_win) {
    trends["window_doubling"] = trend_json(*t_win);
    ok = ok && t_win->worst() < 0.25;
  }

  auto r = report_head("core-estimates", c);
  r["grid"] = grid_json(g, ev::make_radial_grid(kp, g));
  r["estimates"] = est;
  r["trends"] = trends;
  r["runs"] = runs;
  r["E_Tchi_max_over_initial"] = e0 > 0.0 ? tchi / e0 : 0.0;
  if (o.coulomb) {
    const auto cc = estimates::coulomb_convergence_check(kp, g, d, rc, 10.0 * kp.M);
    r["coulomb"] = {{"q", {cc.q.real(), cc.q.imag()}},
                    {"integral_T", cc.integral.back()},
                    {"initial_energy", cc.initial_energy},
                    {"plateau", cc.plateau()}};
  }
  r["status"] = verdict(ok);
  const auto dir = prepare(c);
  write_file(dir / "series.csv", csv.str());
  write_file(dir / "report.json", dump(r));
  out << "core-estimates: " << verdict(ok);
  for (int i = 0; i < 5; ++i) out << " C_" << kIds[i] << "=" << fmt(base.core[std::size_t(i)].C);
  if (t_ref) out << " refinement spread " << fmt(t_ref->worst());
  if (t_win) out << " window spread " << fmt(t_win->worst());
  out << "\n";
  return ok ? kPass : kFail;
}

int convergence(const ScenarioConfig& c, const Options& o, std::ostream& out) {
  if (o.system != "fi" && o.system != "maxwell") throw ConfigError("--system", "expected fi or maxwell");
  const bool mx = o.system == "maxwell";
  if (mx && !has_maxwell(c.initial)) throw ConfigError("/initial_data", "Maxwell convergence needs Maxwell data");
  const auto kp = c.params();
  const auto g0 = phys_grid(c);
  const auto d = make_initial(kp, c.initial);
  auto rc = run_config(c);
  rc.fi = !mx;
  rc.maxwell = mx;
  rc.sample_dt = rc.T;

  // final fields, one flat vector per resolution, plus weights on the coarse grid
  std::vector<std::vector<cplx>> finals;
  std::vector<double> drift;
  std::vector<ev::GridSpec> grids;
  for (int k = 0; k < 3; ++k) {
    const auto g = refined(g0, k);
    std::vector<cplx> last;
    ev::Observer obs;
    if (mx) {
      obs.maxwell = [&](const ev::MaxwellState& s) {
        if (!at_time(s.t, rc.T)) return;
        last.clear();
        for (int q = 0; q < 3; ++q) {
          last.insert(last.end(), s.D[q].begin(), s.D[q].end());
          last.insert(last.end(), s.B[q].begin(), s.B[q].end());
        }
      };
    } else {
      obs.fi = [&](const ev::ScalarState& s) {
        if (at_time(s.t, rc.T)) last = s.ups;
      };
    }
    const auto s = ev::evolve(kp, g, d, rc, obs);
    if (last.empty()) throw ev::EvolutionError("no state at the final time");
    const auto& a0 = s.samples.front();
    const auto& a1 = s.back();
    drift.push_back(mx ? rel_change(a0.E_dt_F, a1.E_dt_F) : rel_change(a0.E_dt_ups, a1.E_dt_ups));
    finals.push_back(std::move(last));
    grids.push_back(g);
  }

  const auto rg0 = ev::make_radial_grid(kp, g0);
  const std::size_t n0 = rg0.rstar.size();
  const std::size_t per_node = finals[0].size() / n0;  // components x theta, node-major within each block
  auto diff = [&](int k) {
    // coarse node i sits at fine index i * 2^k
    const std::size_t sa = std::size_t(1) << k, sb = sa << 1;
    const std::size_t na = finals[k].size() / per_node, nb = finals[k + 1].size() / per_node;
    double sum = 0.0;
    const std::size_t blocks = mx ? 6 : 1;
    const std::size_t nth = per_node / blocks;
    for (std::size_t b = 0; b < blocks; ++b)
      for (std::size_t i = 0; i < n0; ++i)
        for (std::size_t j = 0; j < nth; ++j) {
          const cplx ua = finals[k][b * na * nth + (i * sa) * nth + j];
          const cplx ub = finals[k + 1][b * nb * nth + (i * sb) * nth + j];
          sum += rg0.weight[i] * std::norm(ua - ub);
        }
    return std::sqrt(sum);
  };
  const double e0 = diff(0), e1 = diff(1);
  const double order = (e0 > 0.0 && e1 > 0.0) ? std::log2(e0 / e1) : std::numeric_limits<double>::quiet_NaN();
  const bool ok = std::isfinite(order) && order >= o.min_order;

  Csv csv({"n_r", "h", "diff_to_next", "energy_drift"});
  for (int k = 0; k < 3; ++k) {
    const double h = (grids[std::size_t(k)].rstar_max - grids[std::size_t(k)].rstar_min) / (grids[std::size_t(k)].n_r - 1);
    csv.row({double(grids[std::size_t(k)].n_r), h, k < 2 ? (k == 0 ? e0 : e1) : std::numeric_limits<double>::quiet_NaN(),
             drift[std::size_t(k)]});
  }
  auto r = report_head("convergence", c);
  r["system"] = o.system;
  r["resolutions"] = {grids[0].n_r, grids[1].n_r, grids[2].n_r};
  r["differences"] = {e0, e1};
  r["order"] = order;
  r["energy_drift"] = drift;
  r["min_order"] = o.min_order;
  r["status"] = verdict(ok);
  const auto dir = prepare(c);
  write_file(dir / "convergence.csv", csv.str());
  write_file(dir / "report.json", dump(r));
  out << "convergence: " << verdict(ok) << " " << o.system << " order " << fmt(order) << " (differences " << fmt(e0)
      << ", " << fmt(e1) << ")\n";
  return ok ? kPass : kFail;
}

// --- driver -------------------------------------------------------------------------

int guarded(const Command& cmd, const ScenarioConfig& c, const Options& o, std::ostream& out, std::ostream& err) {
  try {
    return cmd(c, o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IOError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIO;
  } catch (const fsys::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIO;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
}

int run_scan(const Command& cmd, const ScenarioConfig& c, const Options& o, int jobs, std::ostream& out,
             std::ostream& err) {
  const std::size_t n = c.scan.values.size();
  std::vector<std::string> outs(n), errs(n);
  std::vector<int> codes(n, kPass);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      ScenarioConfig ck = c;
      ck.scan = {};
      const double v = c.scan.values[k];
      if (c.scan.parameter == "a") ck.a = v;
      if (c.scan.parameter == "T") ck.T = v;
      if (c.scan.parameter == "n_r") ck.grid.n_r = int(v);
      ck.output_dir = (fsys::path(c.output_dir) / (c.scan.parameter + "_" + std::to_string(k))).string();
      std::ostringstream os, es;
      try {
        validate(ck);
        codes[k] = guarded(cmd, ck, o, os, es);
      } catch (const ConfigError& e) {
        es << "config error: " << e.what() << "\n";
        codes[k] = kConfig;
      }
      outs[k] = os.str();
      errs[k] = es.str();
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < std::max(1, jobs); ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  int code = kPass;
  for (std::size_t k = 0; k < n; ++k) {
    out << "[" << c.scan.parameter << " = " << fmt(c.scan.values[k]) << "] " << outs[k];
    err << errs[k];
    code = std::max(code, codes[k]);
  }
  return code;
}

}  // namespace

// --- public ------------------------------------------------------------------------

ScenarioConfig::ScenarioConfig() {
  grid.rstar_min = -30.0;
  grid.rstar_max = 70.0;
  grid.n_r = 512;
  grid.n_theta = 8;
  grid.n_theta_maxwell = 16;
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0.0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string dump(const json& j, int indent) {
  std::string o;
  write_json(o, j, indent, 0);
  if (indent >= 0) o += '\n';
  return o;
}

int initial_m(const InitialSpec& s) {
  if (s.type == "mixed") return s.components.empty() ? 0 : initial_m(s.components.front());
  return s.type == "coulomb" ? 0 : s.m;
}

bool has_maxwell(const InitialSpec& s) {
  if (s.type == "mixed")
    return std::all_of(s.components.begin(), s.components.end(), [](const auto& x) { return has_maxwell(x); });
  if (s.type == "zero") return s.m == 0;
  if (s.type == "pulse") return s.field == "maxwell";
  return true;
}

ev::InitialData make_initial(const KerrParams& kp, const InitialSpec& s) {
  const double M = kp.M;
  if (s.type == "zero")
    return s.m == 0 ? ev::curl_pulse(kp, 20.0 * M, 3.0 * M, 1, 0.0)
                    : ev::fi_pulse(kp, 20.0 * M, 3.0 * M, std::abs(s.m), s.m, 0.0);
  if (s.type == "coulomb") return ev::coulomb_data(kp, cplx(s.q_re, s.q_im) * M);
  if (s.type == "pulse")
    return s.field == "maxwell" ? ev::curl_pulse(kp, s.center * M, s.width * M, s.ell, s.amplitude)
                                : ev::fi_pulse(kp, s.center * M, s.width * M, s.ell, s.m, s.amplitude);
  if (s.components.empty()) throw ConfigError("/initial_data/components", "empty");
  auto d = make_initial(kp, s.components.front());
  for (std::size_t i = 1; i < s.components.size(); ++i) d = ev::sum(d, make_initial(kp, s.components[i]));
  return d;
}

ev::GridSpec widened(const ev::GridSpec& g, double by) {
  auto w = g;
  const double h = (g.rstar_max - g.rstar_min) / double(g.n_r - 1);
  const int extra = int(std::lround(by / h));
  w.rstar_min -= extra * h;
  w.rstar_max += extra * h;
  w.n_r += 2 * extra;
  return w;
}

ev::GridSpec refined(const ev::GridSpec& g, int k) {
  auto r = g;
  r.n_r = (g.n_r - 1) * (1 << k) + 1;
  return r;
}

ScenarioConfig parse_config(const json& j) {
  ScenarioConfig c;
  Obj root(j, "");
  const json* sv = root.get("schema_version");
  if (!sv) throw ConfigError("/schema_version", "missing");
  if (!sv->is_number_integer() || sv->get<long long>() != kSchemaVersion)
    throw ConfigError("/schema_version", "unsupported, expected " + std::to_string(kSchemaVersion));
  if (const json* g = root.get("geometry")) {
    Obj o(*g, "/geometry");
    c.M = o.number("M", 1.0, 0.0, kInf, true);
    c.a = o.number("a", 0.0, -1.0, 1.0);
    c.allow_large_a = o.boolean("allow_large_a", false);
    o.done();
  }
  if (const json* g = root.get("grid")) {
    Obj o(*g, "/grid");
    c.grid.rstar_min = o.number("rstar_min", c.grid.rstar_min);
    c.grid.rstar_max = o.number("rstar_max", c.grid.rstar_max);
    c.grid.n_r = o.integer("n_r", c.grid.n_r, 16, 1 << 20);
    c.grid.n_theta = o.integer("n_theta", c.grid.n_theta, 1, 64);
    c.grid.n_theta_maxwell = o.integer("n_theta_maxwell", c.grid.n_theta_maxwell, 4, 512);
    c.grid.cfl = o.number("cfl", c.grid.cfl, 0.0, 1.0, true);
    c.grid.dissipation = o.number("dissipation", c.grid.dissipation, 0.0, 1.0);
    c.grid.dissipation_theta = o.number("dissipation_theta", c.grid.dissipation_theta, 0.0, 1.0);
    o.done();
    if (!(c.grid.rstar_max > c.grid.rstar_min)) throw ConfigError("/grid/rstar_max", "must exceed rstar_min");
  }
  if (const json* d = root.get("initial_data")) c.initial = parse_initial(*d, "/initial_data");
  c.T = root.number("T", c.T, 0.0, kInf, true);
  c.r_gap = root.number("r_gap", c.r_gap, 0.0, 1.0, true);
  c.eps_dt2 = root.number("eps_dt2", c.eps_dt2, 0.0, 1.0);
  c.sample_dt = root.number("sample_dt", c.sample_dt, 0.0, kInf, true);
  c.probe_rstar = root.number("probe_rstar", c.probe_rstar);
  c.output_dir = root.string("output_dir", c.output_dir);
  c.seed = unsigned(root.integer("seed", int(c.seed), 0, std::numeric_limits<int>::max()));
  if (const json* v = root.get("verify")) {
    Obj o(*v, "/verify");
    c.refinement = o.boolean("refinement", c.refinement);
    c.window_doubling = o.boolean("window_doubling", c.window_doubling);
    c.lower_bound = o.boolean("lower_bound", c.lower_bound);
    c.identity_samples = o.integer("identity_samples", c.identity_samples, 1, 10000000);
    c.variant = o.string("multiplier_variant", c.variant, {"oversimplified", "basic", "refined", "refined_plain"});
    if (const json* v = o.get("C_lower"); v && !v->is_null()) c.C_lower = o.number("C_lower", 0.0, 0.0);
    c.spectral_stride = o.integer("spectral_stride", c.spectral_stride, 1, 1000);
    o.done();
  }
  if (const json* s = root.get("scan")) {
    Obj o(*s, "/scan");
    if (!o.get("parameter")) throw ConfigError("/scan/parameter", "missing");
    c.scan.parameter = o.string("parameter", "", {"a", "T", "n_r"});
    const json* v = o.get("values");
    if (!v || !v->is_array() || v->empty()) throw ConfigError("/scan/values", "expected a non-empty array");
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) throw ConfigError("/scan/values/" + std::to_string(i), "expected a number");
      c.scan.values.push_back((*v)[i].get<double>());
    }
    o.done();
  }
  root.done();
  validate(c);
  return c;
}

void validate(const ScenarioConfig& c) {
  if (!(c.M > 0.0) || !std::isfinite(c.M)) throw ConfigError("/geometry/M", "must be positive");
  if (!(std::abs(c.a) < 1.0)) throw ConfigError("/geometry/a", "|a| must be below M");
  if (std::abs(c.a) > 0.1 && !c.allow_large_a)
    throw ConfigError("/geometry/a", "|a| = " + fmt(std::abs(c.a)) + " M exceeds 0.1 M; set allow_large_a to override");
  if (c.grid.n_r < 16) throw ConfigError("/grid/n_r", "at least 16 nodes");
  if (!(c.T > 0.0)) throw ConfigError("/T", "must be positive");
  if (std::abs(initial_m(c.initial)) + c.grid.n_theta > 80) throw ConfigError("/grid/n_theta", "too many modes");
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("", "cannot open config " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    // message carries line and column
    throw ConfigError("", path + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ScenarioConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["geometry"] = {{"M", c.M}, {"a", c.a}, {"allow_large_a", c.allow_large_a}};
  j["grid"] = {{"rstar_min", c.grid.rstar_min},
               {"rstar_max", c.grid.rstar_max},
               {"n_r", c.grid.n_r},
               {"n_theta", c.grid.n_theta},
               {"n_theta_maxwell", c.grid.n_theta_maxwell},
               {"cfl", c.grid.cfl},
               {"dissipation", c.grid.dissipation},
               {"dissipation_theta", c.grid.dissipation_theta}};
  j["initial_data"] = initial_json(c.initial);
  j["T"] = c.T;
  j["r_gap"] = c.r_gap;
  j["eps_dt2"] = c.eps_dt2;
  j["sample_dt"] = c.sample_dt;
  j["probe_rstar"] = c.probe_rstar;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["verify"] = {{"refinement", c.refinement},
                 {"window_doubling", c.window_doubling},
                 {"lower_bound", c.lower_bound},
                 {"identity_samples", c.identity_samples},
                 {"multiplier_variant", c.variant},
                 {"C_lower", c.C_lower ? json(*c.C_lower) : json(nullptr)},
                 {"spectral_stride", c.spectral_stride}};
  if (!c.scan.parameter.empty()) j["scan"] = {{"parameter", c.scan.parameter}, {"values", c.scan.values}};
  return j;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"kerrlab: Maxwell and Fackerell-Ipser fields on slowly rotating Kerr"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  double M = 0.0, a = 0.0, T = 0.0, eps = 0.0;
  int n_r = 0;
  unsigned seed = 0;
  auto* oM = app.add_option("--M", M, "mass");
  auto* oa = app.add_option("--a", a, "spin, units of M");
  auto* oT = app.add_option("--T", T, "final time, units of M");
  auto* on = app.add_option("--n-r", n_r, "radial nodes");
  auto* oe = app.add_option("--eps-dt2", eps, "weight of e^2 in |k|_eps");
  auto* os = app.add_option("--seed", seed, "random seed");
  app.add_option("--config", o.config, "scenario JSON");
  app.add_option("--out", o.out_dir, "output directory");
  app.add_flag("--allow-large-a", o.allow_large_a, "accept |a| > 0.1 M");
  app.add_option("--jobs", o.jobs, "parallel workers for scans")->check(CLI::Range(1, 256));

  std::map<std::string, Command> table;
  auto add = [&](const std::string& name, const std::string& help, Command cmd) {
    table[name] = std::move(cmd);
    return app.add_subcommand(name, help);
  };
  add("evolve-fi", "evolve the Fackerell-Ipser scalar, write series.csv and report.json", evolve_fi);
  add("evolve-maxwell", "evolve Maxwell's equations, write series.csv, report.json and a final snapshot",
      evolve_maxwell);
  auto* cd = add("charge-decompose", "split a snapshot into Coulomb and charge-free parts", charge_decompose);
  cd->add_option("--snapshot", o.snapshot, "snapshot prefix (prefix.json + prefix.bin)");
  cd->add_option("--r-max", o.r_max, "outer radius when sampling initial data, units of M");
  cd->add_option("--tol", o.charge_tol, "allowed spread of q over the radial nodes, relative to max(1, |q|)");
  auto* vh = add("verify-hardy", "hypergeometric positive solution and Rayleigh minimum", verify_hardy);
  vh->add_option("--n", o.hardy_n, "interior nodes")->check(CLI::Range(16, 1 << 20));
  vh->add_option("--weaken", o.weaken, "move each potential coefficient down by this fraction");
  auto* vm = add("verify-multiplier", "multiplier coefficient identities and positivity margins", verify_multiplier);
  vm->add_option("--variant", o.variant, "oversimplified | basic | refined | refined_plain");
  auto* sc = add("spectral-check", "windowed transform, Parseval, eigenvalues and lower-bound margins", spectral_check);
  double C_lower = 0.0;
  auto* oc = sc->add_option("--C", C_lower, "constant in the lower bound");
  auto* ce = add("core-estimates", "empirical constants of the core estimates with trends", core_estimates);
  ce->add_flag("--coulomb", o.coulomb, "also run the Coulomb convergence integral");
  auto* cv = add("convergence", "three-resolution self-convergence order", convergence);
  cv->add_option("--system", o.system, "fi | maxwell");
  cv->add_option("--min-order", o.min_order, "pass threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kUsage;
  }
  if (*oM) o.M = M;
  if (*oa) o.a = a;
  if (*oT) o.T = T;
  if (*on) o.n_r = n_r;
  if (*oe) o.eps_dt2 = eps;
  if (*os) o.seed = seed;
  if (*oc) o.C_lower = C_lower;

  std::string name;
  for (const auto* sub : app.get_subcommands()) name = sub->get_name();
  const Command& cmd = table.at(name);

  ScenarioConfig c;
  try {
    if (!o.config.empty()) c = load_config(o.config);
    if (o.M) c.M = *o.M;
    if (o.a) c.a = *o.a;
    if (o.T) c.T = *o.T;
    if (o.n_r) c.grid.n_r = *o.n_r;
    if (o.eps_dt2) c.eps_dt2 = *o.eps_dt2;
    if (o.seed) c.seed = *o.seed;
    if (o.allow_large_a) c.allow_large_a = true;
    if (!o.out_dir.empty()) c.output_dir = o.out_dir;
    validate(c);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  }
  if (!c.scan.parameter.empty()) return run_scan(cmd, c, o, o.jobs, out, err);
  return guarded(cmd, c, o, out, err);
}

}  // namespace kerrlab::cli
