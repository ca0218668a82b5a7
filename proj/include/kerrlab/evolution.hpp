#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerrlab/angular.hpp"
#include "kerrlab/fields.hpp"
#include "kerrlab/geometry.hpp"

namespace kerrlab::evolution {

class EvolutionError : public std::runtime_error {
 public:
  explicit EvolutionError(const std::string& what) : std::runtime_error(what) {}
};

// All lengths in units of M.
struct GridSpec {
  double rstar_min = -60.0;
  double rstar_max = 200.0;
  int n_r = 2048;
  int n_theta = 8;           // Gauss nodes, Fackerell-Ipser solver
  int n_theta_maxwell = 32;  // uniform cell-centred nodes with parity ghosts
  int m = 0;
  double cfl = 0.5;
  double dissipation = 0.02;        // Kreiss-Oliger along r*
  double dissipation_theta = 0.0;   // Maxwell only
};

// Nodes uniform in r*; everything near the horizon is built from x = r - r_plus.
struct RadialGrid {
  double h = 0.0;
  std::vector<double> rstar;
  std::vector<RadialPoint> pt;
  std::vector<double> weight;  // composite Simpson in r*
};

RadialGrid make_radial_grid(const KerrParams& kp, const GridSpec& g);

// 4th-order centred first derivative along r* (2nd order next to the ends,
// one-sided at the ends); stride is the distance between radial neighbours.
cplx d_rstar(const cplx* u, std::size_t i, std::size_t n, std::size_t stride, double h);

// --- Fackerell-Ipser -------------------------------------------------------

struct ScalarState {
  double t = 0.0;
  std::vector<cplx> ups;
  std::vector<cplx> pi;  // d_t Upsilon
};

// Pi d_t^2 U = (r^2+a^2) d_r* ((r^2+a^2) d_r* U) - 4iamMr d_t U + Delta L_m U
//              + m^2 a^2 U - Delta Sigma V_FI U,
// L_m the associated Legendre operator (eigenvalues -l(l+1)).
class FISolver {
 public:
  FISolver(const KerrParams& kp, const GridSpec& g);

  const KerrParams& params() const { return kp_; }
  const GridSpec& grid() const { return g_; }
  const RadialGrid& radial() const { return rg_; }
  const angular::Basis& basis() const { return basis_; }
  std::size_t n_r() const { return rg_.rstar.size(); }
  std::size_t n_theta() const { return static_cast<std::size_t>(basis_.n); }
  std::size_t size() const { return n_r() * n_theta(); }
  std::size_t index(std::size_t i, std::size_t j) const { return i * n_theta() + j; }
  double dt() const { return g_.cfl * rg_.h; }

  ScalarState zero_state(double t0 = 0.0) const;
  // (d_t U, d_t Pi) written into out.ups, out.pi
  void rhs(const ScalarState& s, ScalarState& out) const;
  void step(ScalarState& s, double dt) const;

  std::vector<cplx> d_rstar_field(const std::vector<cplx>& u) const;
  std::vector<cplx> d_theta_field(const std::vector<cplx>& u) const;
  std::vector<cplx> lap_field(const std::vector<cplx>& u) const;

 private:
  KerrParams kp_;
  GridSpec g_;
  RadialGrid rg_;
  angular::Basis basis_;
  std::vector<double> c_rr_, c_r_, c_ang_;
  std::vector<cplx> c_0_, c_t_;
  mutable std::vector<ScalarState> work_;
};

// --- Maxwell ----------------------------------------------------------------

// Orthonormal components measured by the zero angular momentum observers,
// (R, Theta, Phi) order.
struct MaxwellState {
  double t = 0.0;
  std::array<std::vector<cplx>, 3> D;
  std::array<std::vector<cplx>, 3> B;
};

struct Constraints {
  double div_D;   // ||div D|| / ||D||, times M
  double div_B;
};

// Curl form on the lapse/shift split, shift advection written as a Lie
// derivative (d_t B = -curl(alpha D) + L_beta B, same for D with +curl(alpha B)).
class MaxwellSolver {
 public:
  MaxwellSolver(const KerrParams& kp, const GridSpec& g);

  const KerrParams& params() const { return kp_; }
  const GridSpec& grid() const { return g_; }
  const RadialGrid& radial() const { return rg_; }
  const std::vector<double>& theta() const { return theta_; }
  const std::vector<double>& theta_weight() const { return theta_w_; }  // Fejer, sin(theta) d(theta)
  std::size_t n_r() const { return rg_.rstar.size(); }
  std::size_t n_theta() const { return theta_.size(); }
  std::size_t size() const { return n_r() * n_theta(); }
  std::size_t index(std::size_t i, std::size_t j) const { return i * n_theta() + j; }
  double dt() const { return g_.cfl * rg_.h; }

  MaxwellState zero_state(double t0 = 0.0) const;
  void rhs(const MaxwellState& s, MaxwellState& out) const;
  void step(MaxwellState& s, double dt) const;
  Constraints constraints(const MaxwellState& s) const;

  // frame change to (T_PNV, R, Theta, Phi_PNV) at node k
  fields::FramePoint pnv(const MaxwellState& s, std::size_t k) const;
  double boost_velocity(std::size_t k) const { return v_[k]; }

 private:
  KerrParams kp_;
  GridSpec g_;
  RadialGrid rg_;
  std::vector<double> theta_, theta_w_;
  // per node
  std::vector<double> k_ar_, k_at_, k_ap_, sq_delta_, c_over_sqd_, sqrt_pi_sin_, sigma_, omega_, s_r_, s_theta_, v_;
  std::vector<double> ko_w_;  // per radial node
  mutable std::vector<MaxwellState> work_;
  mutable std::vector<cplx> ar_, at_, ap_;
  void curl(const std::vector<cplx>& xr, const std::vector<cplx>& xt, const std::vector<cplx>& xp,
            std::array<std::vector<cplx>, 3>& out) const;
};

// ZAMO <-> principal null frame: boost along Phi with v = a sqrt(Delta) sin(theta)/(r^2+a^2).
fields::FramePoint boost_phi(const fields::FramePoint& f, double v);
double pnv_boost_velocity(const KerrParams& kp, const RadialPoint& rp, double theta);

// --- initial data -------------------------------------------------------------

// Analytic data at t = 0. maxwell returns ZAMO components; ups/ups_t the
// Fackerell-Ipser data (filled from maxwell when empty).
struct InitialData {
  int m = 0;
  std::function<fields::FramePoint(const RadialPoint&, double rstar, double theta)> maxwell;
  std::function<cplx(const RadialPoint&, double rstar, double theta)> ups;
  std::function<cplx(const RadialPoint&, double rstar, double theta)> ups_t;
};

// Upsilon = A exp(-(r*-c)^2/(2w^2)) Ybar_l(theta), d_t Upsilon = 0
InitialData fi_pulse(const KerrParams& kp, double center, double width, int ell, int m, double amplitude = 1.0);
// D = curl(A_phi d phi), A_phi = -A psi(r*) sin(theta) d_theta Ybar_l, B = 0 (m = 0 only)
InitialData curl_pulse(const KerrParams& kp, double center, double width, int ell = 1, double amplitude = 1.0);
InitialData coulomb_data(const KerrParams& kp, cplx q);
InitialData sum(const InitialData& a, const InitialData& b);

MaxwellState maxwell_initial(const MaxwellSolver& ms, const InitialData& d, double t0 = 0.0);
// Upsilon = p sqrt2 (E + iB).R_hat in the principal frame, on the FI grid.
ScalarState fi_initial(const FISolver& fs, const InitialData& d, double t0 = 0.0);

// Upsilon[F] on the Maxwell grid (uniform theta nodes)
std::vector<cplx> upsilon_from_maxwell(const MaxwellSolver& ms, const MaxwellState& s);
// Project a field on the uniform Maxwell theta grid onto the Gauss nodes of fs
// (Fejer quadrature onto Ybar_l, l < |m| + n_theta).
std::vector<cplx> to_gauss_nodes(const MaxwellSolver& ms, const FISolver& fs, const std::vector<cplx>& u);

// --- tensors -----------------------------------------------------------------

// T = 4 (Re F_ag conj(F_b^g) - 1/4 g_ab Re F_cd conj(F^cd)), covariant BL components
Mat4 stress_tensor(const KerrParams& kp, double r, double theta, const fields::CMat4& F);

// residuals of the six component identities (T(l,l) = 2|phi_1|^2, ...), with
// T(R,R) = |phi_1|^2 + |phi_-1|^2 - |phi_0|^2; f real, in the principal frame
std::array<double, 6> stress_table_residuals(const KerrParams& kp, double r, double theta, const fields::FramePoint& f);

// Pseudo-stress tensor of the Fackerell-Ipser equation at a point.
struct FIPoint {
  cplx ups;
  CVec4 grad;  // d_mu Upsilon, d_phi = i m Upsilon
};
struct PseudoTensor {
  Mat4 P;
  Mat4 T;
  double L;
};
PseudoTensor fi_pseudo_tensor(const KerrParams& kp, double r, double theta, const FIPoint& p);

// nabla^a T_ab - [Im V Im(conj(U) d_b U) - Re(d_b V)|U|^2/2], b = t, r, theta, phi,
// for U(t, r, theta) e^{i m phi}, by centred differences of step h.
using FIClosure = std::function<cplx(double t, double r, double theta)>;
std::array<double, 4> fi_divergence_residual(const KerrParams& kp, int m, const FIClosure& u, double t, double r,
                                             double theta, double h);

// --- diagnostics ---------------------------------------------------------------

struct DiagnosticSample {
  double t = 0.0;
  double E_FI = 0.0;        // crude FI energy
  double E_F = 0.0;         // sum |phi_i|^2 r^2 dr d omega
  double E_dt_ups = 0.0;    // pseudo-energy, X = d_t
  double E_Tchi_ups = 0.0;  // pseudo-energy, X = T_chi
  double E_dt_F = 0.0;
  double E_Tchi_F = 0.0;
  double B_pm = 0.0;
  double B_0 = 0.0;
  double B_20 = 0.0;
  double B_1 = 0.0;
  double div_D = 0.0;
  double div_B = 0.0;
};

struct DiagnosticSeries {
  bool has_fi = false;
  bool has_maxwell = false;
  double r_gap = 0.1;
  std::vector<DiagnosticSample> samples;
  // per radial node: int_0^t int_S2 Im(conj(U) d_t U) d omega dt
  std::vector<double> b1_inner;
  const DiagnosticSample& back() const { return samples.back(); }
  // sample closest to t
  const DiagnosticSample& at(double t) const;
};

// Slice quantities
double fi_energy_crude(const FISolver& fs, const ScalarState& s);
double fi_flux_energy(const FISolver& fs, const ScalarState& s, double omega_scale_chi);  // 0: d_t, 1: T_chi
double maxwell_energy(const MaxwellSolver& ms, const MaxwellState& s);
double maxwell_flux_energy(const MaxwellSolver& ms, const MaxwellState& s, double omega_scale_chi);

// Bulk integrands integrated over the slice (per unit time)
struct BulkRates {
  double pm = 0.0;
  double zero = 0.0;
  double two_zero = 0.0;
};
BulkRates fi_bulk_rates(const FISolver& fs, const ScalarState& s, double r_gap);
double maxwell_bulk_rate(const MaxwellSolver& ms, const MaxwellState& s);
// int_S2 Im(conj(U) d_t U) d omega per radial node
std::vector<double> fi_b1_density(const FISolver& fs, const ScalarState& s);
double fi_b1_finalize(const FISolver& fs, const std::vector<double>& inner, double r_gap);

struct RunConfig {
  double T = 100.0;
  double t0 = 0.0;
  double r_gap = 0.1;
  double sample_dt = 1.0;
  bool fi = true;
  bool maxwell = false;
  double blowup = 1e6;  // abort when max|field| exceeds blowup * initial max
};

// Called after each step and at t0.
struct Observer {
  std::function<void(const ScalarState&)> fi;
  std::function<void(const MaxwellState&)> maxwell;
};

DiagnosticSeries evolve(const KerrParams& kp, const GridSpec& g, const InitialData& d, const RunConfig& cfg,
                        const Observer& obs = {});

}  // namespace kerrlab::evolution
