#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerrlab/angular.hpp"
#include "kerrlab/evolution.hpp"
#include "kerrlab/geometry.hpp"
#include "kerrlab/jet.hpp"

namespace kerrlab::spectral {

using cplx = std::complex<double>;

class SpectralError : public std::runtime_error {
 public:
  explicit SpectralError(const std::string& what) : std::runtime_error(what) {}
};

// chi_[0,T](t): 1 on [0, T], 0 for t < -M and t > T + M
Jet window(const KerrParams& kp, double T, const Jet& t);
double window(const KerrParams& kp, double T, double t);

// Eigenpairs of -Q = -(1/sin) d sin d + m^2 cot^2 + a^2 e^2 sin^2 (d_phi -> i m,
// d_t -> -i e), by Galerkin in Ybar_{|m|}, ..., Ybar_{|m|+n-1}. The sin^2
// matrix elements are exact (Gauss rule in cos(theta) with n + |m| + 2 nodes).
struct AngularEigs {
  double e = 0.0;
  int m = 0;
  double a = 0.0;
  std::vector<double> Q;  // ascending
  Eigen::MatrixXd C;      // C(l, j): coefficient of Ybar_{|m|+l} in S_j
  // lowest n/2 eigenvalues against a Galerkin basis of size 2n
  double richardson = 0.0;
  bool converged = false;

  double S(int j, double theta) const;
};

AngularEigs spheroidal_eigs(double e, int m, double a, int n, double tol = 1e-8);

// Uniform time samples of an FI run on the nodal grid of the solver.
struct TimeSeries {
  int m = 0;
  std::size_t n_r = 0, n_theta = 0;
  double t0 = 0.0, dt = 0.0;
  std::vector<std::vector<cplx>> ups, ups_t;

  std::size_t size() const { return ups.size(); }
  double t(std::size_t n) const { return t0 + double(n) * dt; }
};

// Observer callback keeping every stride-th FI state.
std::function<void(const evolution::ScalarState&)> recorder(const evolution::FISolver& fs, int stride,
                                                            TimeSeries& out);

// Upsilon_chi and the two sources of the transformed equation, in physical space:
// J_chi = Sigma(Upsilon box chi + 2 grad Upsilon . grad chi), J_Im = (Sigma V - V_0) Upsilon_chi.
struct WindowedFields {
  std::vector<std::vector<cplx>> u, j_chi, j_im;
};

WindowedFields window_fields(const KerrParams& kp, const evolution::RadialGrid& rg, const angular::Basis& b,
                             const TimeSeries& s, double T);

// u~(r, e, j) = (dt / sqrt(2 pi)) sum_n e^{i e t_n} <S_j(e), u(t_n)>; bins in FFT order.
// Discrete measure: d kappa = de x counting over j, so that
// sum_k de sum_j |u~|^2 = dt sum_n ||u(t_n)||^2 at each r.
struct Transform {
  int m = 0;
  double a = 0.0;
  std::size_t n_t = 0, n_r = 0, n_theta = 0;
  double t0 = 0.0, dt = 0.0, de = 0.0;
  std::vector<double> e;
  std::vector<AngularEigs> eigs;
  std::vector<cplx> u;  // index(k, i, j)
  double tail_fraction = 0.0;  // energy in the top tenth of |e|
  bool aliasing = false;

  std::size_t index(std::size_t k, std::size_t i, std::size_t j) const { return (k * n_r + i) * n_theta + j; }
};

Transform transform(const KerrParams& kp, const angular::Basis& b, const std::vector<std::vector<cplx>>& frames,
                    double t0, double dt, double tail_threshold = 1e-6);
// reuses the eigenbases of `like`
Transform transform_like(const Transform& like, const angular::Basis& b, const std::vector<std::vector<cplx>>& frames);
std::vector<std::vector<cplx>> inverse(const Transform& tr, const angular::Basis& b);

// dt sum_n int |u|^2 sin(theta) d(theta) per r, the angular integral of the
// nodal interpolant taken on an independent Gauss rule
std::vector<double> physical_norm2(const angular::Basis& b, const std::vector<std::vector<cplx>>& frames, double dt);
std::vector<double> spectral_norm2(const Transform& tr);

// (Delta/(r^2+a^2)) x [(d_r Delta d_r - R/Delta - V_0) u~ - J~_chi - J~_Im],
// with R(r; e, ell_z = -m, Q_j), V_0 = -2M/r, on nodes i0 <= i < i1.
struct FIResidual {
  std::size_t i0 = 0, i1 = 0;
  std::vector<double> residual;  // per r, L2 over (k, j) with d kappa
  std::vector<double> scale;     // per r, largest single term
  double relative = 0.0;         // sum of residual^2 over sum of scale^2, square root
};

FIResidual spectral_fi_residual(const KerrParams& kp, const evolution::RadialGrid& rg, const Transform& u,
                                const Transform& j_chi, const Transform& j_im, std::size_t i0, std::size_t i1);

// margin(r) = int (Q + ell_z^2)|u~|^2 + C (a^2 P(r) + |a|/M int |u~|^2) - 2 int |u~|^2,
// P(r) = int (Delta/(r^2+a^2)) chi^2 (|phi_1|^2 + |phi_-1|^2) when Maxwell data exist.
struct LowerBound {
  std::vector<double> angular, mass, maxwell;
  double best_C = 0.0;  // smallest C >= 0 with margin >= 0 at every r, inf if none
  std::vector<double> margin(double C, double a, double M) const;
  // min over r of margin / mass
  double min_relative(double C, double a, double M) const;
};

// accumulates P(r) from a Maxwell run (every stride-th step, window chi_[0,T])
std::function<void(const evolution::MaxwellState&)> maxwell_weight(const evolution::MaxwellSolver& ms, double T,
                                                                   int stride, std::vector<double>& P);

LowerBound spectral_lower_bound_check(const KerrParams& kp, const Transform& tr,
                                      const std::vector<double>& maxwell = {});

void write_eig_table(std::ostream& os, const Transform& tr);
void write_margin_table(std::ostream& os, const evolution::RadialGrid& rg, const LowerBound& lb, double C,
                        const KerrParams& kp);

}  // namespace kerrlab::spectral
