#pragma once

#include <array>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "kerrlab/geometry.hpp"

namespace kerrlab::fields {

using CMat4 = std::array<CVec4, 4>;

// Orthonormal components in the frame (T_hat, R_hat, Theta_hat, Phi_hat):
// E_i = F(e_i, T_hat), B_i = 1/2 eps_ijk F(e_j, e_k).
struct FramePoint {
  std::array<cplx, 3> E{};
  std::array<cplx, 3> B{};
};

struct SpinComponents {
  cplx phi_m1;
  cplx phi_0;
  cplx phi_1;
  cplx upsilon;  // p phi_0
};

SpinComponents spin_components(const KerrParams& kp, double r, double theta, const FramePoint& f);

// componentwise complex conjugate of the two-form
FramePoint conj(const FramePoint& f);
// Quadratic forms of a complex amplitude f (a mode, or a pair of real fields)
// are those of Re f plus Im f: 1/2 (|phi_i(f)|^2 + |phi_i(conj f)|^2), which is
// |phi_i(f)|^2 when f is real.
std::array<double, 3> spin_weights(const FramePoint& f);  // (-1, 0, 1)
double spin_density(const FramePoint& f);

// Coordinate components F_{mu nu} of the two-form with frame data f.
CMat4 two_form(const KerrParams& kp, double r, double theta, const FramePoint& f);
FramePoint frame_from_two_form(const KerrParams& kp, double r, double theta, const CMat4& F);
// phi_i by contraction with l, n, m of the principal null frame
SpinComponents spin_from_two_form(const KerrParams& kp, double r, double theta, const CMat4& F);

// Field with azimuthal dependence e^{i m phi}; f returns the amplitude.
struct AnalyticField {
  KerrParams kp;
  int m = 0;
  std::function<FramePoint(double r, double theta)> f;
};

// phi_0 = q/p^2, phi_{+-1} = 0
AnalyticField coulomb(const KerrParams& kp, cplx q);

struct ChargePair {
  double q_E;
  double q_B;
  cplx q() const { return {q_E, q_B}; }
};

// Samples on one sphere S^2(t, r): theta nodes with sin(theta) d(theta) weights.
struct SphereData {
  int m = 0;
  double r = 0.0;
  std::vector<double> theta;
  std::vector<double> weight;
  std::vector<SpinComponents> s;
  std::vector<cplx> dtheta_phi0;  // optional, needed by angular_lowerbound_gap
};

// Gauss-Legendre in cos(theta), n nodes; fills dtheta_phi0 by a 4th-order
// difference of the closure.
SphereData sample_sphere(const AnalyticField& F, double r, int n = 48);

// q = (1/4pi) int ((r^2+a^2) phi_0 + i a sin(theta) sqrt(Delta) (phi_1 + phi_-1) / sqrt(2)) d omega,
// normalised so that charges(coulomb(q)) = q.
ChargePair charges(const KerrParams& kp, const SphereData& sph);
ChargePair charges(const AnalyticField& F, double r, int n = 48);

// int |grad phi_0|^2 - a^2 V_L int |phi_1 + phi_-1|^2 - 2 int |phi_0|^2
double angular_lowerbound_gap(const KerrParams& kp, const SphereData& sph);

// Per-node data for the Fackerell-Ipser part of the energies.
struct FINode {
  cplx ups;
  cplx dt;
  cplx dr;
  cplx dtheta;
};

// Gridded snapshot at one time. Index (i, j) -> i * theta.size() + j.
struct MaxwellSnapshot {
  KerrParams kp;
  int m = 0;
  double t = 0.0;
  std::vector<double> r;
  std::vector<double> r_weight;  // dr measure
  std::vector<double> theta;
  std::vector<double> theta_weight;  // sin(theta) d(theta)
  std::vector<FramePoint> v;
  std::vector<FINode> fi;  // optional

  std::size_t index(std::size_t i, std::size_t j) const { return i * theta.size() + j; }
  SphereData sphere(std::size_t i) const;
};

struct RadialRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Composite Gauss-Legendre on geometrically growing panels of [r_min, r_max].
RadialRule radial_rule(double r_min, double r_max, int panels, int per_panel);

// Samples F on radial_rule x Gauss-Legendre(cos theta); fi filled by
// differencing the closure (stationary closures: dt = 0).
MaxwellSnapshot sample(const AnalyticField& F, const RadialRule& rr, int n_theta, bool stationary = true);

// int sum_i |phi_i|^2 r^2 dr d omega
double energy_maxwell(const MaxwellSnapshot& s);
// int (|E|^2 + |B|^2) r^2 dr d omega
double energy_maxwell_eb(const MaxwellSnapshot& s);
// E_FI from the fi nodes
double energy_fi(const MaxwellSnapshot& s);

// <H, F>; <F, F> = energy_maxwell + energy_fi
cplx inner_product(const MaxwellSnapshot& H, const MaxwellSnapshot& F);

struct Decomposition {
  ChargePair q;
  double q_spread;  // max deviation of q over the radial nodes
  MaxwellSnapshot stationary;
  MaxwellSnapshot charge_free;
};

// q from the sphere at r_weight-weighted median radius; Coulomb(q) subtracted
// node by node (fi data included when present).
Decomposition charge_decompose(const MaxwellSnapshot& s);

// JSON sidecar (prefix.json) plus column-major complex doubles (prefix.bin):
// E1..E3, B1..B3, then ups, dt, dr, dtheta when present.
void write_snapshot(const MaxwellSnapshot& s, const std::string& prefix);
MaxwellSnapshot read_snapshot(const std::string& prefix);

}  // namespace kerrlab::fields
