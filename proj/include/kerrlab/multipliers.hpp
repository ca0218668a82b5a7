#pragma once

#include <array>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerrlab/geometry.hpp"
#include "kerrlab/jet.hpp"
#include "kerrlab/rational.hpp"

namespace kerrlab::morawetz {

using Mat3 = std::array<std::array<double, 3>, 3>;

// k = (e, ell_z, Q) with the weight eps on e^2.
struct SpectralPoint {
  double e = 0.0;
  double ell_z = 0.0;
  double Q = 0.0;
  double eps = 0.0;

  double norm2() const { return eps * eps * e * e + ell_z * ell_z + Q; }
};

class RootError : public std::runtime_error {
 public:
  explicit RootError(const std::string& what) : std::runtime_error(what) {}
};

// R(r; k) = -(r^2+a^2)^2 e^2 - 4aMr e ell_z + (Delta - a^2) ell_z^2 + Delta Q
Poly curly_R_poly(const KerrParams& kp, const SpectralPoint& k);
double curly_R(const KerrParams& kp, const SpectralPoint& k, double r);
// symmetric matrix of R in the variables (e, ell_z, sqrt Q)
Mat3 curly_R_matrix(const KerrParams& kp, double r);

// d/dr (f1 R / Delta) as an exact rational function of r
Rational rtilde_prime_rational(const KerrParams& kp, const SpectralPoint& k);
double rtilde_prime(const KerrParams& kp, const SpectralPoint& k, double r);
// d/dr (f1^{1/2} Delta^{-1/2} f2 Rtilde') with the basic f2
double rtildetilde_pp(const KerrParams& kp, const SpectralPoint& k, double r);

// Both as quadratic forms in (eps e, ell_z, sqrt Q); eps = 0 is only
// accepted at a = 0 (the e row is then the eps -> 0 limit).
Mat3 rtilde_prime_matrix(const KerrParams& kp, double eps, double r);
Mat3 rtildetilde_pp_matrix(const KerrParams& kp, double eps, double r);

double quad(const Mat3& m, const std::array<double, 3>& v);
// ascending eigenvalues of a symmetric 3x3 matrix
std::array<double, 3> sym_eigenvalues(const Mat3& m);
// (eps e, ell_z, sqrt Q)
std::array<double, 3> scaled_vector(const SpectralPoint& k);

// Unique exterior root of Rtilde'. Sign changes are counted on a log grid in
// r - r_plus over (1e-6 M, 1e4 M); anything other than one throws RootError.
double find_root(const KerrParams& kp, const SpectralPoint& k);

enum class Variant { oversimplified, basic, refined, refined_plain };

struct MultiplierSpec {
  Variant variant = Variant::basic;
  double r_gap = 0.1;  // units of M, refined variants only
};

struct FQ {
  double F;
  double q;
};

struct CoefficientTriple {
  double A;
  double U;
  double V;  // includes -1/2 (Delta q')'
  double scale;  // size of the largest individual term, for relative checks
};

// F = f1 f2 F3, q = 1/2 f1 (f2 F3)' for one spectral point.
class Multiplier {
 public:
  Multiplier(MultiplierSpec spec, const KerrParams& kp, const SpectralPoint& k);

  double r_root() const { return r_root_; }
  Jet f1(const Jet& r) const;
  Jet f2(const Jet& r) const;
  Jet F3(const Jet& r) const;

  FQ at(double r) const;
  // factored form
  CoefficientTriple simplified(double r) const;
  // A = -1/2 Delta' F + 1/2 Delta F' + q Delta, etc., from F and q directly
  CoefficientTriple general(double r) const;

 private:
  MultiplierSpec spec_;
  KerrParams kp_;
  SpectralPoint k_;
  Rational rtp_;
  double r_root_ = 0.0;
};

struct PositivityReport {
  double r_root;
  double min_A_ratio;    // A / (Delta^2/(r^2+a^2) M/r^2)
  double min_U;          // over r and |k|_eps = 1
  double min_rtp_ratio;  // |Rtilde'| r^4 / (2 |r - r_root|) for |r - r_root| <= M
  double min_rtt_ratio;  // -Rtilde'' r^2 / M over |k|_eps = 1
  double argmin_A;
  double argmin_U;
};

// One spectral direction, margins over r_grid. U is minimised over the unit
// sphere exactly: Rtilde' sweeps the interval between its extreme eigenvalues.
PositivityReport positivity_scan(const MultiplierSpec& spec, const KerrParams& kp, const SpectralPoint& k,
                                 const std::vector<double>& r_grid);

// Unit-norm directions in (eps e, ell_z, sqrt Q) used by the scans.
std::vector<SpectralPoint> unit_directions(double eps, int n_per_angle = 5);

struct RootScan {
  double C = 0.0;  // max |r_root - 3M| / (M s), s = max(|a|/eps, eps/M)
  double worst_a = 0.0;
  double worst_eps = 0.0;
  double max_spread = 0.0;  // max over (a, eps) of the k-spread of r_root, in M
  int samples = 0;
  // directions where Rtilde' has no unique root (large s)
  int failures = 0;
  double min_failing_s = std::numeric_limits<double>::infinity();
};

RootScan root_localization_scan(double M, const std::vector<double>& a_over_M, const std::vector<double>& eps_over_M);

// f = -(Delta/(r^2+a^2))(1 - 3M/r)
double oversimplified_f(const KerrParams& kp, double r);

struct OversimplifiedReport {
  double min_ratio;           // f V_L' / (Delta/(r^2+a^2) r^-3 (1-3M/r)^2)
  double D_required;          // smallest D making the C-bound hold (C given)
  double radial_identity_residual;  // -2(Delta/(r^2+a^2))^3 ((r^2+a^2) f/Delta)' - 6M/r^2 (..)^3
};

OversimplifiedReport oversimplified_margin(const KerrParams& kp, double C, const std::vector<double>& r_grid);

}  // namespace kerrlab::morawetz
