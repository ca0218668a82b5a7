#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <string>

#include "kerrlab/geometry.hpp"
#include "kerrlab/rational.hpp"

namespace kerrlab::hardy {

class StructureError : public std::runtime_error {
 public:
  explicit StructureError(const std::string& what) : std::runtime_error(what) {}
};

// Weighted problem  int A |u'|^2 + V |u|^2 dx,  x = r - r_plus,
// A = Delta^2 / ((r^2+a^2) r^2),  V = (c2 r^2 + c1 M r + c0 M^2) / (6 r^4).
struct HardyProblem {
  KerrParams kp;
  std::array<double, 3> v_numerator{11.0, -60.0, 78.0};  // c2, c1, c0

  double d() const { return kp.r_plus - kp.r_minus; }
  double weight(double x) const;
  double potential(double x) const;
  // W = V/A + (A^{1/2})'' / A^{1/2}, evaluated directly
  double transformed_potential(double x) const;
  // W as an exact rational function of x
  Rational transformed_rational() const;
};

struct WCoefficients {
  double X;
  double Y;
  double Z;

  double operator()(double x, double d) const { return (X * x * x + Y * x + Z) / (6.0 * x * x * (x + d) * (x + d)); }
};

// Extract W = (X x^2 + Y x + Z) / (6 x^2 (x+d)^2); throws StructureError when
// W is not of that form (the rotating case).
WCoefficients to_W(const HardyProblem& problem);

struct HypergeometricParams {
  double alpha;
  double beta;
  double a;
  double b;
  double c;
  bool alpha_integer = false;
};

// Exponent choices: alpha from the x = 0 indicial root above 1/2, beta from the
// x = -d indicial equation on the branch below 1/2, then a, b from the
// exponents at infinity with a < b.
HypergeometricParams solve_parameters(const WCoefficients& w, double d);

// Residuals of the five defining relations (the x = -d relation in the form
// beta(beta-1) = X/6 - Y/(6d) + alpha(alpha-1)).
std::array<double, 5> condition_residuals(const HypergeometricParams& p, const WCoefficients& w, double d);

// a < 0 < b < c with alpha non-integer
bool positivity_conditions_hold(const HypergeometricParams& p);

struct SeriesValue {
  double value = 0.0;
  double error_bound = 0.0;
  int terms = 0;
  bool converged = false;
};

// Gauss 2F1 for real z <= 1 (z = 1 needs c - a - b > 0). Direct series on
// |z| <= 1/2, Pfaff transformation for z < -1/2 and the 1 - z connection
// formula when the reduced argument exceeds 1/2.
SeriesValue gauss_2f1(double a, double b, double c, double z);

// v = x^alpha (x+d)^beta 2F1(a, b; c; -x/d), solving -v'' + W v = 0
double positive_solution(const HypergeometricParams& p, double d, double x);

struct PositiveSolutionReport {
  double min_v;
  double argmin_x;
  double max_relative_residual;
  double small_x_slope;
  bool positive;
};

PositiveSolutionReport positive_solution_scan(const HypergeometricParams& p, const WCoefficients& w, double d,
                                              double x_min, double x_max, int n);

struct RayleighResult {
  double min_eigenvalue;
  double lower_bracket;
  int bisection_steps;
};

// Smallest eigenvalue of  int |psi'|^2 + W |psi|^2  over  int |psi|^2, with
// P1 elements on n interior log-spaced nodes and Dirichlet ends. Upper bound
// for the continuum infimum on [x_min, x_max].
RayleighResult rayleigh_min(const std::function<double(double)>& W, double x_min, double x_max, int n);

}  // namespace kerrlab::hardy
