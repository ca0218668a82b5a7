#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <string>

#include "kerrlab/jet.hpp"

namespace kerrlab {

using cplx = std::complex<double>;
using Vec4 = std::array<double, 4>;  // (t, r, theta, phi)
using Mat4 = std::array<Vec4, 4>;
using CVec4 = std::array<cplx, 4>;

class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

struct KerrParams {
  double M = 1.0;
  double a = 0.0;
  double r_plus = 2.0;
  double r_minus = 0.0;

  KerrParams() = default;
  KerrParams(double mass, double spin);

  // angular velocity of the horizon, a/(r_+^2 + a^2)
  double omega_horizon() const { return a / (r_plus * r_plus + a * a); }
};

struct GeometryScalars {
  double Delta;
  double Sigma;
  double Pi;
  double V_L;
  cplx p;
};

GeometryScalars geometry_scalars(const KerrParams& kp, double r, double theta);

// Radial location carried as (r, x = r - r_plus) so that Delta keeps full
// relative precision for r* far below zero.
struct RadialPoint {
  double r;
  double x;
  double Delta;
};

RadialPoint radial_point_from_x(const KerrParams& kp, double x);
GeometryScalars geometry_scalars(const KerrParams& kp, const RadialPoint& rp, double theta);

// Boyer-Lindquist components. At theta in {0, pi} the phi row/column is
// degenerate and the inverse phi entries are left as NaN.
struct Metric {
  Mat4 g{};
  Mat4 ginv{};
  bool pole_degenerate = false;
};

Metric metric(const KerrParams& kp, double r, double theta);

double dot(const Mat4& g, const Vec4& u, const Vec4& v);
cplx dot(const Mat4& g, const CVec4& u, const CVec4& v);  // bilinear, no conjugation

// Principal null frame plus its orthonormal companions, coordinate components.
struct Tetrad {
  Vec4 t_hat{};
  Vec4 r_hat{};
  Vec4 theta_hat{};
  Vec4 phi_hat{};
  Vec4 l{};
  Vec4 n{};
  CVec4 m{};
  bool pole_degenerate = false;
};

Tetrad tetrad(const KerrParams& kp, double r, double theta);

// Zero angular momentum observer frame (e0 = unit normal to t = const).
Tetrad zamo_frame(const KerrParams& kp, double r, double theta);

// dr*/dr = (r^2+a^2)/Delta, normalised so that r*(10M) matches
// r + 2M ln(r/2M - 1) at 10M.
class Tortoise {
 public:
  explicit Tortoise(const KerrParams& kp);
  double r_star(double r) const;
  double r_of(double r_star) const;
  // r - r_plus, accurate when r* is large and negative
  double x_of(double r_star) const;
  // dr/dr* = Delta/(r^2+a^2)
  double dr_drstar(double r) const;

 private:
  KerrParams kp_;
  double c_plus_ = 0.0;
  double c_minus_ = 0.0;
  double offset_ = 0.0;
  double raw(double r) const;
};

enum class CutoffKind { blend, mid, far, near, time };

struct CutoffSpec {
  CutoffKind kind = CutoffKind::blend;
  double r_gap = 0.1;   // in units of M
  double T = 0.0;       // final time for kind == time
  double center = 3.0;  // centre of the near cutoff, units of M
};

// exp(-1/x)-based smooth step, 0 for x <= 0, 1 for x >= 1
Jet smoothstep(const Jet& x);
double smoothstep(double x);

// Cutoff and its derivatives with respect to x (x = r, or t for kind == time).
Jet cutoff(const CutoffSpec& spec, const KerrParams& kp, const Jet& x);
double cutoff(const CutoffSpec& spec, const KerrParams& kp, double x);

struct BlendedVectors {
  double omega_chi;
  double omega_perp;
  double omega_pnv;
  Vec4 T_chi;
  Vec4 T_perp;
  Vec4 T_pnv;
};

BlendedVectors blended_vectors(const KerrParams& kp, double r, double theta);

// Future normal of t = const times the measure factor used in flux integrals.
Vec4 hypersurface_normal(const KerrParams& kp, double r, double theta);
// Same object evaluated as -g^{t alpha} sqrt(-det g) from the metric.
Vec4 hypersurface_normal_from_metric(const KerrParams& kp, double r, double theta);

}  // namespace kerrlab
