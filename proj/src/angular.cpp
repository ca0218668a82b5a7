#include "kerrlab/angular.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/legendre.hpp>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "kerrlab/quadrature.hpp"

namespace kerrlab::angular {

namespace {

double norm(int l, int am) {
  // sqrt((2l+1)/2 (l-m)!/(l+m)!)
  return std::sqrt(0.5 * (2 * l + 1) * boost::math::tgamma_ratio(double(l - am + 1), double(l + am + 1)));
}

double plm(int l, int am, double x) {
  if (l < am) return 0.0;
  return boost::math::legendre_p(l, am, x);
}

}  // namespace

double ybar(int l, int m, double theta) {
  const int am = std::abs(m);
  return norm(l, am) * plm(l, am, std::cos(theta));
}

double dybar(int l, int m, double theta) {
  const int am = std::abs(m);
  const double x = std::cos(theta), s = std::sin(theta);
  if (s == 0.0) throw std::domain_error("dybar at the pole");
  return norm(l, am) * (l * x * plm(l, am, x) - (l + am) * plm(l - 1, am, x)) / s;
}

Basis make_basis(int m, int n) {
  if (n < 1) throw std::invalid_argument("angular basis needs n >= 1");
  const auto gl = gauss_legendre(static_cast<std::size_t>(n));
  Basis b;
  b.m = m;
  b.n = n;
  b.Y.resize(n, n);
  b.dY.resize(n, n);
  for (int j = 0; j < n; ++j) {
    const int g = n - 1 - j;
    b.theta.push_back(std::acos(gl.nodes[g]));
    b.weight.push_back(gl.weights[g]);
  }
  Eigen::VectorXd eig(n);
  for (int k = 0; k < n; ++k) {
    const int l = b.ell(k);
    eig(k) = -double(l) * (l + 1);
    for (int j = 0; j < n; ++j) {
      b.Y(j, k) = ybar(l, m, b.theta[j]);
      b.dY(j, k) = dybar(l, m, b.theta[j]);
    }
  }
  b.Yinv = b.Y.fullPivLu().inverse();
  b.lap = b.Y * eig.asDiagonal() * b.Yinv;
  b.dtheta = b.dY * b.Yinv;
  return b;
}

Eigen::VectorXcd coefficients(const Basis& b, const Eigen::VectorXcd& nodal) { return b.Yinv.cast<std::complex<double>>() * nodal; }

}  // namespace kerrlab::angular
