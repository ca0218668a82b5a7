#pragma once

#include <Eigen/Dense>
#include <vector>

namespace kerrlab::angular {

// Normalised associated Legendre functions Ybar_l(theta) = N P_l^|m|(cos theta),
// int Ybar_l Ybar_l' sin(theta) d(theta) = delta_ll', l = |m| .. |m| + n - 1,
// collocated at the n Gauss-Legendre nodes in cos(theta) (theta ascending).
struct Basis {
  int m = 0;
  int n = 0;
  std::vector<double> theta;
  std::vector<double> weight;  // sin(theta) d(theta)
  Eigen::MatrixXd Y;           // Y(j, k) = Ybar_{|m|+k}(theta_j)
  Eigen::MatrixXd dY;          // d/d(theta)
  Eigen::MatrixXd Yinv;
  // nodal operators
  Eigen::MatrixXd lap;     // (1/sin) d sin d - m^2/sin^2, eigenvalues -l(l+1)
  Eigen::MatrixXd dtheta;  // d/d(theta)

  int ell(int k) const { return (m < 0 ? -m : m) + k; }
};

Basis make_basis(int m, int n);

// Ybar_l at arbitrary theta (and its theta derivative)
double ybar(int l, int m, double theta);
double dybar(int l, int m, double theta);

// nodal values -> coefficients in Ybar_l (exact for band-limited data)
Eigen::VectorXcd coefficients(const Basis& b, const Eigen::VectorXcd& nodal);

}  // namespace kerrlab::angular
