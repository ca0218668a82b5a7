#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "kerrlab/angular.hpp"
#include "kerrlab/quadrature.hpp"

using namespace kerrlab;
using namespace kerrlab::angular;

TEST_CASE("angular: closed forms of the first functions") {
  for (double th : {0.1, 0.7, 1.5, 2.9}) {
    CHECK(ybar(0, 0, th) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(ybar(1, 0, th) == doctest::Approx(std::sqrt(1.5) * std::cos(th)).epsilon(1e-14));
    CHECK(std::abs(ybar(1, 1, th)) == doctest::Approx(std::sqrt(0.75) * std::sin(th)).epsilon(1e-14));
    CHECK(ybar(2, 0, th) ==
          doctest::Approx(std::sqrt(2.5) * 0.5 * (3.0 * std::cos(th) * std::cos(th) - 1.0)).epsilon(1e-13));
    CHECK(dybar(1, 0, th) == doctest::Approx(-std::sqrt(1.5) * std::sin(th)).epsilon(1e-13));
  }
}

TEST_CASE("angular: orthonormality") {
  // m = 0 products are polynomials of degree < 2n, exact at the nodes
  const auto b = make_basis(0, 10);
  const Eigen::MatrixXd G = b.Y.transpose() * Eigen::Map<const Eigen::VectorXd>(b.weight.data(), b.n).asDiagonal() * b.Y;
  CHECK((G - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-13);

  // m != 0 against a fine rule
  const auto q = gauss_legendre(80);
  for (int m : {1, 2, 3}) {
    for (int l = m; l < m + 6; ++l)
      for (int k = m; k < m + 6; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < q.nodes.size(); ++j) {
          const double th = std::acos(q.nodes[j]);
          s += q.weights[j] * ybar(l, m, th) * ybar(k, m, th);
        }
        CHECK(std::abs(s - (l == k ? 1.0 : 0.0)) < 1e-12);
      }
  }
}

TEST_CASE("angular: nodal operators") {
  for (int m : {0, 1, 2}) {
    const int n = 9;
    const auto b = make_basis(m, n);
    Eigen::EigenSolver<Eigen::MatrixXd> es(b.lap);
    std::vector<double> ev;
    for (int k = 0; k < n; ++k) {
      CHECK(std::abs(es.eigenvalues()(k).imag()) < 1e-8);
      ev.push_back(-es.eigenvalues()(k).real());
    }
    std::sort(ev.begin(), ev.end());
    for (int k = 0; k < n; ++k) {
      const double l = std::abs(m) + k;
      CHECK(ev[k] == doctest::Approx(l * (l + 1)).epsilon(1e-9));
    }
    // derivative of a basis function is exact at the nodes
    const int l = std::abs(m) + 3;
    Eigen::VectorXd y(n), dy(n);
    for (int j = 0; j < n; ++j) {
      y(j) = ybar(l, m, b.theta[j]);
      dy(j) = dybar(l, m, b.theta[j]);
    }
    CHECK((b.dtheta * y - dy).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((b.lap * y + double(l * (l + 1)) * y).cwiseAbs().maxCoeff() < 1e-9);
    // theta ascending
    CHECK(std::is_sorted(b.theta.begin(), b.theta.end()));
  }
  CHECK_THROWS(make_basis(0, 0));
}
