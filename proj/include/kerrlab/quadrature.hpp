#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace kerrlab {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(std::size_t n);

// Same rule mapped to [lo, hi].
QuadratureRule gauss_legendre(std::size_t n, double lo, double hi);

// Composite Simpson weights for n (odd) equally spaced samples with spacing h.
// For even n the last interval uses the 3/8 rule.
std::vector<double> simpson_weights(std::size_t n, double h);

double integrate(const QuadratureRule& q, const std::function<double(double)>& f);

}  // namespace kerrlab
