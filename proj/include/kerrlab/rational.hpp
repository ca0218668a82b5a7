#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "kerrlab/jet.hpp"

namespace kerrlab {

// Dense polynomial in one variable, ascending coefficients.
class Poly {
 public:
  Poly() = default;
  Poly(std::initializer_list<double> c) : c_(c) { trim(); }
  explicit Poly(std::vector<double> c) : c_(std::move(c)) { trim(); }
  static Poly constant(double v) { return Poly({v}); }
  static Poly monomial(std::size_t k, double coef = 1.0);

  // degree of the zero polynomial is reported as 0
  std::size_t degree() const { return c_.empty() ? 0 : c_.size() - 1; }
  bool is_zero() const { return c_.empty(); }
  double coeff(std::size_t k) const { return k < c_.size() ? c_[k] : 0.0; }
  const std::vector<double>& coeffs() const { return c_; }

  double operator()(double x) const;
  Jet operator()(const Jet& x) const;

  Poly derivative() const;
  // p(x + s)
  Poly shifted(double s) const;
  // p(q(x))
  Poly compose(const Poly& q) const;

  Poly& operator+=(const Poly& o);
  Poly& operator-=(const Poly& o);
  Poly& operator*=(double s);

  // largest |coefficient|
  double norm_inf() const;

 private:
  std::vector<double> c_;
  void trim();
};

Poly operator+(Poly a, const Poly& b);
Poly operator-(Poly a, const Poly& b);
Poly operator-(Poly a);
Poly operator*(const Poly& a, const Poly& b);
Poly operator*(Poly a, double s);
Poly operator*(double s, Poly a);
Poly pow(const Poly& p, unsigned k);

struct DivResult {
  Poly quotient;
  Poly remainder;
};
DivResult divide(const Poly& num, const Poly& den);

// num/den with exact coefficient arithmetic for sums, products and derivatives.
class Rational {
 public:
  Rational() : num_(Poly::constant(0.0)), den_(Poly::constant(1.0)) {}
  Rational(Poly num, Poly den = Poly::constant(1.0)) : num_(std::move(num)), den_(std::move(den)) {}

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }

  double operator()(double x) const { return num_(x) / den_(x); }
  Jet operator()(const Jet& x) const { return num_(x) / den_(x); }

  Rational derivative() const;

 private:
  Poly num_;
  Poly den_;
};

Rational operator+(const Rational& a, const Rational& b);
Rational operator-(const Rational& a, const Rational& b);
Rational operator*(const Rational& a, const Rational& b);
Rational operator/(const Rational& a, const Rational& b);
Rational operator*(double s, const Rational& a);

}  // namespace kerrlab
