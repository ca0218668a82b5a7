#include "kerrlab/rational.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kerrlab {

Poly Poly::monomial(std::size_t k, double coef) {
  std::vector<double> c(k + 1, 0.0);
  c[k] = coef;
  return Poly(std::move(c));
}

void Poly::trim() {
  while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
}

double Poly::operator()(double x) const {
  double s = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) s = s * x + *it;
  return s;
}

Jet Poly::operator()(const Jet& x) const {
  Jet s;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) s = s * x + *it;
  return s;
}

Poly Poly::derivative() const {
  if (c_.size() <= 1) return {};
  std::vector<double> d(c_.size() - 1);
  for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
  return Poly(std::move(d));
}

Poly Poly::shifted(double s) const { return compose(Poly({s, 1.0})); }

Poly Poly::compose(const Poly& q) const {
  Poly out;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) out = out * q + Poly::constant(*it);
  return out;
}

Poly& Poly::operator+=(const Poly& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
  for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
  trim();
  return *this;
}

Poly& Poly::operator-=(const Poly& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
  for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] -= o.c_[k];
  trim();
  return *this;
}

Poly& Poly::operator*=(double s) {
  for (auto& v : c_) v *= s;
  trim();
  return *this;
}

double Poly::norm_inf() const {
  double m = 0.0;
  for (double v : c_) m = std::max(m, std::abs(v));
  return m;
}

Poly operator+(Poly a, const Poly& b) { return a += b; }
Poly operator-(Poly a, const Poly& b) { return a -= b; }
Poly operator-(Poly a) { return a *= -1.0; }
Poly operator*(Poly a, double s) { return a *= s; }
Poly operator*(double s, Poly a) { return a *= s; }

Poly operator*(const Poly& a, const Poly& b) {
  if (a.is_zero() || b.is_zero()) return {};
  std::vector<double> c(a.coeffs().size() + b.coeffs().size() - 1, 0.0);
  for (std::size_t i = 0; i < a.coeffs().size(); ++i)
    for (std::size_t j = 0; j < b.coeffs().size(); ++j) c[i + j] += a.coeffs()[i] * b.coeffs()[j];
  return Poly(std::move(c));
}

Poly pow(const Poly& p, unsigned k) {
  Poly out = Poly::constant(1.0);
  for (unsigned i = 0; i < k; ++i) out = out * p;
  return out;
}

DivResult divide(const Poly& num, const Poly& den) {
  if (den.is_zero()) throw std::invalid_argument("polynomial division by zero");
  std::vector<double> r = num.coeffs();
  const auto& d = den.coeffs();
  if (r.size() < d.size()) return {Poly{}, num};
  std::vector<double> q(r.size() - d.size() + 1, 0.0);
  for (std::size_t k = q.size(); k-- > 0;) {
    const double f = r[k + d.size() - 1] / d.back();
    q[k] = f;
    for (std::size_t j = 0; j < d.size(); ++j) r[k + j] -= f * d[j];
    r[k + d.size() - 1] = 0.0;
  }
  r.resize(d.size() - 1);
  return {Poly(std::move(q)), Poly(std::move(r))};
}

Rational Rational::derivative() const {
  return Rational(num_.derivative() * den_ - num_ * den_.derivative(), den_ * den_);
}

Rational operator+(const Rational& a, const Rational& b) {
  return Rational(a.num() * b.den() + b.num() * a.den(), a.den() * b.den());
}
Rational operator-(const Rational& a, const Rational& b) {
  return Rational(a.num() * b.den() - b.num() * a.den(), a.den() * b.den());
}
Rational operator*(const Rational& a, const Rational& b) {
  return Rational(a.num() * b.num(), a.den() * b.den());
}
Rational operator/(const Rational& a, const Rational& b) {
  return Rational(a.num() * b.den(), a.den() * b.num());
}
Rational operator*(double s, const Rational& a) { return Rational(s * a.num(), a.den()); }

}  // namespace kerrlab
