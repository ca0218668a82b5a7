#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace kerrlab {

// Truncated Taylor expansion f(x0+h) = sum c[k] h^k, k < kJetOrder.
// Arithmetic propagates exact derivatives (forward mode, no differencing).
inline constexpr std::size_t kJetOrder = 6;

struct Jet {
  std::array<double, kJetOrder> c{};

  static Jet constant(double v) {
    Jet j;
    j.c[0] = v;
    return j;
  }
  static Jet variable(double x0) {
    Jet j;
    j.c[0] = x0;
    j.c[1] = 1.0;
    return j;
  }

  double value() const { return c[0]; }
  // k-th derivative
  double d(std::size_t k) const {
    double f = 1.0;
    for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
    return c[k] * f;
  }

  // derivative jet (loses the top coefficient)
  Jet derivative() const {
    Jet r;
    for (std::size_t k = 0; k + 1 < kJetOrder; ++k) r.c[k] = static_cast<double>(k + 1) * c[k + 1];
    return r;
  }

  Jet& operator+=(const Jet& o) {
    for (std::size_t k = 0; k < kJetOrder; ++k) c[k] += o.c[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (std::size_t k = 0; k < kJetOrder; ++k) c[k] -= o.c[k];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c) v *= s;
    return *this;
  }
};

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator-(Jet a) {
  for (auto& v : a.c) v = -v;
  return a;
}
inline Jet operator*(Jet a, double s) { return a *= s; }
inline Jet operator*(double s, Jet a) { return a *= s; }
inline Jet operator+(Jet a, double s) {
  a.c[0] += s;
  return a;
}
inline Jet operator+(double s, Jet a) { return a + s; }
inline Jet operator-(Jet a, double s) {
  a.c[0] -= s;
  return a;
}
inline Jet operator-(double s, const Jet& a) { return (-a) + s; }

inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r;
  for (std::size_t i = 0; i < kJetOrder; ++i)
    for (std::size_t j = 0; i + j < kJetOrder; ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

inline Jet operator/(const Jet& a, const Jet& b) {
  Jet r;
  for (std::size_t k = 0; k < kJetOrder; ++k) {
    double s = a.c[k];
    for (std::size_t j = 1; j <= k; ++j) s -= b.c[j] * r.c[k - j];
    r.c[k] = s / b.c[0];
  }
  return r;
}
inline Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }
inline Jet operator/(double s, const Jet& b) { return Jet::constant(s) / b; }

inline Jet exp(const Jet& a) {
  Jet r;
  r.c[0] = std::exp(a.c[0]);
  for (std::size_t k = 1; k < kJetOrder; ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * a.c[j] * r.c[k - j];
    r.c[k] = s / static_cast<double>(k);
  }
  return r;
}

// a^p for a.c[0] > 0
inline Jet pow(const Jet& a, double p) {
  Jet r;
  r.c[0] = std::pow(a.c[0], p);
  for (std::size_t k = 1; k < kJetOrder; ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j)
      s += (p * static_cast<double>(j) - static_cast<double>(k - j)) * a.c[j] * r.c[k - j];
    r.c[k] = s / (static_cast<double>(k) * a.c[0]);
  }
  return r;
}

inline Jet sqrt(const Jet& a) { return pow(a, 0.5); }

inline Jet atan(const Jet& a) {
  // (atan u)' = u' / (1 + u^2)
  Jet da = a.derivative();
  Jet q = da / (1.0 + a * a);
  Jet r;
  r.c[0] = std::atan(a.c[0]);
  for (std::size_t k = 1; k < kJetOrder; ++k) r.c[k] = q.c[k - 1] / static_cast<double>(k);
  return r;
}

// |a| away from a.c[0] == 0; at zero the sign of the slope is used
inline Jet abs(const Jet& a) {
  double s = a.c[0] > 0.0 ? 1.0 : (a.c[0] < 0.0 ? -1.0 : (a.c[1] >= 0.0 ? 1.0 : -1.0));
  return a * s;
}

}  // namespace kerrlab
