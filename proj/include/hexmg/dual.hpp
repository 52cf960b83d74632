#pragma once

#include <cmath>
#include <stdexcept>

namespace hexmg {

/// First-order forward-mode dual number: value + (deriv) * eps with eps^2 = 0.
struct Dual {
  double value = 0.0;
  double deriv = 0.0;

  Dual() = default;
  Dual(double v) : value(v) {}  // NOLINT: implicit lift of constants
  Dual(double v, double d) : value(v), deriv(d) {}
};

inline Dual operator+(Dual x, Dual y) { return {x.value + y.value, x.deriv + y.deriv}; }
inline Dual operator-(Dual x, Dual y) { return {x.value - y.value, x.deriv - y.deriv}; }
inline Dual operator-(Dual x) { return {-x.value, -x.deriv}; }

inline Dual operator*(Dual x, Dual y) {
  return {x.value * y.value, x.value * y.deriv + x.deriv * y.value};
}

inline Dual operator/(Dual x, Dual y) {
  if (y.value == 0.0) throw std::domain_error("dual division by zero primal");
  double inv = 1.0 / y.value;
  return {x.value * inv, (x.deriv - x.value * y.deriv * inv) * inv};
}

inline Dual log(Dual x) {
  if (x.value <= 0.0) throw std::domain_error("dual log of non-positive primal");
  return {std::log(x.value), x.deriv / x.value};
}

inline Dual sqrt(Dual x) {
  if (x.value < 0.0) throw std::domain_error("dual sqrt of negative primal");
  double r = std::sqrt(x.value);
  return {r, r > 0.0 ? 0.5 * x.deriv / r : 0.0};
}

}  // namespace hexmg
