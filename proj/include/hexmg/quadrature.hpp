#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hexmg {

/// Gauss-Legendre rule on [-1, 1]: exact for polynomials of degree <= 2q - 1.
struct QuadratureRule1D {
  std::vector<double> points;
  std::vector<double> weights;

  int size() const { return static_cast<int>(points.size()); }
};

namespace detail {

/// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
inline std::pair<double, double> legendre_with_deriv(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace detail

/// q-point Gauss-Legendre rule. Points are symmetrized about the origin and
/// the middle point of an odd rule is pinned to exactly 0.
inline QuadratureRule1D gauss_legendre(int q) {
  if (q < 1) throw std::invalid_argument("quadrature size must be >= 1");
  QuadratureRule1D rule;
  rule.points.resize(q);
  rule.weights.resize(q);
  for (int i = 0; i < (q + 1) / 2; ++i) {
    // Chebyshev-based initial guess, then Newton on P_q.
    double x = std::cos(M_PI * (i + 0.75) / (q + 0.5));
    for (int it = 0; it < 100; ++it) {
      auto [p, dp] = detail::legendre_with_deriv(q, x);
      double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    auto [p, dp] = detail::legendre_with_deriv(q, x);
    (void)p;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[q - 1 - i] = x;
    rule.points[i] = -x;
    rule.weights[i] = rule.weights[q - 1 - i] = w;
  }
  if (q % 2 == 1) rule.points[q / 2] = 0.0;
  return rule;
}

/// p + 1 Gauss-Lobatto points on [-1, 1]: the endpoints plus the roots of
/// P_p'. Symmetrized, with an exact 0 at the center when present.
inline std::vector<double> gauss_lobatto_nodes(int p) {
  if (p < 1) throw std::invalid_argument("basis order must be >= 1");
  int n = p + 1;
  std::vector<double> x(n);
  x[0] = -1.0;
  x[n - 1] = 1.0;
  for (int i = 1; i <= (n - 1) / 2; ++i) {
    // Interior node i is a root of P_p'; Newton with P_p'' from the
    // Legendre ODE (1 - x^2) P'' = 2 x P' - p (p + 1) P.
    double y = std::cos(M_PI * i / p);
    for (int it = 0; it < 100; ++it) {
      auto [pp, dp] = detail::legendre_with_deriv(p, y);
      double d2p = (2.0 * y * dp - p * (p + 1.0) * pp) / (1.0 - y * y);
      double dy = dp / d2p;
      y -= dy;
      if (std::abs(dy) < 1e-16) break;
    }
    x[n - 1 - i] = std::abs(y);
    x[i] = -std::abs(y);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
  return x;
}

}  // namespace hexmg
