#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hexmg/cg.hpp"
#include "hexmg/errors.hpp"

namespace hexmg {

/// Degree-2 Chebyshev iteration preconditioned by the Jacobi diagonal,
/// targeting [0.1 lambda_max, 1.1 lambda_max] with lambda_max estimated by 10
/// Lanczos iterations on a fixed rough seed.
struct ChebyshevSmoother {
  int degree = 2;
  double lambda_max = 0.0;
  double interval_min = 0.0;
  double interval_max = 0.0;
  std::vector<double> inv_diag;

  static ChebyshevSmoother create(const LinearOperator& a, std::span<const double> diag,
                                  std::span<const uint8_t> mask = {}, int degree = 2) {
    ChebyshevSmoother s;
    s.degree = degree;
    s.inv_diag.resize(diag.size());
    for (size_t i = 0; i < diag.size(); ++i) {
      if (diag[i] == 0.0) throw InvalidSmootherError("zero diagonal entry");
      s.inv_diag[i] = 1.0 / diag[i];
    }
    LinearOperator jacobi = diagonal_operator(s.inv_diag);
    auto seed = rough_seed(a.size, mask);
    s.lambda_max = estimate_lambda_max(a, jacobi, seed, 10);
    s.interval_min = 0.1 * s.lambda_max;
    s.interval_max = 1.1 * s.lambda_max;
    return s;
  }

  /// One degree-d sweep; the exact solution is a fixed point and the update
  /// is linear in (x, b).
  void apply(const LinearOperator& a, std::span<const double> b, std::span<double> x) const {
    int n = a.size;
    std::vector<double> r(n), d(n);
    double theta = 0.5 * (interval_max + interval_min);
    double delta = 0.5 * (interval_max - interval_min);
    double sigma = theta / delta;
    double rho = 1.0 / sigma;

    a.apply(x, std::span<double>(r));
    for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
    for (int i = 0; i < n; ++i) d[i] = inv_diag[i] * r[i] / theta;
    for (int k = 1; k <= degree; ++k) {
      for (int i = 0; i < n; ++i) x[i] += d[i];
      if (k == degree) break;
      a.apply(x, std::span<double>(r));
      for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
      double rho_new = 1.0 / (2.0 * sigma - rho);
      for (int i = 0; i < n; ++i)
        d[i] = rho_new * rho * d[i] + (2.0 * rho_new / delta) * inv_diag[i] * r[i];
      rho = rho_new;
    }
  }
};

}  // namespace hexmg
