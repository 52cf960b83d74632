#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hexmg/errors.hpp"

namespace hexmg {

struct LinearOperator {
  int size = 0;
  std::function<void(std::span<const double>, std::span<double>)> apply;
};

inline LinearOperator identity_operator(int n) {
  return {n, [](std::span<const double> x, std::span<double> y) {
            std::copy(x.begin(), x.end(), y.begin());
          }};
}

inline LinearOperator diagonal_operator(std::vector<double> d) {
  int n = (int)d.size();
  return {n, [d = std::move(d)](std::span<const double> x, std::span<double> y) {
            for (size_t i = 0; i < d.size(); ++i) y[i] = d[i] * x[i];
          }};
}

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

struct CgReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  // natural norm sqrt(r^T M r) per iteration
  double eig_min = 0.0;
  double eig_max = 0.0;

  double condition() const { return eig_min > 0.0 ? eig_max / eig_min : 1.0; }
};

namespace detail {

/// Extremal Ritz values from the CG/Lanczos tridiagonal built out of the
/// alpha/beta coefficient history.
inline void lanczos_eigs(const std::vector<double>& alphas, const std::vector<double>& betas,
                         double& eig_min, double& eig_max) {
  int k = (int)alphas.size();
  if (k == 0) {
    eig_min = eig_max = 0.0;
    return;
  }
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
  t(0, 0) = 1.0 / alphas[0];
  for (int i = 1; i < k; ++i) {
    t(i, i) = 1.0 / alphas[i] + betas[i - 1] / alphas[i - 1];
    double off = std::sqrt(betas[i - 1]) / alphas[i - 1];
    t(i, i - 1) = t(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
  eig_min = es.eigenvalues().minCoeff();
  eig_max = es.eigenvalues().maxCoeff();
}

}  // namespace detail

/// Preconditioned conjugate gradients with convergence measured in the
/// natural norm sqrt(r^T M r). Uses x as the initial guess. Eigenvalue
/// estimates of M A come from the Lanczos tridiagonal implied by the CG
/// coefficients.
inline CgReport cg_solve(const LinearOperator& a, const LinearOperator& m,
                         std::span<const double> b, std::span<double> x, double rtol,
                         int max_iterations) {
  int n = a.size;
  std::vector<double> r(n), z(n), p(n), ap(n);
  a.apply(x, std::span<double>(r));
  for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
  m.apply(r, std::span<double>(z));
  double rz = dot(r, z);
  if (rz < 0.0) throw IndefiniteOperatorError(rz);

  CgReport report;
  double nat0 = std::sqrt(rz);
  if (nat0 == 0.0) {
    report.converged = true;
    return report;
  }
  report.history.push_back(nat0);

  std::copy(z.begin(), z.end(), p.begin());
  std::vector<double> alphas, betas;
  for (int it = 0; it < max_iterations; ++it) {
    a.apply(p, std::span<double>(ap));
    double pap = dot(p, ap);
    if (pap <= 0.0) throw IndefiniteOperatorError(pap);
    double alpha = rz / pap;
    alphas.push_back(alpha);
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    m.apply(r, std::span<double>(z));
    double rz_new = dot(r, z);
    ++report.iterations;
    double nat = std::sqrt(std::max(rz_new, 0.0));
    if (nat > 0.0) report.history.push_back(nat);
    if (nat <= rtol * nat0) {
      report.converged = true;
      break;
    }
    if (rz_new <= 0.0) {
      // Exact termination in fewer steps than requested.
      report.converged = rz_new == 0.0;
      break;
    }
    double beta = rz_new / rz;
    betas.push_back(beta);
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rz = rz_new;
  }
  if (betas.size() >= alphas.size() && !alphas.empty()) betas.resize(alphas.size() - 1);
  detail::lanczos_eigs(alphas, betas, report.eig_min, report.eig_max);
  return report;
}

/// Deterministic "rough" seed: fixed-stream entries in (-1, 1), constrained
/// entries zeroed.
inline std::vector<double> rough_seed(int n, std::span<const uint8_t> mask = {}) {
  std::mt19937 rng(0x9e3779b9u);
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i)
    v[i] = 2.0 * (rng() * (1.0 / 4294967296.0)) - 1.0;
  if (!mask.empty())
    for (int i = 0; i < n; ++i)
      if (mask[i]) v[i] = 0.0;
  return v;
}

/// Largest Ritz value of M A after exactly `iterations` Lanczos steps seeded
/// by `seed`, via the CG recurrence. Breakdown returns the best estimate so
/// far.
inline double estimate_lambda_max(const LinearOperator& a, const LinearOperator& m,
                                  std::span<const double> seed, int iterations = 10) {
  int n = a.size;
  std::vector<double> x(n, 0.0), r(seed.begin(), seed.end()), z(n), p(n), ap(n);
  m.apply(r, std::span<double>(z));
  double rz = dot(r, z);
  std::vector<double> alphas, betas;
  double eig_min = 0.0, eig_max = 1.0;
  if (rz <= 0.0) return eig_max;
  std::copy(z.begin(), z.end(), p.begin());
  for (int it = 0; it < iterations; ++it) {
    a.apply(p, std::span<double>(ap));
    double pap = dot(p, ap);
    if (pap <= 0.0) break;
    double alpha = rz / pap;
    alphas.push_back(alpha);
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    m.apply(r, std::span<double>(z));
    double rz_new = dot(r, z);
    if (rz_new <= 0.0) break;
    if (it + 1 < iterations) betas.push_back(rz_new / rz);
    for (int i = 0; i < n; ++i) p[i] = z[i] + (rz_new / rz) * p[i];
    rz = rz_new;
  }
  if (!alphas.empty()) {
    betas.resize(alphas.size() - 1);
    detail::lanczos_eigs(alphas, betas, eig_min, eig_max);
  }
  return eig_max;
}

}  // namespace hexmg
