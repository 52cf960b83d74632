#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <span>
#include <sstream>
#include <vector>

#include "hexmg/cg.hpp"
#include "hexmg/errors.hpp"

namespace hexmg {

struct NewtonConfig {
  int max_iterations = 50;
  double rtol = 1e-8;
  double atol = 1e-10;
  double linear_rtol = 1e-3;  // natural norm
  int linear_max_iterations = 500;
  bool use_line_search = true;
  int load_steps = 1;
};

struct IterationRecord {
  int load_step = 0;
  double time = 1.0;
  int iteration = 0;
  double fnorm = 0.0;
  double fnorm_rel = 0.0;
  int cg_iterations = 0;
  bool cg_converged = true;
  double condition_estimate = 0.0;
  double alpha = 1.0;
};

/// Machine-readable per-iteration line.
inline std::string format_record(const IterationRecord& r) {
  std::ostringstream os;
  os.precision(10);
  os << "step=" << r.load_step << " t=" << r.time << " iter=" << r.iteration
     << " fnorm=" << r.fnorm << " fnorm_rel=" << r.fnorm_rel << " cg_its=" << r.cg_iterations
     << " cg_converged=" << (r.cg_converged ? 1 : 0) << " cond=" << r.condition_estimate
     << " alpha=" << r.alpha;
  return os.str();
}

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  int total_cg_iterations = 0;
  double final_fnorm = 0.0;
  std::vector<IterationRecord> records;
};

/// Callback bundle a nonlinear solver drives. `residual` is also the latent
/// objective gradient; `jacobian` is linearized wherever the residual was
/// last evaluated; `prepare_preconditioner` may assume the same.
struct NonlinearSystem {
  int size = 0;
  std::function<void(std::span<const double>, std::span<double>)> residual;
  std::function<void(std::span<const double>, std::span<double>)> jacobian;
  std::function<void()> prepare_preconditioner;
  std::function<void(std::span<const double>, std::span<double>)> preconditioner;
};

struct LineSearchResult {
  double alpha = 1.0;
  double g0 = 0.0;       // F(u)^T du
  double g_trial = 0.0;  // g at the secant sample point
  double g_alpha = 0.0;  // g at the accepted alpha
  bool ascent_warning = false;
  int backtracks = 0;
};

/// Critical-point line search: one secant step on g(a) = F(u + a du)^T du
/// from the samples g(0) and g(1), clamped to [0.1, 2]. Non-finite trial
/// evaluations halve the trial point up to five times before giving up.
/// `g_eval` returns g(a), or NaN where the residual cannot be evaluated.
inline LineSearchResult critical_point_line_search(const std::function<double(double)>& g_eval,
                                                   double g0) {
  constexpr int kMaxHalvings = 5;
  LineSearchResult res;
  res.g0 = g0;

  double trial = 1.0;
  double g1 = g_eval(trial);
  int halvings = 0;
  while (!std::isfinite(g1) && halvings < kMaxHalvings) {
    trial *= 0.5;
    g1 = g_eval(trial);
    ++halvings;
  }
  if (!std::isfinite(g1))
    throw StepRejectedError("residual not evaluable along the search direction");
  res.g_trial = g1;
  res.backtracks = halvings;

  double alpha;
  if (g0 >= 0.0) {
    res.ascent_warning = true;
    alpha = trial;
  } else if (g1 == g0) {
    alpha = trial;  // degenerate secant
  } else {
    alpha = trial * g0 / (g0 - g1);
    alpha = std::clamp(alpha, 0.1, 2.0);
    if (halvings > 0) alpha = std::min(alpha, trial);
  }

  if (alpha == trial) {
    res.alpha = alpha;
    res.g_alpha = g1;
    return res;
  }
  double ga = g_eval(alpha);
  while (!std::isfinite(ga) && halvings < kMaxHalvings) {
    alpha *= 0.5;
    ga = g_eval(alpha);
    ++halvings;
  }
  if (!std::isfinite(ga))
    throw StepRejectedError("residual not evaluable at the line search result");
  res.alpha = alpha;
  res.g_alpha = ga;
  res.backtracks = halvings;
  return res;
}

namespace detail {

/// g(a) evaluator that leaves F(u + a du) of the last call in `f_trial`.
/// Inverted-element failures surface as NaN so the search can backtrack.
struct DirectionalResidual {
  NonlinearSystem& sys;
  std::span<const double> u;
  std::span<const double> du;
  std::vector<double> u_trial, f_trial;

  DirectionalResidual(NonlinearSystem& s, std::span<const double> u_,
                      std::span<const double> du_)
      : sys(s), u(u_), du(du_), u_trial(s.size), f_trial(s.size) {}

  double operator()(double alpha) {
    for (int i = 0; i < sys.size; ++i) u_trial[i] = u[i] + alpha * du[i];
    try {
      sys.residual(u_trial, f_trial);
    } catch (const InvertedElementError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    double g = dot(f_trial, du);
    return std::isfinite(g) ? g : std::numeric_limits<double>::quiet_NaN();
  }
};

}  // namespace detail

/// Newton-CG: each step solves J du = -F with preconditioned CG to the
/// configured natural-norm tolerance, then takes a critical-point line search
/// step. The preconditioner is rebuilt at every linearization point.
inline SolveReport newton_solve(NonlinearSystem& sys, const NewtonConfig& config,
                                std::span<double> u, int load_step = 0, double time = 1.0) {
  int n = sys.size;
  std::vector<double> f(n), rhs(n), du(n);
  sys.residual(u, f);
  double fnorm0 = norm2(f);
  SolveReport report;
  if (fnorm0 <= config.atol) {
    report.converged = true;
    report.final_fnorm = fnorm0;
    return report;
  }

  LinearOperator jac{n, sys.jacobian};
  LinearOperator precond{n, sys.preconditioner};
  double fnorm = fnorm0;
  for (int it = 1; it <= config.max_iterations; ++it) {
    sys.prepare_preconditioner();
    for (int i = 0; i < n; ++i) rhs[i] = -f[i];
    std::fill(du.begin(), du.end(), 0.0);
    CgReport cg = cg_solve(jac, precond, rhs, du, config.linear_rtol,
                           config.linear_max_iterations);

    IterationRecord rec;
    rec.load_step = load_step;
    rec.time = time;
    rec.iteration = it;
    rec.cg_iterations = cg.iterations;
    rec.cg_converged = cg.converged;
    rec.condition_estimate = cg.condition();
    report.total_cg_iterations += cg.iterations;

    detail::DirectionalResidual g(sys, u, du);
    if (config.use_line_search) {
      LineSearchResult ls = critical_point_line_search(g, dot(f, du));
      rec.alpha = ls.alpha;
    } else {
      double g1 = g(1.0);
      if (!std::isfinite(g1))
        throw StepRejectedError("residual not evaluable at the full Newton step");
      rec.alpha = 1.0;
    }
    for (int i = 0; i < n; ++i) u[i] += rec.alpha * du[i];
    // The search's last evaluation was at the accepted point.
    std::copy(g.f_trial.begin(), g.f_trial.end(), f.begin());
    fnorm = norm2(f);
    rec.fnorm = fnorm;
    rec.fnorm_rel = fnorm / fnorm0;
    report.records.push_back(rec);
    report.iterations = it;
    if (fnorm <= std::max(config.rtol * fnorm0, config.atol)) {
      report.converged = true;
      break;
    }
  }
  // Leave the quadrature state at the accepted iterate.
  sys.residual(u, f);
  report.final_fnorm = norm2(f);
  return report;
}

/// L-BFGS with the V-cycle (or any preconditioner) as the initial inverse
/// Hessian in the two-loop recursion; memory 0 degenerates to preconditioned
/// steepest descent. `refresh_interval` > 0 rebuilds the preconditioner at
/// the current iterate every so many iterations; 0 keeps the initial one.
inline SolveReport lbfgs_solve(NonlinearSystem& sys, int memory, const NewtonConfig& config,
                               std::span<double> u, int refresh_interval = 0,
                               int load_step = 0, double time = 1.0) {
  int n = sys.size;
  std::vector<double> f(n), q(n), d(n);
  sys.residual(u, f);
  double fnorm0 = norm2(f);
  SolveReport report;
  if (fnorm0 <= config.atol) {
    report.converged = true;
    report.final_fnorm = fnorm0;
    return report;
  }
  sys.prepare_preconditioner();

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> alpha_coef;

  double fnorm = fnorm0;
  for (int it = 1; it <= config.max_iterations; ++it) {
    // Two-loop recursion: d = -H f with H0 the preconditioner.
    q.assign(f.begin(), f.end());
    int h = (int)s_hist.size();
    alpha_coef.assign(h, 0.0);
    for (int i = h - 1; i >= 0; --i) {
      alpha_coef[i] = rho_hist[i] * dot(s_hist[i], q);
      for (int k = 0; k < n; ++k) q[k] -= alpha_coef[i] * y_hist[i][k];
    }
    sys.preconditioner(q, d);
    for (int i = 0; i < h; ++i) {
      double beta = rho_hist[i] * dot(y_hist[i], d);
      for (int k = 0; k < n; ++k) d[k] += (alpha_coef[i] - beta) * s_hist[i][k];
    }
    for (int k = 0; k < n; ++k) d[k] = -d[k];

    detail::DirectionalResidual g(sys, u, d);
    LineSearchResult ls = critical_point_line_search(g, dot(f, d));

    IterationRecord rec;
    rec.load_step = load_step;
    rec.time = time;
    rec.iteration = it;
    rec.alpha = ls.alpha;

    std::vector<double> s(n), y(n);
    for (int k = 0; k < n; ++k) {
      s[k] = ls.alpha * d[k];
      u[k] += s[k];
      y[k] = g.f_trial[k] - f[k];
    }
    std::copy(g.f_trial.begin(), g.f_trial.end(), f.begin());
    double sy = dot(s, y);
    if (memory > 0 && sy > 0.0) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if ((int)s_hist.size() > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    fnorm = norm2(f);
    rec.fnorm = fnorm;
    rec.fnorm_rel = fnorm / fnorm0;
    report.records.push_back(rec);
    report.iterations = it;
    if (fnorm <= std::max(config.rtol * fnorm0, config.atol)) {
      report.converged = true;
      break;
    }
    if (refresh_interval > 0 && it % refresh_interval == 0) {
      sys.residual(u, f);  // pin the state to the current iterate
      sys.prepare_preconditioner();
    }
  }
  sys.residual(u, f);
  report.final_fnorm = norm2(f);
  return report;
}

struct ContinuationReport {
  bool converged = false;
  std::vector<double> times;
  std::vector<SolveReport> steps;

  int total_iterations() const {
    int n = 0;
    for (const auto& s : steps) n += s.iterations;
    return n;
  }
};

/// Incremental loading over t in [0, 1]: loads (and scaled boundary values)
/// at t_k = k/N, each step warm-started from the previous solution with no
/// extrapolation. A failed step bisects the increment up to `max_bisections`
/// times before giving up.
inline ContinuationReport load_continuation(
    const std::function<void(double)>& set_time,
    const std::function<SolveReport(std::span<double>, double, int)>& solve_step, int num_steps,
    std::span<double> u, int max_bisections = 3) {
  if (num_steps < 1) throw std::invalid_argument("need at least one load step");
  ContinuationReport report;
  std::vector<double> saved(u.begin(), u.end());
  double t_done = 0.0;
  for (int step = 1; step <= num_steps; ++step) {
    double target = (double)step / num_steps;
    int bisections = 0;
    double t_try = target;
    while (true) {
      set_time(t_try);
      std::copy(saved.begin(), saved.end(), u.begin());
      bool ok = false;
      try {
        SolveReport r = solve_step(u, t_try, step);
        ok = r.converged;
        if (ok) {
          report.steps.push_back(std::move(r));
          report.times.push_back(t_try);
        }
      } catch (const StepRejectedError&) {
        ok = false;
      } catch (const InvertedElementError&) {
        ok = false;
      }
      if (ok) {
        t_done = t_try;
        saved.assign(u.begin(), u.end());
        if (t_try == target) break;
        t_try = target;
      } else {
        if (++bisections > max_bisections)
          throw StepRejectedError("load step failed after " +
                                  std::to_string(max_bisections) + " bisections");
        t_try = 0.5 * (t_done + t_try);
      }
    }
  }
  report.converged = true;
  return report;
}

}  // namespace hexmg
