#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "hexmg/assembly.hpp"
#include "hexmg/problem.hpp"

namespace hexmg {

/// Shortest round-trip-exact decimal form, so equal doubles always print the
/// same bytes.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string csv_row(const std::vector<std::string>& cells) {
  std::string row;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ",";
    row += cells[i];
  }
  return row;
}

struct StudyRecord {
  std::string case_id;
  int order = 0;
  int refinement = 0;
  long dofs = 0;
  double energy = 0.0;
  double rel_error = 0.0;
  int newton_iterations = 0;
  int cg_iterations = 0;
  double condition_max = 0.0;
  double bytes_per_dof = 0.0;
  double setup_seconds = 0.0;
  double solve_seconds = 0.0;
  double dofs_per_second = 0.0;
};

// Wall-time derived columns come last; determinism comparisons drop them.
inline std::string accuracy_csv_header() {
  return "case_id,order,refinement,dofs,strain_energy,rel_energy_error,newton_iterations,"
         "cg_iterations,condition_max,bytes_per_dof,setup_seconds,solve_seconds,"
         "dofs_per_second";
}

inline std::string accuracy_csv_row(const StudyRecord& r) {
  return csv_row({r.case_id, std::to_string(r.order), std::to_string(r.refinement),
                  std::to_string(r.dofs), format_double(r.energy), format_double(r.rel_error),
                  std::to_string(r.newton_iterations), std::to_string(r.cg_iterations),
                  format_double(r.condition_max), format_double(r.bytes_per_dof),
                  format_double(r.setup_seconds), format_double(r.solve_seconds),
                  format_double(r.dofs_per_second)});
}

namespace detail {

inline ProblemConfig case_config(const ProblemConfig& base, const StudyCase& c) {
  ProblemConfig cfg = base;
  cfg.case_id = c.id();
  cfg.order = c.order;
  for (int d = 0; d < 3; ++d) cfg.cells[d] = base.cells[d] * c.refinement;
  cfg.study_cases.clear();
  return cfg;
}

struct CaseResult {
  StudyRecord record;
  double energy = 0.0;
};

inline CaseResult run_case(const ProblemConfig& cfg, const StudyCase& c) {
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  FemProblem problem(cfg);
  auto t1 = clock::now();
  ContinuationReport report = problem.solve();
  auto t2 = clock::now();

  CaseResult out;
  out.energy = problem.strain_energy();
  StudyRecord& r = out.record;
  r.case_id = c.id();
  r.order = c.order;
  r.refinement = c.refinement;
  r.dofs = problem.size();
  r.energy = out.energy;
  r.bytes_per_dof = problem.op().stored_bytes_per_dof();
  for (const auto& step : report.steps) {
    r.newton_iterations += step.iterations;
    r.cg_iterations += step.total_cg_iterations;
    for (const auto& it : step.records)
      r.condition_max = std::max(r.condition_max, it.condition_estimate);
  }
  r.setup_seconds = std::chrono::duration<double>(t1 - t0).count();
  r.solve_seconds = std::chrono::duration<double>(t2 - t1).count();
  r.dofs_per_second = r.solve_seconds > 0 ? r.dofs / r.solve_seconds : 0.0;
  return out;
}

}  // namespace detail

/// Accuracy-per-DoF study: solves every (order, refinement) case plus the
/// overkill reference and reports relative strain-energy error against it.
inline std::vector<StudyRecord> run_accuracy_study(const ProblemConfig& base,
                                                   std::ostream& csv,
                                                   std::ostream* log = nullptr) {
  if (base.study_cases.empty()) throw ConfigError("study_cases must list at least one case");
  std::set<std::string> seen;
  for (const auto& c : base.study_cases)
    if (!seen.insert(c.id()).second)
      throw ConfigError("duplicate study case '" + c.id() + "'");
  if (seen.count(base.study_reference.id()))
    throw ConfigError("reference case duplicates a study case");

  // Reference first; its failure aborts the study.
  if (log) *log << "reference case " << base.study_reference.id() << "\n";
  detail::CaseResult ref =
      detail::run_case(detail::case_config(base, base.study_reference), base.study_reference);
  if (ref.energy == 0.0) throw StepRejectedError("reference case produced zero energy");

  std::vector<StudyRecord> records;
  csv << accuracy_csv_header() << "\n";
  for (const auto& c : base.study_cases) {
    if (log) *log << "case " << c.id() << "\n";
    detail::CaseResult res = detail::run_case(detail::case_config(base, c), c);
    res.record.rel_error = std::abs(res.energy - ref.energy) / std::abs(ref.energy);
    csv << accuracy_csv_row(res.record) << "\n";
    records.push_back(res.record);
  }
  return records;
}

struct PerformanceRecord {
  std::string case_id;
  std::string representation;
  int order = 0;
  int cells = 0;
  long dofs = 0;
  long nnz = 0;
  double bytes_per_dof = 0.0;
  int applies = 0;
  double seconds = 0.0;
  double dofs_per_second = 0.0;
  std::string status = "ok";
};

inline std::string performance_csv_header() {
  return "case_id,representation,order,cells,dofs,nnz,bytes_per_dof,applies,status,seconds,"
         "dofs_per_second";
}

inline std::string performance_csv_row(const PerformanceRecord& r) {
  return csv_row({r.case_id, r.representation, std::to_string(r.order),
                  std::to_string(r.cells), std::to_string(r.dofs), std::to_string(r.nnz),
                  format_double(r.bytes_per_dof), std::to_string(r.applies), r.status,
                  format_double(r.seconds), format_double(r.dofs_per_second)});
}

/// Operator-application throughput: repeated Jacobian applies at the zero
/// linearization state after a discarded warm-up, for matrix-free and
/// assembled representations. Out-of-memory cases become failed rows.
inline std::vector<PerformanceRecord> run_performance_study(const ProblemConfig& base,
                                                            std::ostream& csv,
                                                            std::ostream* log = nullptr) {
  using clock = std::chrono::steady_clock;
  std::vector<PerformanceRecord> records;
  csv << performance_csv_header() << "\n";
  for (int order : base.perf_orders) {
    for (long target : base.perf_target_dofs) {
      // Cube with ~target DoFs: 3 (p n + 1)^3 ~= target.
      int n = std::max(1, (int)std::lround((std::cbrt(target / 3.0) - 1.0) / order));
      for (const auto& repr : base.perf_representations) {
        PerformanceRecord rec;
        rec.representation = repr;
        rec.order = order;
        rec.cells = n;
        rec.case_id = "p" + std::to_string(order) + "n" + std::to_string(n) + "_" + repr;
        if (log) *log << "perf case " << rec.case_id << "\n";
        try {
          ProblemConfig cfg = base;
          cfg.order = order;
          cfg.cells = {n, n, n};
          cfg.extents = {1.0, 1.0, 1.0};
          FemProblem problem(cfg);
          rec.dofs = problem.size();
          auto& op = problem.op();
          std::vector<double> u(problem.size(), 0.0), x(problem.size()), y(problem.size());
          problem.impose_dirichlet(u);
          op.apply_residual(u, x);  // populate the linearization state
          for (size_t i = 0; i < x.size(); ++i) x[i] = 1e-3 * std::sin(0.7 * (double)i);

          auto time_applies = [&](auto&& apply) {
            for (int w = 0; w < 3; ++w) apply();  // discarded warm-up
            auto t0 = clock::now();
            for (int k = 0; k < base.perf_repeats; ++k) apply();
            return std::chrono::duration<double>(clock::now() - t0).count();
          };

          if (repr == "matrix-free") {
            rec.bytes_per_dof = op.stored_bytes_per_dof();
            rec.seconds = time_applies([&] { op.apply_jacobian(x, y); });
          } else {
            CooAssembly coo = coo_symbolic(op);
            coo_numeric(op, coo);
            rec.nnz = (long)coo.matrix.nnz();
            rec.bytes_per_dof =
                (rec.nnz * (sizeof(double) + sizeof(int)) +
                 (double)coo.matrix.row_offsets.size() * sizeof(int) +
                 2.0 * rec.dofs * sizeof(double)) /
                rec.dofs;
            rec.seconds = time_applies([&] { coo.matrix.matvec(x, y); });
          }
          rec.applies = base.perf_repeats;
          rec.dofs_per_second =
              rec.seconds > 0 ? (double)rec.dofs * rec.applies / rec.seconds : 0.0;
        } catch (const std::bad_alloc&) {
          rec.status = "out-of-memory";
        }
        csv << performance_csv_row(rec) << "\n";
        records.push_back(rec);
      }
    }
  }
  return records;
}

}  // namespace hexmg
