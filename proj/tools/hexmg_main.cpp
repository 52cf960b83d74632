// Command-line front end: solve configured problems, run the accuracy and
// throughput studies, or run the verification suite.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hexmg/problem.hpp"
#include "hexmg/study.hpp"
#include "hexmg/verify.hpp"
#include "hexmg/vtk.hpp"

namespace {

constexpr int kExitSolver = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct CommonArgs {
  std::string config_path;
  std::string output_dir = ".";
  int threads = 0;  // 0: leave the config value alone
  bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config) {
  auto* opt = cmd->add_option("--config", args.config_path, "problem configuration file");
  if (needs_config) opt->required();
  cmd->add_option("--output", args.output_dir, "output directory");
  cmd->add_option("--threads", args.threads, "operator thread count override");
  cmd->add_flag("--deterministic", args.deterministic,
                "bit-stable mode: fixed seeds and ordered reductions");
}

hexmg::ProblemConfig load_config(const CommonArgs& args) {
  hexmg::ProblemConfig cfg = hexmg::load_problem_config(args.config_path);
  if (args.threads > 0) cfg.threads = args.threads;
  if (args.deterministic) cfg.deterministic = true;
  return cfg;
}

std::ofstream open_output(const CommonArgs& args, const std::string& name) {
  std::filesystem::path dir(args.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream os(dir / name);
  if (!os) throw hexmg::IoError("cannot open '" + (dir / name).string() + "' for writing");
  return os;
}

int run_solve(const CommonArgs& args) {
  using clock = std::chrono::steady_clock;
  hexmg::ProblemConfig cfg = load_config(args);
  auto t0 = clock::now();
  hexmg::FemProblem problem(cfg);
  auto t1 = clock::now();

  std::ofstream log = open_output(args, cfg.case_id + "_log.txt");
  hexmg::ContinuationReport report;
  try {
    report = problem.solve();
  } catch (const std::exception& e) {
    std::cerr << "solve failed: " << e.what() << "\n";
    return kExitSolver;
  }
  auto t2 = clock::now();
  for (const auto& step : report.steps)
    for (const auto& rec : step.records) log << hexmg::format_record(rec) << "\n";

  double energy = problem.strain_energy();
  hexmg::StudyRecord rec;
  rec.case_id = cfg.case_id;
  rec.order = cfg.order;
  rec.refinement = 1;
  rec.dofs = problem.size();
  rec.energy = energy;
  rec.bytes_per_dof = problem.op().stored_bytes_per_dof();
  for (const auto& step : report.steps) {
    rec.newton_iterations += step.iterations;
    rec.cg_iterations += step.total_cg_iterations;
    for (const auto& it : step.records)
      rec.condition_max = std::max(rec.condition_max, it.condition_estimate);
  }
  rec.setup_seconds = std::chrono::duration<double>(t1 - t0).count();
  rec.solve_seconds = std::chrono::duration<double>(t2 - t1).count();
  rec.dofs_per_second = rec.solve_seconds > 0 ? rec.dofs / rec.solve_seconds : 0.0;

  std::ofstream csv = open_output(args, cfg.case_id + "_summary.csv");
  csv << hexmg::accuracy_csv_header() << "\n" << hexmg::accuracy_csv_row(rec) << "\n";

  if (cfg.write_vtk) {
    std::filesystem::path path = std::filesystem::path(args.output_dir) / (cfg.case_id + ".vtk");
    hexmg::write_vtk_file(path.string(), problem.mesh(), problem.solution());
  }
  std::cout << "solved " << cfg.case_id << ": dofs=" << rec.dofs
            << " strain_energy=" << hexmg::format_double(energy)
            << " newton_its=" << rec.newton_iterations << " cg_its=" << rec.cg_iterations
            << "\n";
  return 0;
}

int run_study_accuracy(const CommonArgs& args) {
  hexmg::ProblemConfig cfg = load_config(args);
  std::ofstream csv = open_output(args, cfg.case_id + "_accuracy.csv");
  hexmg::run_accuracy_study(cfg, csv, &std::cout);
  return 0;
}

int run_study_performance(const CommonArgs& args) {
  hexmg::ProblemConfig cfg = load_config(args);
  std::ofstream csv = open_output(args, cfg.case_id + "_performance.csv");
  hexmg::run_performance_study(cfg, csv, &std::cout);
  return 0;
}

int run_verify(const CommonArgs& args) {
  hexmg::VerifyOptions opts;
  if (args.threads > 0) opts.threads = args.threads;
  auto results = hexmg::run_verification(opts);
  size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  for (const auto& r : results)
    std::cout << (r.passed ? "PASS  " : "FAIL  ") << r.name
              << std::string(width - r.name.size() + 2, ' ') << r.detail << "\n";
  return hexmg::all_passed(results) ? 0 : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"matrix-free high-order finite elements for hyperelasticity"};
  app.require_subcommand(1);

  CommonArgs solve_args, acc_args, perf_args, verify_args;
  auto* solve_cmd = app.add_subcommand("solve", "solve a configured problem");
  add_common(solve_cmd, solve_args, true);
  auto* acc_cmd = app.add_subcommand("study-accuracy", "accuracy-per-DoF study");
  add_common(acc_cmd, acc_args, true);
  auto* perf_cmd = app.add_subcommand("study-performance", "operator throughput study");
  add_common(perf_cmd, perf_args, true);
  auto* verify_cmd = app.add_subcommand("verify", "run the invariant suite");
  add_common(verify_cmd, verify_args, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (solve_cmd->parsed()) return run_solve(solve_args);
    if (acc_cmd->parsed()) return run_study_accuracy(acc_args);
    if (perf_cmd->parsed()) return run_study_performance(perf_args);
    if (verify_cmd->parsed()) return run_verify(verify_args);
  } catch (const hexmg::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const hexmg::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}
