#pragma once

#include <memory>
#include <span>
#include <vector>

#include "hexmg/config.hpp"
#include "hexmg/multigrid.hpp"
#include "hexmg/nonlinear.hpp"
#include "hexmg/operator.hpp"

namespace hexmg {

/// A configured hyperelastic boundary-value problem: solution/geometry
/// meshes, operator, external load, and the multigrid preconditioner, with
/// load continuation on top.
class FemProblem {
 public:
  explicit FemProblem(const ProblemConfig& cfg) : config_(cfg) {
    int p = cfg.order;
    if (p < 1) throw ConfigError("order must be >= 1");
    int q = cfg.quadrature_points > 0 ? cfg.quadrature_points : p + 1;
    int geometry_order = cfg.geometry_order > 0 ? cfg.geometry_order : p;

    mesh_ = std::make_shared<BoxMesh>(build_box_mesh(cfg.extents, cfg.cells, p));
    basis_ = build_lagrange_basis(p, q);
    geo_mesh_ = geometry_order == p
                    ? mesh_
                    : std::make_shared<BoxMesh>(
                          build_box_mesh(cfg.extents, cfg.cells, geometry_order));
    geo_basis_ = build_lagrange_basis(geometry_order, basis_.rule);
    auto factors = std::make_shared<GeometricFactors>(
        compute_geometric_factors(*geo_mesh_, geo_basis_));

    for (Face f : cfg.fixed_faces) dirichlet_.push_back(DirichletBC{f, {true, true, true}, {}});
    auto constraints = std::make_shared<Constraints>(build_constraints(*mesh_, dirichlet_));

    op_ = std::make_shared<MatrixFreeOperator>(mesh_, basis_, factors, cfg.material(),
                                               cfg.storage, constraints);
    op_->set_threads(cfg.threads);

    std::vector<double> load((size_t)op_->size(), 0.0);
    if (cfg.traction_face != "none") {
      TractionBC bc;
      bc.face = detail::parse_face(cfg.traction_face, 0, "traction_face");
      bc.traction = cfg.traction;
      tractions_.push_back(bc);
      load = assemble_traction_load(*mesh_, basis_, *geo_mesh_, geo_basis_, tractions_);
    }
    if (cfg.body_force != std::array<double, 3>{0.0, 0.0, 0.0}) {
      auto bf = assemble_body_force_load(*mesh_, basis_, *factors, cfg.body_force);
      for (size_t i = 0; i < load.size(); ++i) load[i] += bf[i];
    }
    op_->set_external_load(std::move(load));

    hierarchy_ = build_hierarchy(op_, dirichlet_, {}, cfg.mg_pre_smooth, cfg.mg_post_smooth);
    u_.assign((size_t)op_->size(), 0.0);
  }

  int size() const { return op_->size(); }
  MatrixFreeOperator& op() { return *op_; }
  const MatrixFreeOperator& op() const { return *op_; }
  MultigridHierarchy& hierarchy() { return hierarchy_; }
  const BoxMesh& mesh() const { return *mesh_; }
  const std::vector<double>& solution() const { return u_; }
  std::vector<double>& solution() { return u_; }
  const std::vector<DirichletBC>& dirichlet() const { return dirichlet_; }

  /// Scales tractions, body forces and prescribed boundary values.
  void set_time(double t) {
    time_ = t;
    op_->set_load_scale(t);
  }

  void impose_dirichlet(std::span<double> u) const {
    const auto& c = *op_->constraints();
    for (size_t i = 0; i < u.size(); ++i)
      if (c.mask[i]) u[i] = time_ * c.values[i];
  }

  NonlinearSystem system() {
    NonlinearSystem sys;
    sys.size = op_->size();
    sys.residual = [this](std::span<const double> u, std::span<double> f) {
      op_->apply_residual(u, f);
    };
    sys.jacobian = [this](std::span<const double> du, std::span<double> out) {
      op_->apply_jacobian(du, out);
    };
    sys.prepare_preconditioner = [this] { hierarchy_.setup_numeric(); };
    sys.preconditioner = hierarchy_.preconditioner().apply;
    return sys;
  }

  NewtonConfig newton_config() const {
    NewtonConfig nc;
    nc.max_iterations = config_.newton_max_iterations;
    nc.rtol = config_.newton_rtol;
    nc.atol = config_.newton_atol;
    nc.linear_rtol = config_.linear_rtol;
    nc.linear_max_iterations = config_.linear_max_iterations;
    nc.use_line_search = config_.line_search;
    nc.load_steps = config_.load_steps;
    return sanitize(nc);
  }

  SolveReport solve_at_current_time(std::span<double> u, int load_step = 0) {
    impose_dirichlet(u);
    NonlinearSystem sys = system();
    NewtonConfig nc = newton_config();
    if (config_.solver == SolverKind::Lbfgs)
      return lbfgs_solve(sys, config_.lbfgs_memory, nc, u, config_.precond_refresh, load_step,
                         time_);
    return newton_solve(sys, nc, u, load_step, time_);
  }

  /// Full solve with load continuation; leaves the solution in `solution()`.
  ContinuationReport solve() {
    std::fill(u_.begin(), u_.end(), 0.0);
    auto report = load_continuation(
        [this](double t) { set_time(t); },
        [this](std::span<double> u, double, int step) {
          return solve_at_current_time(u, step);
        },
        config_.load_steps, u_);
    return report;
  }

  double strain_energy() const { return op_->total_strain_energy(u_); }
  double strain_energy(std::span<const double> u) const {
    return op_->total_strain_energy(u);
  }

 private:
  static NewtonConfig sanitize(NewtonConfig nc) {
    if (nc.max_iterations < 1 || nc.rtol <= 0 || nc.atol <= 0 || nc.linear_rtol <= 0 ||
        nc.load_steps < 1)
      throw ConfigError("solver tolerances must be positive and counts >= 1");
    return nc;
  }

  ProblemConfig config_;
  std::shared_ptr<BoxMesh> mesh_, geo_mesh_;
  Basis1D basis_, geo_basis_;
  std::vector<DirichletBC> dirichlet_;
  std::vector<TractionBC> tractions_;
  std::shared_ptr<MatrixFreeOperator> op_;
  MultigridHierarchy hierarchy_;
  std::vector<double> u_;
  double time_ = 1.0;
};

}  // namespace hexmg
