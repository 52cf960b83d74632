#pragma once

#include <memory>
#include <span>
#include <vector>

#include "hexmg/assembly.hpp"
#include "hexmg/coarse_solver.hpp"
#include "hexmg/operator.hpp"
#include "hexmg/smoother.hpp"

namespace hexmg {

/// p-halving coarsening schedule down to linear elements: p, ceil(p/2), .., 1.
inline std::vector<int> default_schedule(int p) {
  std::vector<int> orders{p};
  while (orders.back() > 1) orders.push_back((orders.back() + 1) / 2);
  return orders;
}

/// Coarse-to-fine transfer on a shared element grid. Prolongation gathers the
/// coarse field, interpolates nodal values with the 1D coarse-on-fine-nodes
/// tabulation, and scatters with inverse fine multiplicity; restriction is the
/// exact transpose.
struct Prolongation {
  std::vector<double> ctof;  // (pf+1) x (pc+1) 1D nodal tabulation
  int fine_nodes_1d = 0, coarse_nodes_1d = 0;
  std::vector<double> inv_multiplicity;  // per fine node

  void apply(const ElementRestriction& fine, const ElementRestriction& coarse,
             std::span<const double> xc, std::span<double> xf) const {
    ElementVector evc, evf = ElementVector::zeros(fine.num_elements, fine_nodes_1d);
    coarse.gather(xc, evc);
    std::vector<double> scratch(2 * (size_t)fine_nodes_1d * fine_nodes_1d * fine_nodes_1d);
    int nf = fine_nodes_1d, nc = coarse_nodes_1d;
    for (int e = 0; e < fine.num_elements; ++e)
      for (int c = 0; c < 3; ++c) {
        const double* in = evc.slab(e, c);
        double* out = evf.slab(e, c);
        double* t1 = scratch.data();
        double* t2 = scratch.data() + scratch.size() / 2;
        detail::contract(ctof.data(), nf, nc, false, 0, in, {nc, nc, nc}, t1);
        detail::contract(ctof.data(), nf, nc, false, 1, t1, {nf, nc, nc}, t2);
        detail::contract(ctof.data(), nf, nc, false, 2, t2, {nf, nf, nc}, out);
      }
    std::fill(xf.begin(), xf.end(), 0.0);
    fine.scatter_add(evf, xf);
    for (int node = 0; node < fine.num_nodes; ++node)
      for (int c = 0; c < 3; ++c) xf[3 * (size_t)node + c] *= inv_multiplicity[node];
  }

  void apply_transpose(const ElementRestriction& fine, const ElementRestriction& coarse,
                       std::span<const double> xf, std::span<double> xc) const {
    std::vector<double> scaled(xf.begin(), xf.end());
    for (int node = 0; node < fine.num_nodes; ++node)
      for (int c = 0; c < 3; ++c) scaled[3 * (size_t)node + c] *= inv_multiplicity[node];
    ElementVector evf, evc = ElementVector::zeros(coarse.num_elements, coarse_nodes_1d);
    fine.gather(scaled, evf);
    std::vector<double> scratch(2 * (size_t)fine_nodes_1d * fine_nodes_1d * fine_nodes_1d);
    int nf = fine_nodes_1d, nc = coarse_nodes_1d;
    for (int e = 0; e < fine.num_elements; ++e)
      for (int c = 0; c < 3; ++c) {
        const double* in = evf.slab(e, c);
        double* out = evc.slab(e, c);
        double* t1 = scratch.data();
        double* t2 = scratch.data() + scratch.size() / 2;
        detail::contract(ctof.data(), nf, nc, true, 2, in, {nf, nf, nf}, t1);
        detail::contract(ctof.data(), nf, nc, true, 1, t1, {nf, nf, nc}, t2);
        detail::contract(ctof.data(), nf, nc, true, 0, t2, {nf, nc, nc}, out);
      }
    std::fill(xc.begin(), xc.end(), 0.0);
    coarse.scatter_add(evc, xc);
  }
};

struct MgLevel {
  int order = 0;
  std::shared_ptr<const BoxMesh> mesh;
  std::shared_ptr<MatrixFreeOperator> op;
  ChebyshevSmoother smoother;   // unused on the coarsest level
  Prolongation from_coarser;    // transfer from the next-coarser level (levels > 0)
};

/// Ordered multigrid levels sharing one quadrature state: matrix-free
/// operators down to p = 1, where the operator is assembled and
/// Cholesky-factored. Coarse bases are tabulated on the fine quadrature
/// points, which makes each coarse operator the exact Galerkin restriction.
class MultigridHierarchy {
 public:
  std::vector<MgLevel> levels;  // [0] = coarsest, back() = finest
  int pre_smooth = 1;
  int post_smooth = 1;

  int num_levels() const { return (int)levels.size(); }
  const MgLevel& finest() const { return levels.back(); }

  /// Numeric setup at the current linearization state: refreshed Jacobi
  /// diagonals and Chebyshev calibration per level, coarse refill and
  /// refactorization.
  void setup_numeric() {
    for (int k = 1; k < num_levels(); ++k) {
      auto& level = levels[k];
      std::vector<double> diag(level.op->size());
      level.op->extract_diagonal(diag);
      std::span<const uint8_t> mask;
      if (level.op->constraints()) mask = level.op->constraints()->mask;
      level.smoother =
          ChebyshevSmoother::create(level_operator(k), diag, mask, smoother_degree_);
    }
    if (coarse_.tmpl.n == 0) coarse_ = coo_symbolic(*levels[0].op);
    coo_numeric(*levels[0].op, coarse_);
    coarse_solver_.factorize(coarse_.matrix);
  }

  LinearOperator level_operator(int k) const {
    const auto* op = levels[k].op.get();
    return {op->size(), [op](std::span<const double> x, std::span<double> y) {
              op->apply_jacobian(x, y);
            }};
  }

  const SparseMatrix& coarse_matrix() const { return coarse_.matrix; }

  void prolong(int coarse_level, std::span<const double> xc, std::span<double> xf) const {
    const auto& fine = levels[coarse_level + 1];
    fine.from_coarser.apply(fine.op->restriction(), levels[coarse_level].op->restriction(),
                            xc, xf);
  }

  void restrict_to(int coarse_level, std::span<const double> xf, std::span<double> xc) const {
    const auto& fine = levels[coarse_level + 1];
    fine.from_coarser.apply_transpose(fine.op->restriction(),
                                      levels[coarse_level].op->restriction(), xf, xc);
  }

  /// One V-cycle from the finest level; linear and symmetric in b - A x0.
  void v_cycle(std::span<const double> b, std::span<double> x) const {
    ensure_workspace();
    cycle(num_levels() - 1, b, x);
    const auto* constraints = finest().op->constraints().get();
    if (constraints)
      for (size_t i = 0; i < x.size(); ++i)
        if (constraints->mask[i]) x[i] = b[i];
  }

  /// The V-cycle as a CG preconditioner (zero initial guess).
  LinearOperator preconditioner() const {
    return {finest().op->size(), [this](std::span<const double> r, std::span<double> z) {
              std::fill(z.begin(), z.end(), 0.0);
              v_cycle(r, z);
            }};
  }

 private:
  void ensure_workspace() const {
    if (residual_.size() == levels.size()) return;
    residual_.resize(levels.size());
    correction_.resize(levels.size());
    restricted_.resize(levels.size());
    for (size_t k = 0; k < levels.size(); ++k) {
      residual_[k].resize(levels[k].op->size());
      correction_[k].resize(levels[k].op->size());
      restricted_[k].resize(levels[k].op->size());
    }
  }

  void cycle(int k, std::span<const double> b, std::span<double> x) const {
    if (k == 0) {
      coarse_solver_.solve(b, x);
      return;
    }
    const auto& level = levels[k];
    LinearOperator a = level_operator(k);
    for (int s = 0; s < pre_smooth; ++s) level.smoother.apply(a, b, x);

    auto& r = residual_[k];
    a.apply(x, r);
    for (size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];

    auto& rc = restricted_[k - 1];
    restrict_to(k - 1, r, rc);
    mask_level(k - 1, rc);

    auto& ec = correction_[k - 1];
    std::fill(ec.begin(), ec.end(), 0.0);
    cycle(k - 1, rc, ec);

    auto& corr = residual_[k];  // reuse as the prolonged correction
    prolong(k - 1, ec, corr);
    mask_level(k, corr);
    for (size_t i = 0; i < corr.size(); ++i) x[i] += corr[i];

    for (int s = 0; s < post_smooth; ++s) level.smoother.apply(a, b, x);
  }

  void mask_level(int k, std::vector<double>& v) const {
    const auto* constraints = levels[k].op->constraints().get();
    if (!constraints) return;
    for (size_t i = 0; i < v.size(); ++i)
      if (constraints->mask[i]) v[i] = 0.0;
  }

  CooAssembly coarse_;
  CholeskyCoarseSolver coarse_solver_;
  int smoother_degree_ = 2;
  mutable std::vector<std::vector<double>> residual_, correction_, restricted_;
};

/// Builds the level stack under `fine`. Every coarse operator shares the fine
/// geometric factors and quadrature state; Dirichlet sets are re-derived on
/// each coarse lattice from the same face descriptors.
inline MultigridHierarchy build_hierarchy(std::shared_ptr<MatrixFreeOperator> fine,
                                          const std::vector<DirichletBC>& bcs,
                                          std::vector<int> schedule = {},
                                          int pre_smooth = 1, int post_smooth = 1) {
  if (schedule.empty()) schedule = default_schedule(fine->basis().order);
  if (schedule.front() != fine->basis().order)
    throw std::invalid_argument("schedule must start at the fine order");
  for (size_t i = 1; i < schedule.size(); ++i)
    if (schedule[i] >= schedule[i - 1])
      throw std::invalid_argument("schedule orders must strictly decrease");
  if (schedule.back() != 1) throw std::invalid_argument("schedule must end at order 1");

  MultigridHierarchy h;
  h.pre_smooth = pre_smooth;
  h.post_smooth = post_smooth;
  h.levels.resize(schedule.size());

  auto geometry = std::shared_ptr<const GeometricFactors>(fine, &fine->geometry());
  auto state = fine->state();
  const BoxMesh& fine_mesh = fine->mesh();

  for (size_t s = 0; s < schedule.size(); ++s) {
    int level_idx = (int)(schedule.size() - 1 - s);
    MgLevel& level = h.levels[level_idx];
    level.order = schedule[s];
    if (s == 0) {
      level.mesh = std::shared_ptr<const BoxMesh>(fine, &fine->mesh());
      level.op = fine;
      continue;
    }
    auto mesh = std::make_shared<BoxMesh>(
        build_box_mesh(fine_mesh.extents, fine_mesh.counts, schedule[s]));
    Basis1D basis = build_lagrange_basis(schedule[s], fine->basis().rule);
    auto constraints = std::make_shared<Constraints>(build_constraints(*mesh, bcs));
    level.mesh = mesh;
    level.op = std::make_shared<MatrixFreeOperator>(mesh, std::move(basis), geometry,
                                                    fine->material(), fine->storage(),
                                                    std::move(constraints), state);
    level.op->set_threads(fine->threads());
  }

  // 1D coarse-to-fine nodal tabulations for each transfer.
  for (size_t k = 1; k < h.levels.size(); ++k) {
    auto& fine_level = h.levels[k];
    auto& coarse_level = h.levels[k - 1];
    Prolongation p;
    p.fine_nodes_1d = fine_level.order + 1;
    p.coarse_nodes_1d = coarse_level.order + 1;
    p.ctof = lagrange_values(gauss_lobatto_nodes(coarse_level.order),
                             gauss_lobatto_nodes(fine_level.order));
    const auto& mult = fine_level.op->restriction().multiplicity;
    p.inv_multiplicity.resize(mult.size());
    for (size_t i = 0; i < mult.size(); ++i) p.inv_multiplicity[i] = 1.0 / mult[i];
    fine_level.from_coarser = std::move(p);
  }
  return h;
}

}  // namespace hexmg
