#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hexmg/basis.hpp"
#include "hexmg/errors.hpp"
#include "hexmg/material.hpp"
#include "hexmg/mesh.hpp"
#include "hexmg/parallel.hpp"

namespace hexmg {

struct DirichletBC {
  Face face = Face::XMinus;
  std::array<bool, 3> components{true, true, true};
  std::array<double, 3> value{0.0, 0.0, 0.0};
};

struct TractionBC {
  Face face = Face::XPlus;
  std::array<double, 3> traction{0.0, 0.0, 0.0};  // per unit reference area
};

/// Per-DoF constraint mask and prescribed values (at unit load scale).
struct Constraints {
  std::vector<uint8_t> mask;
  std::vector<double> values;

  bool constrained(size_t dof) const { return !mask.empty() && mask[dof] != 0; }
};

inline Constraints build_constraints(const BoxMesh& mesh,
                                     const std::vector<DirichletBC>& bcs) {
  Constraints c;
  c.mask.assign((size_t)mesh.num_dofs(), 0);
  c.values.assign((size_t)mesh.num_dofs(), 0.0);
  for (const auto& bc : bcs) {
    for (int node : select_boundary_nodes(mesh, bc.face)) {
      for (int comp = 0; comp < 3; ++comp) {
        if (!bc.components[comp]) continue;
        size_t dof = 3 * (size_t)node + comp;
        if (c.mask[dof] && c.values[dof] != bc.value[comp])
          throw std::invalid_argument(
              "conflicting Dirichlet values on overlapping boundary sets");
        c.mask[dof] = 1;
        c.values[dof] = bc.value[comp];
      }
    }
  }
  return c;
}

/// Linearization data written by residual evaluations and read by Jacobian
/// applies; shared between all multigrid levels built on the same quadrature
/// points.
struct QuadratureStateStore {
  int stride = 0;
  bool valid = false;
  std::vector<double> data;  // (element, point, stride)
};

/// Matrix-free residual/Jacobian operator: restriction, tensor basis, and
/// pointwise material evaluation composed over elements. Constrained rows act
/// as the identity in Jacobian mode and as satisfied constraints (zero
/// residual) in residual mode.
class MatrixFreeOperator {
 public:
  MatrixFreeOperator(std::shared_ptr<const BoxMesh> mesh, Basis1D basis,
                     std::shared_ptr<const GeometricFactors> geometry, NeoHookean material,
                     JacobianStorage storage,
                     std::shared_ptr<const Constraints> constraints = nullptr,
                     std::shared_ptr<QuadratureStateStore> state = nullptr)
      : mesh_(std::move(mesh)),
        basis_(std::move(basis)),
        geometry_(std::move(geometry)),
        material_(material),
        storage_(storage),
        constraints_(std::move(constraints)),
        state_(std::move(state)) {
    restriction_ = build_restriction(*mesh_);
    if (geometry_->num_elements != restriction_.num_elements ||
        geometry_->points_per_element != basis_.num_points_3d())
      throw std::invalid_argument("geometric factors do not match basis quadrature");
    if (!state_) state_ = std::make_shared<QuadratureStateStore>();
    int stride = quadrature_state_stride(storage_);
    size_t need = (size_t)restriction_.num_elements * basis_.num_points_3d() * stride;
    if (state_->data.size() != need) {
      state_->stride = stride;
      state_->data.assign(need, 0.0);
      state_->valid = false;
    }
    tabulation_ = dense_tabulation(basis_);
  }

  int size() const { return 3 * restriction_.num_nodes; }
  int num_elements() const { return restriction_.num_elements; }
  int points_per_element() const { return basis_.num_points_3d(); }
  const BoxMesh& mesh() const { return *mesh_; }
  const Basis1D& basis() const { return basis_; }
  const ElementRestriction& restriction() const { return restriction_; }
  const GeometricFactors& geometry() const { return *geometry_; }
  const NeoHookean& material() const { return material_; }
  JacobianStorage storage() const { return storage_; }
  const std::shared_ptr<QuadratureStateStore>& state() const { return state_; }
  const std::shared_ptr<const Constraints>& constraints() const { return constraints_; }
  const DenseTabulation& tabulation() const { return tabulation_; }

  void set_threads(int n) { threads_ = n < 1 ? 1 : n; }
  int threads() const { return threads_; }

  void set_external_load(std::vector<double> load) {
    if (!load.empty() && load.size() != (size_t)size())
      throw std::invalid_argument("external load size mismatch");
    external_load_ = std::move(load);
  }
  const std::vector<double>& external_load() const { return external_load_; }
  void set_load_scale(double s) { load_scale_ = s; }
  double load_scale() const { return load_scale_; }

  /// Test hook: adds eps * W * grad_du to the Jacobian q-function output,
  /// decoupling it from the residual so derivative checks must fail.
  void set_jacobian_perturbation(double eps) { jacobian_perturbation_ = eps; }

  size_t residual_apply_count() const { return residual_applies_; }
  size_t jacobian_apply_count() const { return jacobian_applies_; }
  void reset_counters() {
    residual_applies_ = 0;
    jacobian_applies_ = 0;
  }

  /// Streamed bytes per Jacobian apply: the quadrature state plus input and
  /// output vectors.
  double stored_bytes_per_dof() const {
    double state_bytes = (double)state_->data.size() * sizeof(double);
    double vec_bytes = 2.0 * size() * sizeof(double);
    return (state_bytes + vec_bytes) / size();
  }

  /// F(u) = sum_e E^T B^T W f(u) - load_scale * external_load, with
  /// constrained entries zeroed. Expects Dirichlet values already imposed on
  /// u. Writes the quadrature state used by subsequent Jacobian applies.
  void apply_residual(std::span<const double> u, std::span<double> out) {
    check_field(u);
    check_field(out);
    ++residual_applies_;
    restriction_.gather(u, ev_in_);
    forward_gradients();
    int nq = points_per_element();
    int stride = state_->stride;
    parallel_for(num_elements(), threads_, [&](int begin, int end) {
      for (int e = begin; e < end; ++e)
        for (int q = 0; q < nq; ++q) {
          Mat3d g;
          for (int c = 0; c < 3; ++c)
            for (int d = 0; d < 3; ++d) g(c, d) = qgrad_.slab(e, c, d)[q];
          std::span<double> slice(
              state_->data.data() + ((size_t)e * nq + q) * stride, stride);
          Mat3d h;
          try {
            h = residual_qpoint(material_, storage_, g, geometry_->dxidX_at(e, q),
                                geometry_->weight[(size_t)e * nq + q], slice);
          } catch (const InvertedElementError& err) {
            throw err.with_location(e, q);
          }
          for (int c = 0; c < 3; ++c)
            for (int d = 0; d < 3; ++d) qgrad_.slab(e, c, d)[q] = h(c, d);
        }
    });
    state_->valid = true;
    backward_gradients(out);
    if (!external_load_.empty())
      for (size_t i = 0; i < out.size(); ++i) out[i] -= load_scale_ * external_load_[i];
    if (constraints_)
      for (size_t i = 0; i < out.size(); ++i)
        if (constraints_->mask[i]) out[i] = 0.0;
  }

  /// J du with J linearized at the last residual point; constrained entries
  /// pass through unchanged and do not couple into the rest.
  void apply_jacobian(std::span<const double> du, std::span<double> out) const {
    check_field(du);
    check_field(out);
    if (!state_->valid) throw StateNotInitializedError();
    ++jacobian_applies_;
    if (constraints_) {
      masked_in_.assign(du.begin(), du.end());
      for (size_t i = 0; i < masked_in_.size(); ++i)
        if (constraints_->mask[i]) masked_in_[i] = 0.0;
      restriction_.gather(masked_in_, ev_in_);
    } else {
      restriction_.gather(du, ev_in_);
    }
    forward_gradients();
    int nq = points_per_element();
    int stride = state_->stride;
    parallel_for(num_elements(), threads_, [&](int begin, int end) {
      for (int e = begin; e < end; ++e)
        for (int q = 0; q < nq; ++q) {
          Mat3d g;
          for (int c = 0; c < 3; ++c)
            for (int d = 0; d < 3; ++d) g(c, d) = qgrad_.slab(e, c, d)[q];
          Mat3d h = pointwise_jacobian(e, q, g);
          for (int c = 0; c < 3; ++c)
            for (int d = 0; d < 3; ++d) qgrad_.slab(e, c, d)[q] = h(c, d);
        }
    });
    backward_gradients(out);
    if (constraints_)
      for (size_t i = 0; i < out.size(); ++i)
        if (constraints_->mask[i]) out[i] = du[i];
  }

  /// Jacobian q-function at one point, including the test perturbation hook.
  Mat3d pointwise_jacobian(int e, int q, const Mat3d& grad_du_xi) const {
    int nq = points_per_element();
    int stride = state_->stride;
    std::span<const double> slice(state_->data.data() + ((size_t)e * nq + q) * stride,
                                  stride);
    Mat3d h = jacobian_qpoint(material_, storage_, grad_du_xi, slice);
    if (jacobian_perturbation_ != 0.0) {
      double w = geometry_->weight[(size_t)e * nq + q];
      for (int k = 0; k < 9; ++k) h.a[k] += jacobian_perturbation_ * w * grad_du_xi.a[k];
    }
    return h;
  }

  /// The 9x9 pointwise tensor D with D[(c1,d1),(c2,d2)] = dH(c1,d1)/dG(c2,d2),
  /// assembled by probing the (linear) Jacobian q-function on unit inputs.
  void pointwise_jacobian_tensor(int e, int q, double* d81) const {
    for (int c2 = 0; c2 < 3; ++c2)
      for (int d2 = 0; d2 < 3; ++d2) {
        Mat3d unit = Mat3d::zero();
        unit(c2, d2) = 1.0;
        Mat3d h = pointwise_jacobian(e, q, unit);
        for (int c1 = 0; c1 < 3; ++c1)
          for (int d1 = 0; d1 < 3; ++d1)
            d81[((size_t)c1 * 3 + d1) * 9 + (size_t)c2 * 3 + d2] = h(c1, d1);
      }
  }

  /// Diagonal of the Jacobian, matching the assembled matrix entry for entry;
  /// constrained entries are exactly 1.
  void extract_diagonal(std::span<double> out) const {
    check_field(out);
    if (!state_->valid) throw StateNotInitializedError();
    std::fill(out.begin(), out.end(), 0.0);
    int nq = points_per_element();
    int npe = restriction_.nodes_per_element();
    std::vector<double> contrib((size_t)num_elements() * npe * 3);
    parallel_for(num_elements(), threads_, [&](int begin, int end) {
      std::vector<double> dq((size_t)nq * 81);
      for (int e = begin; e < end; ++e) {
        for (int q = 0; q < nq; ++q) pointwise_jacobian_tensor(e, q, dq.data() + (size_t)q * 81);
        for (int a = 0; a < npe; ++a)
          for (int c = 0; c < 3; ++c) {
            double sum = 0.0;
            for (int q = 0; q < nq; ++q) {
              const double* d = dq.data() + (size_t)q * 81;
              double ga[3];
              for (int dd = 0; dd < 3; ++dd)
                ga[dd] = tabulation_.grad[dd][(size_t)q * npe + a];
              for (int d1 = 0; d1 < 3; ++d1)
                for (int d2 = 0; d2 < 3; ++d2)
                  sum += ga[d1] * d[((size_t)c * 3 + d1) * 9 + (size_t)c * 3 + d2] * ga[d2];
            }
            contrib[((size_t)e * npe + a) * 3 + c] = sum;
          }
      }
    });
    for (int e = 0; e < num_elements(); ++e) {
      const int32_t* map = restriction_.element(e);
      for (int a = 0; a < npe; ++a)
        for (int c = 0; c < 3; ++c)
          out[3 * (size_t)map[a] + c] += contrib[((size_t)e * npe + a) * 3 + c];
    }
    if (constraints_)
      for (size_t i = 0; i < out.size(); ++i)
        if (constraints_->mask[i]) out[i] = 1.0;
  }

  /// Psi(u) = sum over quadrature of the energy density times the weighted
  /// measure. Does not touch the stored state.
  double total_strain_energy(std::span<const double> u) const {
    check_field(u);
    restriction_.gather(u, ev_in_);
    forward_gradients();
    int nq = points_per_element();
    std::vector<double> partial(num_elements(), 0.0);
    parallel_for(num_elements(), threads_, [&](int begin, int end) {
      for (int e = begin; e < end; ++e) {
        double sum = 0.0;
        for (int q = 0; q < nq; ++q) {
          Mat3d g;
          for (int c = 0; c < 3; ++c)
            for (int d = 0; d < 3; ++d) g(c, d) = qgrad_.slab(e, c, d)[q];
          Mat3d grad_u = g * geometry_->dxidX_at(e, q);
          double psi;
          try {
            psi = strain_energy_density(material_, grad_u);
          } catch (const InvertedElementError& err) {
            throw err.with_location(e, q);
          }
          sum += geometry_->weight[(size_t)e * nq + q] * psi;
        }
        partial[e] = sum;
      }
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
  }

 private:
  void check_field(std::span<const double> v) const {
    if (v.size() != (size_t)size()) throw std::invalid_argument("nodal field size mismatch");
  }

  /// E-vector in ev_in_ -> reference gradients in qgrad_.
  void forward_gradients() const {
    int ne = num_elements();
    if (qgrad_.num_elements != ne || qgrad_.points_per_dim != basis_.num_points_1d())
      qgrad_ = QuadGradients::zeros(ne, basis_.num_points_1d());
    parallel_for(ne, threads_, [&](int begin, int end) {
      std::vector<double> scratch(slab_scratch_size(basis_));
      for (int e = begin; e < end; ++e)
        for (int c = 0; c < 3; ++c)
          grad_slab(basis_, ev_in_.slab(e, c),
                    {qgrad_.slab(e, c, 0), qgrad_.slab(e, c, 1), qgrad_.slab(e, c, 2)},
                    scratch.data());
    });
  }

  /// Pointwise outputs in qgrad_ -> transpose gradients -> scatter into out.
  /// The scatter runs sequentially in element order so results are bit-stable
  /// at any thread count.
  void backward_gradients(std::span<double> out) const {
    int ne = num_elements();
    if (ev_out_.num_elements != ne || ev_out_.nodes_per_dim != basis_.num_nodes_1d())
      ev_out_ = ElementVector::zeros(ne, basis_.num_nodes_1d());
    parallel_for(ne, threads_, [&](int begin, int end) {
      std::vector<double> scratch(slab_scratch_size(basis_));
      for (int e = begin; e < end; ++e)
        for (int c = 0; c < 3; ++c)
          grad_transpose_slab(basis_,
                              {qgrad_.slab(e, c, 0), qgrad_.slab(e, c, 1), qgrad_.slab(e, c, 2)},
                              ev_out_.slab(e, c), scratch.data());
    });
    std::fill(out.begin(), out.end(), 0.0);
    restriction_.scatter_add(ev_out_, out);
  }

  std::shared_ptr<const BoxMesh> mesh_;
  Basis1D basis_;
  std::shared_ptr<const GeometricFactors> geometry_;
  NeoHookean material_;
  JacobianStorage storage_;
  std::shared_ptr<const Constraints> constraints_;
  std::shared_ptr<QuadratureStateStore> state_;
  ElementRestriction restriction_;
  DenseTabulation tabulation_;
  std::vector<double> external_load_;
  double load_scale_ = 1.0;
  double jacobian_perturbation_ = 0.0;
  int threads_ = 1;
  mutable ElementVector ev_in_, ev_out_;
  mutable QuadGradients qgrad_;
  mutable std::vector<double> masked_in_;
  mutable size_t residual_applies_ = 0, jacobian_applies_ = 0;
};

/// Consistent nodal load for dead tractions on reference faces, integrated
/// with the volume rule's trace on each face. The geometry mesh supplies the
/// surface measure; the load indexes the solution mesh.
inline std::vector<double> assemble_traction_load(const BoxMesh& mesh, const Basis1D& basis,
                                                  const BoxMesh& geo_mesh,
                                                  const Basis1D& geo_basis,
                                                  const std::vector<TractionBC>& tractions) {
  if (geo_basis.rule.size() != basis.rule.size())
    throw std::invalid_argument("geometry and solution bases must share the quadrature rule");
  std::vector<double> load((size_t)mesh.num_dofs(), 0.0);
  int p = mesh.order, g = geo_mesh.order;
  int q1 = basis.num_points_1d();

  for (const auto& bc : tractions) {
    int axis = face_axis(bc.face);
    int t1 = (axis + 1) % 3, t2 = (axis + 2) % 3;
    int elem_a = face_at_max(bc.face) ? mesh.counts[axis] - 1 : 0;
    int sol_fixed = face_at_max(bc.face) ? p : 0;
    int geo_fixed = face_at_max(bc.face) ? g : 0;

    for (int e2 = 0; e2 < mesh.counts[t2]; ++e2)
      for (int e1 = 0; e1 < mesh.counts[t1]; ++e1) {
        for (int q2 = 0; q2 < q1; ++q2)
          for (int qa = 0; qa < q1; ++qa) {
            // Surface tangents from the geometry lattice on this face.
            double tan1[3] = {0, 0, 0}, tan2[3] = {0, 0, 0};
            for (int j = 0; j <= g; ++j)
              for (int i = 0; i <= g; ++i) {
                std::array<int, 3> gi{};
                gi[axis] = g * elem_a + geo_fixed;
                gi[t1] = g * e1 + i;
                gi[t2] = g * e2 + j;
                int node = geo_mesh.node_index(gi[0], gi[1], gi[2]);
                double di = geo_basis.deriv[qa * (g + 1) + i] * geo_basis.interp[q2 * (g + 1) + j];
                double dj = geo_basis.interp[qa * (g + 1) + i] * geo_basis.deriv[q2 * (g + 1) + j];
                for (int c = 0; c < 3; ++c) {
                  tan1[c] += di * geo_mesh.coords[3 * (size_t)node + c];
                  tan2[c] += dj * geo_mesh.coords[3 * (size_t)node + c];
                }
              }
            double cross[3] = {tan1[1] * tan2[2] - tan1[2] * tan2[1],
                               tan1[2] * tan2[0] - tan1[0] * tan2[2],
                               tan1[0] * tan2[1] - tan1[1] * tan2[0]};
            double area = std::sqrt(cross[0] * cross[0] + cross[1] * cross[1] +
                                    cross[2] * cross[2]);
            double ds = basis.rule.weights[qa] * basis.rule.weights[q2] * area;
            for (int j = 0; j <= p; ++j)
              for (int i = 0; i <= p; ++i) {
                std::array<int, 3> si{};
                si[axis] = p * elem_a + sol_fixed;
                si[t1] = p * e1 + i;
                si[t2] = p * e2 + j;
                int node = mesh.node_index(si[0], si[1], si[2]);
                double phi =
                    basis.interp[qa * (p + 1) + i] * basis.interp[q2 * (p + 1) + j];
                for (int c = 0; c < 3; ++c)
                  load[3 * (size_t)node + c] += phi * bc.traction[c] * ds;
              }
          }
      }
  }
  return load;
}

/// Nodal load for a constant body force per unit reference volume.
inline std::vector<double> assemble_body_force_load(const BoxMesh& mesh, const Basis1D& basis,
                                                    const GeometricFactors& geo,
                                                    std::array<double, 3> force) {
  ElementRestriction restriction = build_restriction(mesh);
  int nq = basis.num_points_3d();
  QuadValues qv = QuadValues::zeros(restriction.num_elements, basis.num_points_1d());
  for (int e = 0; e < restriction.num_elements; ++e)
    for (int c = 0; c < 3; ++c) {
      double* slab = qv.slab(e, c);
      for (int q = 0; q < nq; ++q) slab[q] = geo.weight[(size_t)e * nq + q] * force[c];
    }
  ElementVector ev;
  apply_interp_transpose(basis, qv, ev);
  std::vector<double> load((size_t)mesh.num_dofs(), 0.0);
  restriction.scatter_add(ev, load);
  return load;
}

}  // namespace hexmg
