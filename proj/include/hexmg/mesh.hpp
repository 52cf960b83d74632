#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hexmg/basis.hpp"
#include "hexmg/errors.hpp"
#include "hexmg/tensor3.hpp"

namespace hexmg {

/// Structured hexahedral box with an order-p node lattice. Nodes are placed
/// on Gauss-Lobatto points per element edge and numbered lexicographically
/// with x fastest, so the lattice has (p*nx+1)(p*ny+1)(p*nz+1) points.
struct BoxMesh {
  std::array<double, 3> extents{1.0, 1.0, 1.0};
  std::array<int, 3> counts{1, 1, 1};
  int order = 1;
  std::array<int, 3> nodes_per_dim{};  // p * counts[d] + 1
  std::vector<double> coords;          // interleaved xyz per node

  int num_nodes() const { return nodes_per_dim[0] * nodes_per_dim[1] * nodes_per_dim[2]; }
  int num_elements() const { return counts[0] * counts[1] * counts[2]; }
  int num_dofs() const { return 3 * num_nodes(); }

  int node_index(int gx, int gy, int gz) const {
    return gx + nodes_per_dim[0] * (gy + nodes_per_dim[1] * gz);
  }
};

inline BoxMesh build_box_mesh(std::array<double, 3> extents, std::array<int, 3> counts,
                              int order) {
  for (double l : extents)
    if (!(l > 0.0)) throw std::invalid_argument("box extents must be positive");
  for (int c : counts)
    if (c < 1) throw std::invalid_argument("element counts must be >= 1");
  if (order < 1) throw std::invalid_argument("mesh order must be >= 1");

  BoxMesh mesh;
  mesh.extents = extents;
  mesh.counts = counts;
  mesh.order = order;
  auto lobatto = gauss_lobatto_nodes(order);

  std::array<std::vector<double>, 3> axis;
  for (int d = 0; d < 3; ++d) {
    mesh.nodes_per_dim[d] = order * counts[d] + 1;
    axis[d].resize(mesh.nodes_per_dim[d]);
    double h = extents[d] / counts[d];
    for (int e = 0; e < counts[d]; ++e)
      for (int i = 0; i <= order; ++i)
        axis[d][e * order + i] = (e + 0.5 * (lobatto[i] + 1.0)) * h;
    axis[d].back() = extents[d];  // avoid roundoff drift at the far boundary
  }

  mesh.coords.resize((size_t)mesh.num_nodes() * 3);
  size_t n = 0;
  for (int gz = 0; gz < mesh.nodes_per_dim[2]; ++gz)
    for (int gy = 0; gy < mesh.nodes_per_dim[1]; ++gy)
      for (int gx = 0; gx < mesh.nodes_per_dim[0]; ++gx) {
        mesh.coords[n * 3 + 0] = axis[0][gx];
        mesh.coords[n * 3 + 1] = axis[1][gy];
        mesh.coords[n * 3 + 2] = axis[2][gz];
        ++n;
      }
  return mesh;
}

/// Element-to-global DoF map. `indices` lists the (p+1)^3 lattice nodes of
/// each element in lexicographic order; `multiplicity` counts owning elements
/// per node, so scattering a gathered constant-1 field reproduces it.
struct ElementRestriction {
  int num_elements = 0;
  int num_nodes = 0;
  int nodes_per_dim = 0;  // p + 1
  std::vector<int32_t> indices;
  std::vector<int32_t> multiplicity;

  int nodes_per_element() const { return nodes_per_dim * nodes_per_dim * nodes_per_dim; }

  const int32_t* element(int e) const { return indices.data() + (size_t)e * nodes_per_element(); }

  /// L-vector (3 per node, interleaved) -> E-vector.
  void gather(std::span<const double> u, ElementVector& ev) const {
    if (u.size() != (size_t)3 * num_nodes)
      throw std::invalid_argument("gather: nodal field size mismatch");
    if (ev.num_elements != num_elements || ev.nodes_per_dim != nodes_per_dim)
      ev = ElementVector::zeros(num_elements, nodes_per_dim);
    int npe = nodes_per_element();
    for (int e = 0; e < num_elements; ++e) {
      const int32_t* map = element(e);
      for (int c = 0; c < 3; ++c) {
        double* dst = ev.slab(e, c);
        for (int a = 0; a < npe; ++a) dst[a] = u[3 * (size_t)map[a] + c];
      }
    }
  }

  /// E-vector -> L-vector, accumulating shared nodes. Element-ordered, so the
  /// result is reproducible bit-for-bit.
  void scatter_add(const ElementVector& ev, std::span<double> u) const {
    if (u.size() != (size_t)3 * num_nodes)
      throw std::invalid_argument("scatter: nodal field size mismatch");
    int npe = nodes_per_element();
    for (int e = 0; e < num_elements; ++e) {
      const int32_t* map = element(e);
      for (int c = 0; c < 3; ++c) {
        const double* src = ev.slab(e, c);
        for (int a = 0; a < npe; ++a) u[3 * (size_t)map[a] + c] += src[a];
      }
    }
  }
};

inline ElementRestriction build_restriction(const BoxMesh& mesh) {
  ElementRestriction r;
  r.num_elements = mesh.num_elements();
  r.num_nodes = mesh.num_nodes();
  r.nodes_per_dim = mesh.order + 1;
  int p = mesh.order;
  r.indices.resize((size_t)r.num_elements * r.nodes_per_element());
  size_t pos = 0;
  for (int ez = 0; ez < mesh.counts[2]; ++ez)
    for (int ey = 0; ey < mesh.counts[1]; ++ey)
      for (int ex = 0; ex < mesh.counts[0]; ++ex)
        for (int k = 0; k <= p; ++k)
          for (int j = 0; j <= p; ++j)
            for (int i = 0; i <= p; ++i)
              r.indices[pos++] =
                  (int32_t)mesh.node_index(p * ex + i, p * ey + j, p * ez + k);
  r.multiplicity.assign(r.num_nodes, 0);
  for (int32_t idx : r.indices) ++r.multiplicity[idx];
  return r;
}

enum class Face { XMinus, XPlus, YMinus, YPlus, ZMinus, ZPlus };

inline int face_axis(Face f) { return static_cast<int>(f) / 2; }
inline bool face_at_max(Face f) { return static_cast<int>(f) % 2 == 1; }

inline std::string face_name(Face f) {
  static const char* names[] = {"-x", "+x", "-y", "+y", "-z", "+z"};
  return names[static_cast<int>(f)];
}

/// Lattice nodes lying on one of the six box faces, ascending.
inline std::vector<int> select_boundary_nodes(const BoxMesh& mesh, Face face) {
  int axis = face_axis(face);
  int fixed = face_at_max(face) ? mesh.nodes_per_dim[axis] - 1 : 0;
  std::vector<int> nodes;
  int a = (axis + 1) % 3, b = (axis + 2) % 3;
  nodes.reserve((size_t)mesh.nodes_per_dim[a] * mesh.nodes_per_dim[b]);
  for (int gz = 0; gz < mesh.nodes_per_dim[2]; ++gz)
    for (int gy = 0; gy < mesh.nodes_per_dim[1]; ++gy)
      for (int gx = 0; gx < mesh.nodes_per_dim[0]; ++gx) {
        std::array<int, 3> idx{gx, gy, gz};
        if (idx[axis] == fixed) nodes.push_back(mesh.node_index(gx, gy, gz));
      }
  return nodes;
}

/// Per-quadrature-point geometry of the reference-to-physical map: dX/dxi,
/// its determinant and inverse, and the quadrature weight scaled by the
/// determinant.
struct GeometricFactors {
  int num_elements = 0;
  int points_per_element = 0;
  std::vector<double> dXdxi;   // (e, q, 9) row-major per point
  std::vector<double> dxidX;   // (e, q, 9)
  std::vector<double> detJ;    // (e, q)
  std::vector<double> weight;  // (e, q), quadrature weight * detJ

  Mat3d dXdxi_at(int e, int q) const {
    Mat3d m;
    const double* src = dXdxi.data() + ((size_t)e * points_per_element + q) * 9;
    for (int k = 0; k < 9; ++k) m.a[k] = src[k];
    return m;
  }
  Mat3d dxidX_at(int e, int q) const {
    Mat3d m;
    const double* src = dxidX.data() + ((size_t)e * points_per_element + q) * 9;
    for (int k = 0; k < 9; ++k) m.a[k] = src[k];
    return m;
  }
};

/// Geometry evaluated with `basis`, whose order must match the mesh lattice.
/// A degenerate or inverted mapping raises with the element named.
inline GeometricFactors compute_geometric_factors(const BoxMesh& mesh, const Basis1D& basis) {
  if (basis.order != mesh.order)
    throw std::invalid_argument("geometry basis order must match mesh order");
  ElementRestriction restriction = build_restriction(mesh);
  int q1 = basis.num_points_1d();
  int nq = q1 * q1 * q1;
  GeometricFactors gf;
  gf.num_elements = mesh.num_elements();
  gf.points_per_element = nq;
  gf.dXdxi.resize((size_t)gf.num_elements * nq * 9);
  gf.dxidX.resize((size_t)gf.num_elements * nq * 9);
  gf.detJ.resize((size_t)gf.num_elements * nq);
  gf.weight.resize((size_t)gf.num_elements * nq);

  // Gather node coordinates element-wise and push them through the gradient.
  ElementVector coords_ev = ElementVector::zeros(gf.num_elements, basis.num_nodes_1d());
  restriction.gather(std::span<const double>(mesh.coords), coords_ev);
  QuadGradients grads;
  apply_grad(basis, coords_ev, grads);

  for (int e = 0; e < gf.num_elements; ++e)
    for (int p = 0; p < nq; ++p) {
      Mat3d a;
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) a(c, d) = grads.slab(e, c, d)[p];
      double det = det3(a);
      if (!(det > 0.0)) throw DegenerateElementError(e, det);
      Mat3d ainv = inv3(a);
      size_t base = ((size_t)e * nq + p) * 9;
      for (int k = 0; k < 9; ++k) {
        gf.dXdxi[base + k] = a.a[k];
        gf.dxidX[base + k] = ainv.a[k];
      }
      int qa = p % q1, qb = (p / q1) % q1, qc = p / (q1 * q1);
      gf.detJ[(size_t)e * nq + p] = det;
      gf.weight[(size_t)e * nq + p] =
          basis.rule.weights[qa] * basis.rule.weights[qb] * basis.rule.weights[qc] * det;
    }
  return gf;
}

}  // namespace hexmg
