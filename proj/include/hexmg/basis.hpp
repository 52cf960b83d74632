#pragma once

#include <array>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "hexmg/quadrature.hpp"

namespace hexmg {

namespace detail {

/// Barycentric weights w_i = 1 / prod_{j != i} (x_i - x_j).
inline std::vector<double> barycentric_weights(const std::vector<double>& nodes) {
  int n = static_cast<int>(nodes.size());
  std::vector<double> w(n, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i) w[i] /= nodes[i] - nodes[j];
  return w;
}

/// Values and first derivatives of the Lagrange cardinal functions on
/// `nodes` at a single point y. Exact-hit branch handles y landing on a node
/// (the collocated case), where the generic barycentric form divides by zero.
inline void lagrange_point(const std::vector<double>& nodes,
                           const std::vector<double>& bary, double y,
                           double* values, double* derivs) {
  int n = static_cast<int>(nodes.size());
  int hit = -1;
  for (int i = 0; i < n; ++i)
    if (std::abs(y - nodes[i]) < 1e-13) hit = i;
  if (hit >= 0) {
    for (int i = 0; i < n; ++i) values[i] = (i == hit) ? 1.0 : 0.0;
    if (derivs) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        if (i == hit) continue;
        derivs[i] = (bary[i] / bary[hit]) / (nodes[hit] - nodes[i]);
        sum += derivs[i];
      }
      derivs[hit] = -sum;
    }
    return;
  }
  // L_i(y) = w_i * l(y) / (y - x_i); L_i'(y) = L_i(y) * (S - 1/(y - x_i))
  // with S = sum_j 1/(y - x_j).
  double l = 1.0, s = 0.0;
  for (int j = 0; j < n; ++j) {
    l *= y - nodes[j];
    s += 1.0 / (y - nodes[j]);
  }
  for (int i = 0; i < n; ++i) {
    values[i] = bary[i] * l / (y - nodes[i]);
    if (derivs) derivs[i] = values[i] * (s - 1.0 / (y - nodes[i]));
  }
}

/// Solves the n x n system A X = B (B is n x m, row-major) in place by
/// Gaussian elimination with partial pivoting. Small systems only.
inline void solve_dense(std::vector<double>& A, std::vector<double>& B, int n, int m) {
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(A[i * n + k]) > std::abs(A[piv * n + k])) piv = i;
    if (A[piv * n + k] == 0.0) throw std::runtime_error("singular dense system");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(A[k * n + j], A[piv * n + j]);
      for (int j = 0; j < m; ++j) std::swap(B[k * m + j], B[piv * m + j]);
    }
    for (int i = k + 1; i < n; ++i) {
      double f = A[i * n + k] / A[k * n + k];
      for (int j = k; j < n; ++j) A[i * n + j] -= f * A[k * n + j];
      for (int j = 0; j < m; ++j) B[i * m + j] -= f * B[k * m + j];
    }
  }
  for (int k = n - 1; k >= 0; --k) {
    for (int j = 0; j < m; ++j) {
      double s = B[k * m + j];
      for (int i = k + 1; i < n; ++i) s -= A[k * n + i] * B[i * m + j];
      B[k * m + j] = s / A[k * n + k];
    }
  }
}

}  // namespace detail

/// Row-major tabulation (points x nodes) of the Lagrange basis on `nodes`.
inline std::vector<double> lagrange_values(const std::vector<double>& nodes,
                                           const std::vector<double>& points) {
  auto bary = detail::barycentric_weights(nodes);
  int n = static_cast<int>(nodes.size());
  std::vector<double> tab(points.size() * n);
  for (size_t r = 0; r < points.size(); ++r)
    detail::lagrange_point(nodes, bary, points[r], tab.data() + r * n, nullptr);
  return tab;
}

inline std::vector<double> lagrange_derivatives(const std::vector<double>& nodes,
                                                const std::vector<double>& points) {
  auto bary = detail::barycentric_weights(nodes);
  int n = static_cast<int>(nodes.size());
  std::vector<double> tab(points.size() * n);
  std::vector<double> vals(n);
  for (size_t r = 0; r < points.size(); ++r)
    detail::lagrange_point(nodes, bary, points[r], vals.data(), tab.data() + r * n);
  return tab;
}

/// 1D Lagrange basis of order p on Gauss-Lobatto nodes, tabulated at a
/// Gauss-Legendre rule with q >= p + 1 points. Tensor products of `interp`
/// and `deriv` give the 3D evaluation maps; `colloc_deriv` = deriv *
/// pinv(interp) turns interpolated point values into point derivatives, which
/// is what lets a 3D gradient cost six 1D contractions instead of nine.
struct Basis1D {
  int order = 0;                     // p
  std::vector<double> nodes;         // p + 1 Gauss-Lobatto abscissae
  QuadratureRule1D rule;             // q Gauss-Legendre points
  std::vector<double> interp;        // q x (p+1), row-major
  std::vector<double> deriv;         // q x (p+1)
  std::vector<double> pinv_interp;   // (p+1) x q, pinv_interp * interp = I
  std::vector<double> colloc_deriv;  // q x q

  int num_nodes_1d() const { return order + 1; }
  int num_points_1d() const { return rule.size(); }
  int num_nodes_3d() const { int n = num_nodes_1d(); return n * n * n; }
  int num_points_3d() const { int q = num_points_1d(); return q * q * q; }
};

/// Basis of order p tabulated on a caller-provided rule. Used directly when a
/// coarse space must share the quadrature points of a finer one.
inline Basis1D build_lagrange_basis(int p, QuadratureRule1D rule) {
  if (p < 1) throw std::invalid_argument("basis order must be >= 1");
  int q = rule.size();
  if (q < p + 1)
    throw std::invalid_argument("need at least p + 1 quadrature points for full column rank");
  Basis1D b;
  b.order = p;
  b.nodes = gauss_lobatto_nodes(p);
  b.rule = std::move(rule);
  b.interp = lagrange_values(b.nodes, b.rule.points);
  b.deriv = lagrange_derivatives(b.nodes, b.rule.points);

  // pinv via normal equations: (B^T B) X = B^T, full column rank by q >= p+1.
  int n = p + 1;
  std::vector<double> btb(n * n, 0.0), rhs(n * q, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int r = 0; r < q; ++r) s += b.interp[r * n + i] * b.interp[r * n + j];
      btb[i * n + j] = s;
    }
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < q; ++r) rhs[i * q + r] = b.interp[r * n + i];
  detail::solve_dense(btb, rhs, n, q);
  b.pinv_interp = std::move(rhs);

  b.colloc_deriv.assign(q * q, 0.0);
  for (int r = 0; r < q; ++r)
    for (int c = 0; c < q; ++c) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += b.deriv[r * n + i] * b.pinv_interp[i * q + c];
      b.colloc_deriv[r * q + c] = s;
    }
  return b;
}

inline Basis1D build_lagrange_basis(int p, int q) {
  if (q < 1) throw std::invalid_argument("quadrature size must be >= 1");
  return build_lagrange_basis(p, gauss_legendre(q));
}

inline Basis1D build_lagrange_basis(int p) { return build_lagrange_basis(p, p + 1); }

/// Element-blocked field: (element, component, node) with x-fastest
/// lexicographic nodes, 3 components, (p+1)^3 nodes per element.
struct ElementVector {
  int num_elements = 0;
  int nodes_per_dim = 0;
  std::vector<double> data;

  int nodes_per_element() const { return nodes_per_dim * nodes_per_dim * nodes_per_dim; }
  double* slab(int e, int c) { return data.data() + (size_t)(e * 3 + c) * nodes_per_element(); }
  const double* slab(int e, int c) const {
    return data.data() + (size_t)(e * 3 + c) * nodes_per_element();
  }

  static ElementVector zeros(int num_elements, int nodes_per_dim) {
    ElementVector ev;
    ev.num_elements = num_elements;
    ev.nodes_per_dim = nodes_per_dim;
    ev.data.assign((size_t)num_elements * 3 * nodes_per_dim * nodes_per_dim * nodes_per_dim, 0.0);
    return ev;
  }
};

/// Values at quadrature points: (element, component, point), x-fastest.
struct QuadValues {
  int num_elements = 0;
  int points_per_dim = 0;
  std::vector<double> data;

  int points_per_element() const { return points_per_dim * points_per_dim * points_per_dim; }
  double* slab(int e, int c) { return data.data() + (size_t)(e * 3 + c) * points_per_element(); }
  const double* slab(int e, int c) const {
    return data.data() + (size_t)(e * 3 + c) * points_per_element();
  }

  static QuadValues zeros(int num_elements, int points_per_dim) {
    QuadValues qv;
    qv.num_elements = num_elements;
    qv.points_per_dim = points_per_dim;
    qv.data.assign((size_t)num_elements * 3 * points_per_dim * points_per_dim * points_per_dim,
                   0.0);
    return qv;
  }
};

/// Reference gradients at quadrature points: (element, component, direction,
/// point), x-fastest points.
struct QuadGradients {
  int num_elements = 0;
  int points_per_dim = 0;
  std::vector<double> data;

  int points_per_element() const { return points_per_dim * points_per_dim * points_per_dim; }
  double* slab(int e, int c, int d) {
    return data.data() + ((size_t)(e * 3 + c) * 3 + d) * points_per_element();
  }
  const double* slab(int e, int c, int d) const {
    return data.data() + ((size_t)(e * 3 + c) * 3 + d) * points_per_element();
  }

  static QuadGradients zeros(int num_elements, int points_per_dim) {
    QuadGradients qg;
    qg.num_elements = num_elements;
    qg.points_per_dim = points_per_dim;
    qg.data.assign(
        (size_t)num_elements * 9 * points_per_dim * points_per_dim * points_per_dim, 0.0);
    return qg;
  }
};

namespace detail {

/// Contracts matrix M (rows x cols, row-major; transposed applies M^T) along
/// dimension `dim` of the x-fastest field `in` with shape {n0, n1, n2}.
inline void contract(const double* M, int rows, int cols, bool transposed, int dim,
                     const double* in, std::array<int, 3> shape, double* out) {
  int in_size = shape[dim];
  int out_size = transposed ? cols : rows;
  (void)in_size;
  auto eff = [&](int a, int i) { return transposed ? M[i * cols + a] : M[a * cols + i]; };
  int n0 = shape[0], n1 = shape[1], n2 = shape[2];
  if (dim == 0) {
    for (int k = 0; k < n2; ++k)
      for (int j = 0; j < n1; ++j) {
        const double* src = in + (size_t)(j + n1 * k) * n0;
        double* dst = out + (size_t)(j + n1 * k) * out_size;
        for (int a = 0; a < out_size; ++a) {
          double s = 0.0;
          for (int i = 0; i < n0; ++i) s += eff(a, i) * src[i];
          dst[a] = s;
        }
      }
  } else if (dim == 1) {
    for (int k = 0; k < n2; ++k)
      for (int b = 0; b < out_size; ++b)
        for (int i = 0; i < n0; ++i) {
          double s = 0.0;
          for (int j = 0; j < n1; ++j) s += eff(b, j) * in[i + (size_t)n0 * (j + n1 * k)];
          out[i + (size_t)n0 * (b + out_size * k)] = s;
        }
  } else {
    for (int c = 0; c < out_size; ++c)
      for (int j = 0; j < n1; ++j)
        for (int i = 0; i < n0; ++i) {
          double s = 0.0;
          for (int k = 0; k < n2; ++k) s += eff(c, k) * in[i + (size_t)n0 * (j + n1 * k)];
          out[i + (size_t)n0 * (j + n1 * c)] = s;
        }
  }
}

}  // namespace detail

/// Scratch sized for two intermediate slabs of the larger grid.
inline size_t slab_scratch_size(const Basis1D& b) {
  size_t m = std::max(b.num_nodes_1d(), b.num_points_1d());
  return 2 * m * m * m;
}

/// One element-component interpolation: n^3 nodal values -> q^3 point values.
inline void interp_slab(const Basis1D& b, const double* in, double* out, double* scratch) {
  int n = b.num_nodes_1d(), q = b.num_points_1d();
  size_t half = slab_scratch_size(b) / 2;
  double* t1 = scratch;
  double* t2 = scratch + half;
  detail::contract(b.interp.data(), q, n, false, 0, in, {n, n, n}, t1);
  detail::contract(b.interp.data(), q, n, false, 1, t1, {q, n, n}, t2);
  detail::contract(b.interp.data(), q, n, false, 2, t2, {q, q, n}, out);
}

inline void interp_transpose_slab(const Basis1D& b, const double* in, double* out,
                                  double* scratch) {
  int n = b.num_nodes_1d(), q = b.num_points_1d();
  size_t half = slab_scratch_size(b) / 2;
  double* t1 = scratch;
  double* t2 = scratch + half;
  detail::contract(b.interp.data(), q, n, true, 2, in, {q, q, q}, t1);
  detail::contract(b.interp.data(), q, n, true, 1, t1, {q, q, n}, t2);
  detail::contract(b.interp.data(), q, n, true, 0, t2, {q, n, n}, out);
}

/// One element-component gradient, six contractions: interpolate to points,
/// then apply the collocation derivative per direction.
inline void grad_slab(const Basis1D& b, const double* in, std::array<double*, 3> out,
                      double* scratch) {
  int q = b.num_points_1d();
  size_t half = slab_scratch_size(b) / 2;
  double* vals = scratch + half;  // keep first half free for interp internals
  // Interpolated values land in `vals`; reuse the first half as interp scratch.
  {
    int n = b.num_nodes_1d();
    double* t1 = scratch;
    detail::contract(b.interp.data(), q, n, false, 0, in, {n, n, n}, t1);
    detail::contract(b.interp.data(), q, n, false, 1, t1, {q, n, n}, vals);
    detail::contract(b.interp.data(), q, n, false, 2, vals, {q, q, n}, t1);
    std::memcpy(vals, t1, sizeof(double) * (size_t)q * q * q);
  }
  for (int d = 0; d < 3; ++d)
    detail::contract(b.colloc_deriv.data(), q, q, false, d, vals, {q, q, q}, out[d]);
}

/// Exact adjoint of grad_slab: accumulates the three directional transposes
/// into point values, then applies the interpolation transpose.
inline void grad_transpose_slab(const Basis1D& b, std::array<const double*, 3> in, double* out,
                                double* scratch) {
  int q = b.num_points_1d();
  size_t n3 = (size_t)q * q * q;
  size_t half = slab_scratch_size(b) / 2;
  double* acc = scratch + half;
  double* tmp = scratch;
  detail::contract(b.colloc_deriv.data(), q, q, true, 0, in[0], {q, q, q}, acc);
  for (int d = 1; d < 3; ++d) {
    detail::contract(b.colloc_deriv.data(), q, q, true, d, in[d], {q, q, q}, tmp);
    for (size_t i = 0; i < n3; ++i) acc[i] += tmp[i];
  }
  int n = b.num_nodes_1d();
  detail::contract(b.interp.data(), q, n, true, 2, acc, {q, q, q}, tmp);
  detail::contract(b.interp.data(), q, n, true, 1, tmp, {q, q, n}, acc);
  detail::contract(b.interp.data(), q, n, true, 0, acc, {q, n, n}, out);
}

namespace detail {

inline void check_ev(const Basis1D& b, const ElementVector& ev) {
  if (ev.nodes_per_dim != b.num_nodes_1d())
    throw std::invalid_argument("element vector does not match basis order");
  if (ev.data.size() != (size_t)ev.num_elements * 3 * ev.nodes_per_element())
    throw std::invalid_argument("element vector storage size mismatch");
}

inline void check_qv(const Basis1D& b, int num_elements, int points_per_dim, size_t size,
                     size_t comps) {
  if (points_per_dim != b.num_points_1d())
    throw std::invalid_argument("quadrature data does not match basis rule");
  size_t q3 = (size_t)points_per_dim * points_per_dim * points_per_dim;
  if (size != (size_t)num_elements * comps * q3)
    throw std::invalid_argument("quadrature data storage size mismatch");
}

}  // namespace detail

inline void apply_interp(const Basis1D& b, const ElementVector& ev, QuadValues& out) {
  detail::check_ev(b, ev);
  out = QuadValues::zeros(ev.num_elements, b.num_points_1d());
  std::vector<double> scratch(slab_scratch_size(b));
  for (int e = 0; e < ev.num_elements; ++e)
    for (int c = 0; c < 3; ++c) interp_slab(b, ev.slab(e, c), out.slab(e, c), scratch.data());
}

inline void apply_interp_transpose(const Basis1D& b, const QuadValues& qv, ElementVector& out) {
  detail::check_qv(b, qv.num_elements, qv.points_per_dim, qv.data.size(), 3);
  out = ElementVector::zeros(qv.num_elements, b.num_nodes_1d());
  std::vector<double> scratch(slab_scratch_size(b));
  for (int e = 0; e < qv.num_elements; ++e)
    for (int c = 0; c < 3; ++c)
      interp_transpose_slab(b, qv.slab(e, c), out.slab(e, c), scratch.data());
}

inline void apply_grad(const Basis1D& b, const ElementVector& ev, QuadGradients& out) {
  detail::check_ev(b, ev);
  out = QuadGradients::zeros(ev.num_elements, b.num_points_1d());
  std::vector<double> scratch(slab_scratch_size(b));
  for (int e = 0; e < ev.num_elements; ++e)
    for (int c = 0; c < 3; ++c)
      grad_slab(b, ev.slab(e, c), {out.slab(e, c, 0), out.slab(e, c, 1), out.slab(e, c, 2)},
                scratch.data());
}

inline void apply_grad_transpose(const Basis1D& b, const QuadGradients& qg, ElementVector& out) {
  detail::check_qv(b, qg.num_elements, qg.points_per_dim, qg.data.size(), 9);
  out = ElementVector::zeros(qg.num_elements, b.num_nodes_1d());
  std::vector<double> scratch(slab_scratch_size(b));
  for (int e = 0; e < qg.num_elements; ++e)
    for (int c = 0; c < 3; ++c)
      grad_transpose_slab(b, {qg.slab(e, c, 0), qg.slab(e, c, 1), qg.slab(e, c, 2)},
                          out.slab(e, c), scratch.data());
}

/// Dense q^3 x n^3 tabulations of the 3D interpolation and the three
/// directional derivative maps, as explicit Kronecker products. Assembly and
/// diagonal extraction walk these row by row.
struct DenseTabulation {
  int num_points = 0;
  int num_nodes = 0;
  std::vector<double> interp;                 // num_points x num_nodes
  std::array<std::vector<double>, 3> grad;    // each num_points x num_nodes
};

inline DenseTabulation dense_tabulation(const Basis1D& b) {
  int n = b.num_nodes_1d(), q = b.num_points_1d();
  DenseTabulation t;
  t.num_points = q * q * q;
  t.num_nodes = n * n * n;
  t.interp.resize((size_t)t.num_points * t.num_nodes);
  for (auto& g : t.grad) g.resize((size_t)t.num_points * t.num_nodes);
  for (int qc = 0; qc < q; ++qc)
    for (int qb = 0; qb < q; ++qb)
      for (int qa = 0; qa < q; ++qa) {
        size_t row = qa + (size_t)q * (qb + (size_t)q * qc);
        for (int k = 0; k < n; ++k)
          for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
              size_t col = i + (size_t)n * (j + (size_t)n * k);
              double bi = b.interp[qa * n + i], bj = b.interp[qb * n + j],
                     bk = b.interp[qc * n + k];
              double di = b.deriv[qa * n + i], dj = b.deriv[qb * n + j],
                     dk = b.deriv[qc * n + k];
              size_t idx = row * t.num_nodes + col;
              t.interp[idx] = bi * bj * bk;
              t.grad[0][idx] = di * bj * bk;
              t.grad[1][idx] = bi * dj * bk;
              t.grad[2][idx] = bi * bj * dk;
            }
      }
  return t;
}

}  // namespace hexmg
