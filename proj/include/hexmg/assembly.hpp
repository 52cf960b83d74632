#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "hexmg/operator.hpp"

namespace hexmg {

/// Square CSR matrix with sorted column indices per row.
struct SparseMatrix {
  int n = 0;
  std::vector<int> row_offsets;  // n + 1
  std::vector<int> cols;
  std::vector<double> vals;

  size_t nnz() const { return cols.size(); }

  void matvec(std::span<const double> x, std::span<double> y) const {
    for (int r = 0; r < n; ++r) {
      double s = 0.0;
      for (int k = row_offsets[r]; k < row_offsets[r + 1]; ++k) s += vals[k] * x[cols[k]];
      y[r] = s;
    }
  }

  /// Slot of (row, col), or -1 if not present.
  int find(int row, int col) const {
    auto b = cols.begin() + row_offsets[row];
    auto e = cols.begin() + row_offsets[row + 1];
    auto it = std::lower_bound(b, e, col);
    if (it == e || *it != col) return -1;
    return static_cast<int>(it - cols.begin());
  }

  void extract_diagonal(std::span<double> d) const {
    for (int r = 0; r < n; ++r) {
      int k = find(r, r);
      d[r] = k >= 0 ? vals[k] : 0.0;
    }
  }
};

/// Plan from a stream of COO coordinates to compressed slots: duplicates share
/// a slot, entries with any negative index map to the discard slot (== nnz).
struct CooTemplate {
  int n = 0;
  std::vector<int64_t> rows, cols;
  std::vector<size_t> plan;
  size_t num_nonzeros = 0;

  size_t discard_slot() const { return num_nonzeros; }
};

inline CooTemplate build_coo_template(std::vector<int64_t> rows, std::vector<int64_t> cols,
                                      int n) {
  if (rows.size() != cols.size())
    throw std::invalid_argument("coo row/col streams must have equal length");
  CooTemplate t;
  t.n = n;
  t.rows = std::move(rows);
  t.cols = std::move(cols);
  size_t m = t.rows.size();

  std::vector<size_t> order;
  order.reserve(m);
  for (size_t k = 0; k < m; ++k)
    if (t.rows[k] >= 0 && t.cols[k] >= 0) order.push_back(k);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (t.rows[a] != t.rows[b]) return t.rows[a] < t.rows[b];
    return t.cols[a] < t.cols[b];
  });

  t.plan.assign(m, 0);
  std::vector<int64_t> urows, ucols;
  int64_t prev_r = -1, prev_c = -1;
  size_t slot = 0;
  bool first = true;
  for (size_t k : order) {
    if (first || t.rows[k] != prev_r || t.cols[k] != prev_c) {
      if (!first) ++slot;
      urows.push_back(t.rows[k]);
      ucols.push_back(t.cols[k]);
      prev_r = t.rows[k];
      prev_c = t.cols[k];
      first = false;
    }
    t.plan[k] = slot;
  }
  t.num_nonzeros = urows.size();
  for (size_t k = 0; k < m; ++k)
    if (t.rows[k] < 0 || t.cols[k] < 0) t.plan[k] = t.num_nonzeros;

  return t;
}

/// Zero-valued CSR skeleton matching a template's sparsity.
inline SparseMatrix pattern_from_template(const CooTemplate& t) {
  SparseMatrix a;
  a.n = t.n;
  a.row_offsets.assign(t.n + 1, 0);
  a.cols.resize(t.num_nonzeros);
  a.vals.assign(t.num_nonzeros, 0.0);
  // Rebuild the sorted unique pairs from the plan.
  std::vector<std::pair<int64_t, int64_t>> pairs(t.num_nonzeros);
  for (size_t k = 0; k < t.rows.size(); ++k) {
    size_t s = t.plan[k];
    if (s < t.num_nonzeros) pairs[s] = {t.rows[k], t.cols[k]};
  }
  for (auto& [r, c] : pairs) ++a.row_offsets[r + 1];
  std::partial_sum(a.row_offsets.begin(), a.row_offsets.end(), a.row_offsets.begin());
  for (size_t s = 0; s < pairs.size(); ++s) a.cols[s] = (int)pairs[s].second;
  return a;
}

/// Numeric phase on raw streams: sums duplicates, ignores discarded entries.
/// Accumulation follows entry order, so refills are bit-identical.
inline void fill_from_coo(const CooTemplate& t, std::span<const double> entry_vals,
                          SparseMatrix& a) {
  if (entry_vals.size() != t.rows.size())
    throw std::invalid_argument("coo value stream length mismatch");
  if (a.n != t.n || a.nnz() != t.num_nonzeros)
    throw std::invalid_argument("matrix does not match template");
  std::vector<double> acc(t.num_nonzeros + 1, 0.0);
  for (size_t k = 0; k < entry_vals.size(); ++k) acc[t.plan[k]] += entry_vals[k];
  std::copy(acc.begin(), acc.end() - 1, a.vals.begin());
}

/// Symbolic + numeric assembly of a matrix-free operator. The entry stream
/// enumerates, per element, all (node, component) x (node, component) pairs;
/// pairs touching constrained DoFs are emitted with negative indices and one
/// identity entry per constrained DoF is appended.
struct CooAssembly {
  CooTemplate tmpl;
  SparseMatrix matrix;
  size_t element_entries = 0;
};

inline CooAssembly coo_symbolic(const MatrixFreeOperator& op) {
  const auto& restriction = op.restriction();
  const auto* constraints = op.constraints().get();
  int npe = restriction.nodes_per_element();
  size_t per_elem = (size_t)(3 * npe) * (3 * npe);
  size_t m = (size_t)restriction.num_elements * per_elem;

  std::vector<int64_t> rows, cols;
  rows.reserve(m);
  cols.reserve(m);
  for (int e = 0; e < restriction.num_elements; ++e) {
    const int32_t* map = restriction.element(e);
    for (int a = 0; a < npe; ++a)
      for (int ca = 0; ca < 3; ++ca) {
        int64_t row = 3 * (int64_t)map[a] + ca;
        bool row_fixed = constraints && constraints->mask[row];
        for (int b = 0; b < npe; ++b)
          for (int cb = 0; cb < 3; ++cb) {
            int64_t col = 3 * (int64_t)map[b] + cb;
            bool col_fixed = constraints && constraints->mask[col];
            if (row_fixed || col_fixed) {
              rows.push_back(-1);
              cols.push_back(-1);
            } else {
              rows.push_back(row);
              cols.push_back(col);
            }
          }
      }
  }
  if (constraints)
    for (int64_t d = 0; d < op.size(); ++d)
      if (constraints->mask[d]) {
        rows.push_back(d);
        cols.push_back(d);
      }

  CooAssembly out;
  out.element_entries = m;
  out.tmpl = build_coo_template(std::move(rows), std::move(cols), op.size());
  out.matrix = pattern_from_template(out.tmpl);
  return out;
}

/// Per-entry B^T D B triple product over shared quadrature points; each
/// output entry is accumulated in its own scalar, never in an element matrix.
inline void coo_numeric(const MatrixFreeOperator& op, CooAssembly& asm_out) {
  if (!op.state()->valid) throw StateNotInitializedError();
  const auto& restriction = op.restriction();
  const auto& tab = op.tabulation();
  int npe = restriction.nodes_per_element();
  int nq = op.points_per_element();
  size_t per_elem = (size_t)(3 * npe) * (3 * npe);
  if (asm_out.element_entries != (size_t)restriction.num_elements * per_elem)
    throw std::invalid_argument("template does not match operator");

  std::vector<double> entries(asm_out.tmpl.rows.size(), 0.0);
  parallel_for(restriction.num_elements, op.threads(), [&](int begin, int end) {
    std::vector<double> dq((size_t)nq * 81);
    for (int e = begin; e < end; ++e) {
      for (int q = 0; q < nq; ++q) op.pointwise_jacobian_tensor(e, q, dq.data() + (size_t)q * 81);
      double* dst = entries.data() + (size_t)e * per_elem;
      size_t pos = 0;
      for (int a = 0; a < npe; ++a)
        for (int ca = 0; ca < 3; ++ca)
          for (int b = 0; b < npe; ++b)
            for (int cb = 0; cb < 3; ++cb) {
              double sum = 0.0;
              for (int q = 0; q < nq; ++q) {
                const double* d = dq.data() + (size_t)q * 81;
                const double ga0 = tab.grad[0][(size_t)q * npe + a];
                const double ga1 = tab.grad[1][(size_t)q * npe + a];
                const double ga2 = tab.grad[2][(size_t)q * npe + a];
                const double gb0 = tab.grad[0][(size_t)q * npe + b];
                const double gb1 = tab.grad[1][(size_t)q * npe + b];
                const double gb2 = tab.grad[2][(size_t)q * npe + b];
                const double* drow = d + ((size_t)ca * 3) * 9 + (size_t)cb * 3;
                sum += ga0 * (drow[0] * gb0 + drow[1] * gb1 + drow[2] * gb2);
                sum += ga1 * (drow[9] * gb0 + drow[10] * gb1 + drow[11] * gb2);
                sum += ga2 * (drow[18] * gb0 + drow[19] * gb1 + drow[20] * gb2);
              }
              dst[pos++] = sum;
            }
    }
  });
  // Identity tail for constrained DoFs.
  for (size_t k = asm_out.element_entries; k < entries.size(); ++k) entries[k] = 1.0;
  fill_from_coo(asm_out.tmpl, entries, asm_out.matrix);
}

}  // namespace hexmg
