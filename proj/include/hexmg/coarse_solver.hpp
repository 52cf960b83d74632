#pragma once

#include <span>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "hexmg/assembly.hpp"
#include "hexmg/errors.hpp"

namespace hexmg {

/// Sparse direct Cholesky for the assembled coarsest-level operator. The
/// symbolic analysis is done once; numeric refactorization follows every
/// pattern-preserving refill.
class CholeskyCoarseSolver {
 public:
  void factorize(const SparseMatrix& a) {
    Eigen::Map<const Eigen::SparseMatrix<double, Eigen::RowMajor, int>> mapped(
        a.n, a.n, (Eigen::Index)a.nnz(), a.row_offsets.data(), a.cols.data(), a.vals.data());
    matrix_ = mapped;  // column-major copy for the solver
    if (!analyzed_) {
      llt_.analyzePattern(matrix_);
      analyzed_ = true;
    }
    llt_.factorize(matrix_);
    if (llt_.info() != Eigen::Success)
      throw NotSpdError("coarse Cholesky factorization failed at level 0");
    n_ = a.n;
  }

  bool ready() const { return n_ > 0; }
  int size() const { return n_; }

  void solve(std::span<const double> b, std::span<double> x) const {
    if (!ready()) throw std::logic_error("coarse solver not factorized");
    Eigen::Map<const Eigen::VectorXd> bv(b.data(), n_);
    Eigen::Map<Eigen::VectorXd> xv(x.data(), n_);
    xv = llt_.solve(bv);
  }

 private:
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
  bool analyzed_ = false;
  int n_ = 0;
};

}  // namespace hexmg
