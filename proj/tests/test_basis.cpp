#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "hexmg/basis.hpp"
#include "hexmg/quadrature.hpp"

using namespace hexmg;

namespace {

// Independent dense oracle: explicit Kronecker products of the 1D
// tabulations, applied as a single matrix to x-fastest vectorized slabs.
Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::MatrixXd to_eigen(const std::vector<double>& m, int rows, int cols) {
  Eigen::MatrixXd out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = m[r * cols + c];
  return out;
}

// 3D operator with per-direction 1D factors (fz ⊗ fy ⊗ fx for x-fastest).
Eigen::MatrixXd kron3(const Eigen::MatrixXd& fz, const Eigen::MatrixXd& fy,
                      const Eigen::MatrixXd& fx) {
  return kron(fz, kron(fy, fx));
}

std::vector<double> random_vector(size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

}  // namespace

TEST(Quadrature, TwoPointGaussLegendre) {
  auto rule = gauss_legendre(2);
  double root = 1.0 / std::sqrt(3.0);
  EXPECT_NEAR(rule.points[0], -root, 1e-15);
  EXPECT_NEAR(rule.points[1], root, 1e-15);
  EXPECT_NEAR(rule.weights[0], 1.0, 1e-15);
  EXPECT_NEAR(rule.weights[1], 1.0, 1e-15);
}

TEST(Quadrature, WeightsSumToMeasure) {
  for (int q = 1; q <= 8; ++q) {
    auto rule = gauss_legendre(q);
    double sum = 0.0;
    for (double w : rule.weights) sum += w;
    EXPECT_NEAR(sum, 2.0, 1e-14) << "q = " << q;
    for (double w : rule.weights) EXPECT_GT(w, 0.0);
  }
}

TEST(Quadrature, PolynomialExactness) {
  for (int q = 1; q <= 8; ++q) {
    auto rule = gauss_legendre(q);
    for (int k = 0; k <= 2 * q - 1; ++k) {
      double integral = 0.0;
      for (int i = 0; i < q; ++i) integral += rule.weights[i] * std::pow(rule.points[i], k);
      double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
      EXPECT_NEAR(integral, exact, 1e-13) << "q = " << q << ", degree " << k;
    }
  }
}

TEST(Quadrature, InvalidArguments) {
  EXPECT_THROW(gauss_legendre(0), std::invalid_argument);
  EXPECT_THROW(gauss_lobatto_nodes(0), std::invalid_argument);
}

TEST(Basis, LobattoNodesIncludeEndpoints) {
  for (int p = 1; p <= 5; ++p) {
    auto nodes = gauss_lobatto_nodes(p);
    ASSERT_EQ(nodes.size(), (size_t)p + 1);
    EXPECT_EQ(nodes.front(), -1.0);
    EXPECT_EQ(nodes.back(), 1.0);
    for (size_t i = 1; i < nodes.size(); ++i) EXPECT_LT(nodes[i - 1], nodes[i]);
  }
}

TEST(Basis, InterpRowsSumToOne) {
  auto b = build_lagrange_basis(2, 3);
  for (int r = 0; r < 3; ++r) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += b.interp[r * 3 + i];
    EXPECT_NEAR(s, 1.0, 1e-14);
  }
}

TEST(Basis, DerivRowsSumToZero) {
  auto b = build_lagrange_basis(3, 4);
  for (int r = 0; r < 4; ++r) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += b.deriv[r * 4 + i];
    EXPECT_NEAR(s, 0.0, 1e-13);
  }
}

TEST(Basis, CollocatedTabulationIsIdentity) {
  for (int p = 1; p <= 4; ++p) {
    auto nodes = gauss_lobatto_nodes(p);
    auto tab = lagrange_values(nodes, nodes);
    for (int r = 0; r <= p; ++r)
      for (int c = 0; c <= p; ++c)
        EXPECT_NEAR(tab[r * (p + 1) + c], r == c ? 1.0 : 0.0, 1e-14);
  }
}

TEST(Basis, PseudoInverseIsLeftInverse) {
  for (int p = 1; p <= 3; ++p) {
    auto b = build_lagrange_basis(p, p + 2);
    int n = p + 1, q = p + 2;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int r = 0; r < q; ++r) s += b.pinv_interp[i * q + r] * b.interp[r * n + j];
        EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-13);
      }
  }
}

TEST(Basis, InvalidArguments) {
  EXPECT_THROW(build_lagrange_basis(0, 2), std::invalid_argument);
  EXPECT_THROW(build_lagrange_basis(2, 0), std::invalid_argument);
  EXPECT_THROW(build_lagrange_basis(2, 2), std::invalid_argument);  // q < p + 1
}

TEST(SumFactorization, ConstantFieldInterp) {
  auto b = build_lagrange_basis(2);
  ElementVector ev = ElementVector::zeros(2, 3);
  for (auto& x : ev.data) x = 4.25;
  QuadValues qv;
  apply_interp(b, ev, qv);
  for (double v : qv.data) EXPECT_NEAR(v, 4.25, 1e-14);
}

TEST(SumFactorization, QuadraticReproduction) {
  // A p = 2 basis reproduces x^2 sampled at its nodes.
  auto b = build_lagrange_basis(2);
  ElementVector ev = ElementVector::zeros(1, 3);
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i)
        ev.slab(0, 0)[i + 3 * (j + 3 * k)] = b.nodes[i] * b.nodes[i];
  QuadValues qv;
  apply_interp(b, ev, qv);
  int q = b.num_points_1d();
  for (int k = 0; k < q; ++k)
    for (int j = 0; j < q; ++j)
      for (int i = 0; i < q; ++i) {
        double x = b.rule.points[i];
        EXPECT_NEAR(qv.slab(0, 0)[i + q * (j + q * k)], x * x, 1e-14);
      }
}

TEST(SumFactorization, InterpMatchesDenseKronecker) {
  auto b = build_lagrange_basis(2);
  int n = 3, q = 3;
  ElementVector ev = ElementVector::zeros(1, n);
  ev.data = random_vector(ev.data.size(), 42);
  QuadValues qv;
  apply_interp(b, ev, qv);

  Eigen::MatrixXd bi = to_eigen(b.interp, q, n);
  Eigen::MatrixXd dense = kron3(bi, bi, bi);
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(ev.slab(0, c), n * n * n);
    Eigen::VectorXd expect = dense * u;
    for (int i = 0; i < q * q * q; ++i) EXPECT_NEAR(qv.slab(0, c)[i], expect[i], 1e-14);
  }
}

TEST(SumFactorization, ConstantFieldGradientIsZero) {
  auto b = build_lagrange_basis(3);
  ElementVector ev = ElementVector::zeros(1, 4);
  for (auto& x : ev.data) x = -2.5;
  QuadGradients qg;
  apply_grad(b, ev, qg);
  for (double v : qg.data) EXPECT_NEAR(v, 0.0, 1e-13);
}

TEST(SumFactorization, LinearFieldGradient) {
  auto b = build_lagrange_basis(2);
  ElementVector ev = ElementVector::zeros(1, 3);
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) ev.slab(0, 0)[i + 3 * (j + 3 * k)] = b.nodes[i];
  QuadGradients qg;
  apply_grad(b, ev, qg);
  int nq = b.num_points_3d();
  for (int p = 0; p < nq; ++p) {
    EXPECT_NEAR(qg.slab(0, 0, 0)[p], 1.0, 1e-13);
    EXPECT_NEAR(qg.slab(0, 0, 1)[p], 0.0, 1e-13);
    EXPECT_NEAR(qg.slab(0, 0, 2)[p], 0.0, 1e-13);
  }
}

TEST(SumFactorization, SixContractionMatchesNineContraction) {
  // Oracle: the nine-contraction form applies B_xi directly per direction.
  for (int p : {1, 2, 3}) {
    auto b = build_lagrange_basis(p);
    int n = p + 1, q = b.num_points_1d();
    ElementVector ev = ElementVector::zeros(2, n);
    ev.data = random_vector(ev.data.size(), 100 + p);
    QuadGradients qg;
    apply_grad(b, ev, qg);

    Eigen::MatrixXd bi = to_eigen(b.interp, q, n);
    Eigen::MatrixXd bx = to_eigen(b.deriv, q, n);
    Eigen::MatrixXd dense[3] = {kron3(bi, bi, bx), kron3(bi, bx, bi), kron3(bx, bi, bi)};
    for (int e = 0; e < 2; ++e)
      for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(ev.slab(e, c), n * n * n);
        for (int d = 0; d < 3; ++d) {
          Eigen::VectorXd expect = dense[d] * u;
          for (int i = 0; i < q * q * q; ++i)
            EXPECT_NEAR(qg.slab(e, c, d)[i], expect[i], 1e-13)
                << "p=" << p << " d=" << d;
        }
      }
  }
}

TEST(SumFactorization, TransposeOfZeroIsZero) {
  auto b = build_lagrange_basis(2);
  QuadValues qv = QuadValues::zeros(3, b.num_points_1d());
  ElementVector ev;
  apply_interp_transpose(b, qv, ev);
  for (double v : ev.data) EXPECT_EQ(v, 0.0);
}

TEST(SumFactorization, AdjointIdentity) {
  // <B x, y> == <x, B^T y> for both interpolation and gradient.
  for (int p : {1, 2, 3}) {
    auto b = build_lagrange_basis(p);
    ElementVector x = ElementVector::zeros(2, p + 1);
    x.data = random_vector(x.data.size(), 7 * p + 1);

    QuadValues bx;
    apply_interp(b, x, bx);
    QuadValues y = QuadValues::zeros(2, b.num_points_1d());
    y.data = random_vector(y.data.size(), 7 * p + 2);
    ElementVector bty;
    apply_interp_transpose(b, y, bty);
    double lhs = 0.0, rhs = 0.0;
    for (size_t i = 0; i < bx.data.size(); ++i) lhs += bx.data[i] * y.data[i];
    for (size_t i = 0; i < x.data.size(); ++i) rhs += x.data[i] * bty.data[i];
    EXPECT_NEAR(lhs, rhs, 1e-13 * std::max(1.0, std::abs(lhs)));

    QuadGradients gx;
    apply_grad(b, x, gx);
    QuadGradients yg = QuadGradients::zeros(2, b.num_points_1d());
    yg.data = random_vector(yg.data.size(), 7 * p + 3);
    ElementVector gty;
    apply_grad_transpose(b, yg, gty);
    lhs = rhs = 0.0;
    for (size_t i = 0; i < gx.data.size(); ++i) lhs += gx.data[i] * yg.data[i];
    for (size_t i = 0; i < x.data.size(); ++i) rhs += x.data[i] * gty.data[i];
    EXPECT_NEAR(lhs, rhs, 1e-13 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(SumFactorization, TransposeMatchesDenseTranspose) {
  // p = 1: B^T y against the transposed 8x8-block dense tabulation.
  auto b = build_lagrange_basis(1);
  int n = 2, q = 2;
  QuadValues y = QuadValues::zeros(1, q);
  y.data = random_vector(y.data.size(), 55);
  ElementVector bty;
  apply_interp_transpose(b, y, bty);

  Eigen::MatrixXd bi = to_eigen(b.interp, q, n);
  Eigen::MatrixXd dense = kron3(bi, bi, bi);
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.slab(0, c), q * q * q);
    Eigen::VectorXd expect = dense.transpose() * yv;
    for (int i = 0; i < n * n * n; ++i) EXPECT_NEAR(bty.slab(0, c)[i], expect[i], 1e-14);
  }
}

TEST(SumFactorization, ShapeMismatchThrows) {
  auto b2 = build_lagrange_basis(2);
  ElementVector ev = ElementVector::zeros(1, 4);  // p = 3 layout
  QuadValues qv;
  EXPECT_THROW(apply_interp(b2, ev, qv), std::invalid_argument);
  QuadGradients qg;
  EXPECT_THROW(apply_grad(b2, ev, qg), std::invalid_argument);
  QuadValues bad = QuadValues::zeros(1, 5);
  ElementVector out;
  EXPECT_THROW(apply_interp_transpose(b2, bad, out), std::invalid_argument);
}

TEST(SumFactorization, DenseTabulationMatchesApply) {
  auto b = build_lagrange_basis(2);
  auto tab = dense_tabulation(b);
  ElementVector ev = ElementVector::zeros(1, 3);
  ev.data = random_vector(ev.data.size(), 77);
  QuadGradients qg;
  apply_grad(b, ev, qg);
  for (int d = 0; d < 3; ++d)
    for (int p = 0; p < tab.num_points; ++p) {
      double s = 0.0;
      for (int a = 0; a < tab.num_nodes; ++a)
        s += tab.grad[d][(size_t)p * tab.num_nodes + a] * ev.slab(0, 0)[a];
      EXPECT_NEAR(qg.slab(0, 0, d)[p], s, 1e-13);
    }
}
