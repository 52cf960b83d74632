#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "hexmg/dual.hpp"
#include "hexmg/errors.hpp"
#include "hexmg/tensor3.hpp"

namespace hexmg {

/// Isotropic Neo-Hookean material, psi(e) = lambda/2 (log J)^2 - mu log J
/// + mu trace(e) with e the Green-Euler strain.
struct NeoHookean {
  double mu = 1.0;
  double lambda = 1.0;
};

inline NeoHookean make_neo_hookean(double mu, double lambda) {
  if (!(mu > 0.0)) throw std::invalid_argument("shear modulus mu must be positive");
  if (!(lambda > -2.0 / 3.0 * mu))
    throw std::invalid_argument("lambda must exceed -2/3 mu for admissibility");
  return NeoHookean{mu, lambda};
}

inline NeoHookean lame_from_young_poisson(double young, double poisson) {
  if (!(young > 0.0)) throw std::invalid_argument("Young's modulus must be positive");
  if (poisson == 0.5)
    throw std::invalid_argument("incompressible limit nu = 0.5 is unsupported");
  if (!(poisson > -1.0 && poisson < 0.5))
    throw std::invalid_argument("Poisson ratio must lie in (-1, 0.5)");
  double mu = young / (2.0 * (1.0 + poisson));
  double lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
  return NeoHookean{mu, lambda};
}

inline double strain_energy_density(const NeoHookean& mat, const Mat3d& grad_u) {
  Mat3d f = Mat3d::identity() + grad_u;
  double j = det3(f);
  if (!(j > 0.0)) throw InvertedElementError(j);
  double log_j = std::log(j);
  // trace(e) = (trace(b) - 3) / 2 with b = F F^T.
  double trace_b = 0.0;
  for (int k = 0; k < 9; ++k) trace_b += f.a[k] * f.a[k];
  double trace_e = 0.5 * (trace_b - 3.0);
  return 0.5 * mat.lambda * log_j * log_j - mat.mu * log_j + mat.mu * trace_e;
}

/// tau = mu (b - I) + lambda log J I; symmetric by construction.
inline Mat3d kirchhoff_stress(const NeoHookean& mat, const Mat3d& grad_u) {
  Mat3d f = Mat3d::identity() + grad_u;
  double j = det3(f);
  if (!(j > 0.0)) throw InvertedElementError(j);
  double log_j = std::log(j);
  Mat3d b = f * transpose(f);
  Mat3d tau = mat.mu * (b - Mat3d::identity());
  double d = mat.lambda * log_j;
  tau(0, 0) += d;
  tau(1, 1) += d;
  tau(2, 2) += d;
  return tau;
}

/// How the pointwise linearization is stored between the residual evaluation
/// that writes it and the Jacobian applies that read it.
enum class JacobianStorage { Current, InitialNative, InitialTuned, InitialAD };

/// Scalars stored per quadrature point, including the weighted measure.
inline int quadrature_state_stride(JacobianStorage s) {
  switch (s) {
    case JacobianStorage::Current: return 17;        // W, dxi/dx, tau, lambda log J
    case JacobianStorage::InitialNative: return 19;  // W, dxi/dX, grad_X u
    case JacobianStorage::InitialTuned: return 26;   // native + C^-1, lambda log J
    case JacobianStorage::InitialAD: return 25;      // W, dxi/dX, grad_X u, S
  }
  return 0;
}

namespace detail {

constexpr int kSymIdx[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};

inline void pack_sym(const Mat3d& m, double* out) {
  for (int k = 0; k < 6; ++k) out[k] = m(kSymIdx[k][0], kSymIdx[k][1]);
}

inline Mat3d unpack_sym(const double* in) {
  Mat3d m;
  for (int k = 0; k < 6; ++k) {
    m(kSymIdx[k][0], kSymIdx[k][1]) = in[k];
    m(kSymIdx[k][1], kSymIdx[k][0]) = in[k];
  }
  return m;
}

inline void pack_full(const Mat3d& m, double* out) {
  for (int k = 0; k < 9; ++k) out[k] = m.a[k];
}

inline Mat3d unpack_full(const double* in) {
  Mat3d m;
  for (int k = 0; k < 9; ++k) m.a[k] = in[k];
  return m;
}

/// Second Piola-Kirchhoff stress S(E) = mu I + (lambda log J - mu) C^-1 with
/// C = I + 2E, templated so dual numbers can carry directional derivatives.
template <class T>
Mat3<T> second_piola_kirchhoff(double mu, double lambda, const Mat3<T>& green_lagrange) {
  Mat3<T> c = Mat3<T>::identity();
  for (int k = 0; k < 9; ++k) c.a[k] = c.a[k] + T(2.0) * green_lagrange.a[k];
  T log_j = T(0.5) * log(det3(c));
  Mat3<T> c_inv = inv3(c);
  Mat3<T> s = Mat3<T>::identity();
  T coeff = T(lambda) * log_j - T(mu);
  for (int k = 0; k < 9; ++k) s.a[k] = T(mu) * s.a[k] + coeff * c_inv.a[k];
  return s;
}

}  // namespace detail

/// Residual q-function: consumes the reference gradient of u at one point,
/// emits the pulled-back flux (component x reference-direction, scaled by the
/// weighted measure) and fills this point's state slice.
inline Mat3d residual_qpoint(const NeoHookean& mat, JacobianStorage storage,
                             const Mat3d& grad_u_xi, const Mat3d& dxidX, double wdet,
                             std::span<double> state) {
  Mat3d grad_u = grad_u_xi * dxidX;  // d u_c / d X_i
  Mat3d f = Mat3d::identity() + grad_u;
  double j = det3(f);
  if (!(j > 0.0)) throw InvertedElementError(j);
  double log_j = std::log(j);

  switch (storage) {
    case JacobianStorage::Current: {
      // dxi/dx = (dX/dxi + du/dxi)^-1 via dxi/dX * (I + grad_u)^-1.
      Mat3d dxidx = dxidX * inv3(f);
      Mat3d b = f * transpose(f);
      Mat3d tau = mat.mu * (b - Mat3d::identity());
      double d = mat.lambda * log_j;
      tau(0, 0) += d;
      tau(1, 1) += d;
      tau(2, 2) += d;
      state[0] = wdet;
      detail::pack_full(dxidx, state.data() + 1);
      detail::pack_sym(tau, state.data() + 10);
      state[16] = d;
      return wdet * (tau * transpose(dxidx));
    }
    case JacobianStorage::InitialNative:
    case JacobianStorage::InitialTuned:
    case JacobianStorage::InitialAD: {
      Mat3d c = transpose(f) * f;
      Mat3d c_inv = inv3(c);
      Mat3d s = Mat3d::identity();
      double coeff = mat.lambda * log_j - mat.mu;
      for (int k = 0; k < 9; ++k) s.a[k] = mat.mu * s.a[k] + coeff * c_inv.a[k];
      state[0] = wdet;
      detail::pack_full(dxidX, state.data() + 1);
      detail::pack_full(grad_u, state.data() + 10);
      if (storage == JacobianStorage::InitialTuned) {
        detail::pack_sym(c_inv, state.data() + 19);
        state[25] = mat.lambda * log_j;
      } else if (storage == JacobianStorage::InitialAD) {
        detail::pack_sym(s, state.data() + 19);
      }
      return wdet * ((f * s) * transpose(dxidX));
    }
  }
  return Mat3d::zero();
}

/// Jacobian q-function: linear in the reference gradient of du, reading only
/// the state slice written by the matching residual evaluation.
inline Mat3d jacobian_qpoint(const NeoHookean& mat, JacobianStorage storage,
                             const Mat3d& grad_du_xi, std::span<const double> state) {
  switch (storage) {
    case JacobianStorage::Current: {
      double wdet = state[0];
      Mat3d dxidx = detail::unpack_full(state.data() + 1);
      Mat3d tau = detail::unpack_sym(state.data() + 10);
      double lambda_log_j = state[16];
      Mat3d grad_du = grad_du_xi * dxidx;
      Mat3d deps = sym(grad_du);
      Mat3d k = grad_du * tau;
      double tr = mat.lambda * trace(deps);
      double c = 2.0 * (mat.mu - lambda_log_j);
      for (int i = 0; i < 3; ++i) {
        k(i, i) += tr;
        for (int jj = 0; jj < 3; ++jj) k(i, jj) += c * deps(i, jj);
      }
      return wdet * (k * transpose(dxidx));
    }
    case JacobianStorage::InitialNative:
    case JacobianStorage::InitialTuned: {
      double wdet = state[0];
      Mat3d dxidX = detail::unpack_full(state.data() + 1);
      Mat3d grad_u = detail::unpack_full(state.data() + 10);
      Mat3d f = Mat3d::identity() + grad_u;
      Mat3d c_inv;
      double lambda_log_j;
      if (storage == JacobianStorage::InitialTuned) {
        c_inv = detail::unpack_sym(state.data() + 19);
        lambda_log_j = state[25];
      } else {
        Mat3d c = transpose(f) * f;
        c_inv = inv3(c);
        lambda_log_j = 0.5 * mat.lambda * std::log(det3(c));
      }
      Mat3d s = Mat3d::identity();
      double coeff = lambda_log_j - mat.mu;
      for (int k = 0; k < 9; ++k) s.a[k] = mat.mu * s.a[k] + coeff * c_inv.a[k];
      Mat3d df = grad_du_xi * dxidX;
      Mat3d de = sym(transpose(f) * df);
      // dS = lambda (C^-1 : dE) C^-1 - 2 (lambda log J - mu) C^-1 dE C^-1.
      double cde = frob_inner(c_inv, de);
      Mat3d ds = (mat.lambda * cde) * c_inv - (2.0 * coeff) * ((c_inv * de) * c_inv);
      return wdet * ((df * s + f * ds) * transpose(dxidX));
    }
    case JacobianStorage::InitialAD: {
      double wdet = state[0];
      Mat3d dxidX = detail::unpack_full(state.data() + 1);
      Mat3d grad_u = detail::unpack_full(state.data() + 10);
      Mat3d s_stored = detail::unpack_sym(state.data() + 19);
      Mat3d f = Mat3d::identity() + grad_u;
      Mat3d df = grad_du_xi * dxidX;
      Mat3d de = sym(transpose(f) * df);
      Mat3d e = sym(grad_u);
      // E = (C - I)/2 = sym(grad_u) + grad_u^T grad_u / 2.
      Mat3d gt_g = transpose(grad_u) * grad_u;
      for (int k = 0; k < 9; ++k) e.a[k] += 0.5 * gt_g.a[k];
      Mat3<Dual> e_dual;
      for (int k = 0; k < 9; ++k) e_dual.a[k] = Dual(e.a[k], de.a[k]);
      Mat3<Dual> s_dual = detail::second_piola_kirchhoff<Dual>(mat.mu, mat.lambda, e_dual);
      Mat3d ds;
      for (int k = 0; k < 9; ++k) ds.a[k] = s_dual.a[k].deriv;
      return wdet * ((df * s_stored + f * ds) * transpose(dxidX));
    }
  }
  return Mat3d::zero();
}

}  // namespace hexmg
