#pragma once

#include <array>

namespace hexmg {

/// Row-major 3x3 matrix over a scalar-like type (double or Dual).
template <class T>
struct Mat3 {
  std::array<T, 9> a{};

  T& operator()(int i, int j) { return a[3 * i + j]; }
  const T& operator()(int i, int j) const { return a[3 * i + j]; }

  static Mat3 zero() { return Mat3{}; }

  static Mat3 identity() {
    Mat3 m;
    m(0, 0) = T(1);
    m(1, 1) = T(1);
    m(2, 2) = T(1);
    return m;
  }

  Mat3& operator+=(const Mat3& o) {
    for (int k = 0; k < 9; ++k) a[k] = a[k] + o.a[k];
    return *this;
  }
  Mat3& operator-=(const Mat3& o) {
    for (int k = 0; k < 9; ++k) a[k] = a[k] - o.a[k];
    return *this;
  }
};

using Mat3d = Mat3<double>;

template <class T>
Mat3<T> operator+(Mat3<T> x, const Mat3<T>& y) {
  return x += y;
}

template <class T>
Mat3<T> operator-(Mat3<T> x, const Mat3<T>& y) {
  return x -= y;
}

template <class T>
Mat3<T> operator*(const T& s, const Mat3<T>& m) {
  Mat3<T> r;
  for (int k = 0; k < 9; ++k) r.a[k] = s * m.a[k];
  return r;
}

inline Mat3d operator*(double s, const Mat3d& m) {
  Mat3d r;
  for (int k = 0; k < 9; ++k) r.a[k] = s * m.a[k];
  return r;
}

template <class T>
Mat3<T> operator*(const Mat3<T>& x, const Mat3<T>& y) {
  Mat3<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      T s = x(i, 0) * y(0, j);
      s = s + x(i, 1) * y(1, j);
      s = s + x(i, 2) * y(2, j);
      r(i, j) = s;
    }
  return r;
}

template <class T>
Mat3<T> transpose(const Mat3<T>& m) {
  Mat3<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = m(j, i);
  return r;
}

template <class T>
T trace(const Mat3<T>& m) {
  return m(0, 0) + m(1, 1) + m(2, 2);
}

template <class T>
T det3(const Mat3<T>& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

/// Inverse via the adjugate; caller guarantees det(m) != 0.
template <class T>
Mat3<T> inv3(const Mat3<T>& m) {
  Mat3<T> r;
  r(0, 0) = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  r(0, 1) = m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2);
  r(0, 2) = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
  r(1, 0) = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
  r(1, 1) = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
  r(1, 2) = m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2);
  r(2, 0) = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
  r(2, 1) = m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1);
  r(2, 2) = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  T inv_det = T(1) / det3(m);
  for (int k = 0; k < 9; ++k) r.a[k] = r.a[k] * inv_det;
  return r;
}

template <class T>
Mat3<T> sym(const Mat3<T>& m) {
  Mat3<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = T(0.5) * (m(i, j) + m(j, i));
  return r;
}

inline double frob_inner(const Mat3d& x, const Mat3d& y) {
  double s = 0.0;
  for (int k = 0; k < 9; ++k) s += x.a[k] * y.a[k];
  return s;
}

}  // namespace hexmg
