#pragma once

// Small dense helpers shared by the backends. Vectors are plain
// std::vector<double>; 3x3 matrices are row-major std::array<double,9>.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "clebsch/errors.hpp"

namespace clebsch {

using Vec = std::vector<double>;
using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_inf(const Vec& a) {
  double m = 0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vec scaled(const Vec& x, double alpha) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = alpha * x[i];
  return y;
}

inline Vec added(const Vec& a, const Vec& b) {
  Vec y = a;
  axpy(1.0, b, y);
  return y;
}

inline Vec subtracted(const Vec& a, const Vec& b) {
  Vec y = a;
  axpy(-1.0, b, y);
  return y;
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline double norm3(const Vec3& a) { return std::sqrt(dot3(a, a)); }

// Dense n x n solve, partial pivoting. A is row-major and is destroyed.
// Throws NonConvergence on a singular pivot; callers treat that as a failed solve.
inline Vec solve_dense(std::vector<double> A, Vec b) {
  const std::size_t n = b.size();
  if (A.size() != n * n) throw std::invalid_argument("solve_dense: shape mismatch");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r * n + col]) > std::abs(A[piv * n + col])) piv = r;
    if (std::abs(A[piv * n + col]) < 1e-300)
      throw NonConvergence("solve_dense: singular matrix");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(A[piv * n + c], A[col * n + c]);
      std::swap(b[piv], b[col]);
    }
    const double d = A[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = A[r * n + col] / d;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
      b[r] -= f * b[col];
    }
  }
  Vec x(n);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) s -= A[ri * n + c] * x[c];
    x[ri] = s / A[ri * n + ri];
  }
  return x;
}

// ---- 3x3 helpers (row-major) ----

inline Mat3 mat3_zero() { return {0, 0, 0, 0, 0, 0, 0, 0, 0}; }
inline Mat3 mat3_identity() { return {1, 0, 0, 0, 1, 0, 0, 0, 1}; }

inline Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * b[k * 3 + j];
      c[i * 3 + j] = s;
    }
  return c;
}

inline Mat3 mat3_add(const Mat3& a, const Mat3& b) {
  Mat3 c;
  for (int i = 0; i < 9; ++i) c[i] = a[i] + b[i];
  return c;
}

inline Mat3 mat3_scale(const Mat3& a, double s) {
  Mat3 c;
  for (int i = 0; i < 9; ++i) c[i] = s * a[i];
  return c;
}

inline Mat3 mat3_transpose(const Mat3& a) {
  return {a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]};
}

inline double mat3_trace(const Mat3& a) { return a[0] + a[4] + a[8]; }

inline double mat3_det(const Mat3& a) {
  return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
         a[2] * (a[3] * a[7] - a[4] * a[6]);
}

inline Mat3 mat3_inverse(const Mat3& a) {
  const double det = mat3_det(a);
  if (std::abs(det) < 1e-300) throw SingularMetric("mat3_inverse: singular matrix");
  const double id = 1.0 / det;
  Mat3 r;
  r[0] = (a[4] * a[8] - a[5] * a[7]) * id;
  r[1] = (a[2] * a[7] - a[1] * a[8]) * id;
  r[2] = (a[1] * a[5] - a[2] * a[4]) * id;
  r[3] = (a[5] * a[6] - a[3] * a[8]) * id;
  r[4] = (a[0] * a[8] - a[2] * a[6]) * id;
  r[5] = (a[2] * a[3] - a[0] * a[5]) * id;
  r[6] = (a[3] * a[7] - a[4] * a[6]) * id;
  r[7] = (a[1] * a[6] - a[0] * a[7]) * id;
  r[8] = (a[0] * a[4] - a[1] * a[3]) * id;
  return r;
}

inline Vec3 mat3_apply(const Mat3& a, const Vec3& v) {
  return {a[0] * v[0] + a[1] * v[1] + a[2] * v[2], a[3] * v[0] + a[4] * v[1] + a[5] * v[2],
          a[6] * v[0] + a[7] * v[1] + a[8] * v[2]};
}

// True iff the symmetric matrix is positive definite (Cholesky succeeds).
inline bool mat3_is_spd(const Mat3& a, double tol = 0.0) {
  double l00s = a[0];
  if (l00s <= tol) return false;
  const double l00 = std::sqrt(l00s);
  const double l10 = a[3] / l00, l20 = a[6] / l00;
  const double l11s = a[4] - l10 * l10;
  if (l11s <= tol) return false;
  const double l11 = std::sqrt(l11s);
  const double l21 = (a[7] - l20 * l10) / l11;
  const double l22s = a[8] - l20 * l20 - l21 * l21;
  return l22s > tol;
}

// Symmetric 3x3 <-> packed length-6 storage, order (00, 01, 02, 11, 12, 22).
inline void sym6_pack(const Mat3& m, double* out) {
  out[0] = m[0];
  out[1] = m[1];
  out[2] = m[2];
  out[3] = m[4];
  out[4] = m[5];
  out[5] = m[8];
}

inline Mat3 sym6_unpack(const double* in) {
  return {in[0], in[1], in[2], in[1], in[3], in[4], in[2], in[4], in[5]};
}

}  // namespace clebsch
