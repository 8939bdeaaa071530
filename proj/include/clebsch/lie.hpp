#pragma once

// Lie structures for the three supported groups.
//
// Fixed bases and conventions used throughout:
//   u(1)   dim 1, coordinate x meaning the element i*x; bracket vanishes.
//   so(3)  dim 3, basis e1,e2,e3 with [e1,e2]=e3 cyclically; coords are the
//          usual axis-angle vector, exp is the Rodrigues rotation.
//   su(2)  dim 3, basis e_a = -i*sigma_a/2, which satisfies the same
//          [e1,e2]=e3 cyclic relations; adjoint-orbit computations are routed
//          through the two-to-one cover onto SO(3) so algebra data stays real.
// kappa is the coordinate dot product in these bases, and duals are stored in
// the corresponding dual basis. The coadjoint map is defined without a minus
// sign: kappa(ad*_xi mu, zeta) = kappa(mu, [xi, zeta]), so on so(3)*
// ad*_xi mu = mu x xi.

#include <array>
#include <cmath>
#include <string>

#include "clebsch/errors.hpp"
#include "clebsch/linalg.hpp"

namespace clebsch {

enum class Group { u1, so3, su2 };

inline int algebra_dim(Group g) { return g == Group::u1 ? 1 : 3; }

inline const char* group_name(Group g) {
  switch (g) {
    case Group::u1: return "u1";
    case Group::so3: return "so3";
    case Group::su2: return "su2";
  }
  return "?";
}

struct AlgebraElement {
  Group group;
  std::array<double, 3> c{};  // coordinates in the fixed basis; u1 uses c[0]
  int dim() const { return algebra_dim(group); }
};

struct DualAlgebraElement {
  Group group;
  std::array<double, 3> c{};
  int dim() const { return algebra_dim(group); }
};

inline AlgebraElement make_algebra(Group g, double x, double y = 0, double z = 0) {
  if (g == Group::u1) return {g, {x, 0, 0}};
  return {g, {x, y, z}};
}

inline DualAlgebraElement make_dual(Group g, double x, double y = 0, double z = 0) {
  if (g == Group::u1) return {g, {x, 0, 0}};
  return {g, {x, y, z}};
}

inline AlgebraElement algebra_zero(Group g) { return {g, {0, 0, 0}}; }
inline DualAlgebraElement dual_zero(Group g) { return {g, {0, 0, 0}}; }

inline AlgebraElement basis_element(Group g, int a) {
  AlgebraElement e{g, {0, 0, 0}};
  e.c[static_cast<std::size_t>(a)] = 1.0;
  return e;
}

namespace detail {
inline void require_same(Group a, Group b, const char* op) {
  if (a != b) throw GroupMismatch(std::string(op) + ": group mismatch (" + group_name(a) + " vs " +
                                  group_name(b) + ")");
}
}  // namespace detail

inline AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b) {
  detail::require_same(a.group, b.group, "algebra +");
  return {a.group, {a.c[0] + b.c[0], a.c[1] + b.c[1], a.c[2] + b.c[2]}};
}

inline AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b) {
  detail::require_same(a.group, b.group, "algebra -");
  return {a.group, {a.c[0] - b.c[0], a.c[1] - b.c[1], a.c[2] - b.c[2]}};
}

inline AlgebraElement operator*(double s, const AlgebraElement& a) {
  return {a.group, {s * a.c[0], s * a.c[1], s * a.c[2]}};
}

inline DualAlgebraElement operator+(const DualAlgebraElement& a, const DualAlgebraElement& b) {
  detail::require_same(a.group, b.group, "dual +");
  return {a.group, {a.c[0] + b.c[0], a.c[1] + b.c[1], a.c[2] + b.c[2]}};
}

inline DualAlgebraElement operator-(const DualAlgebraElement& a, const DualAlgebraElement& b) {
  detail::require_same(a.group, b.group, "dual -");
  return {a.group, {a.c[0] - b.c[0], a.c[1] - b.c[1], a.c[2] - b.c[2]}};
}

inline DualAlgebraElement operator*(double s, const DualAlgebraElement& a) {
  return {a.group, {s * a.c[0], s * a.c[1], s * a.c[2]}};
}

inline double algebra_norm(const AlgebraElement& a) {
  return std::sqrt(a.c[0] * a.c[0] + a.c[1] * a.c[1] + a.c[2] * a.c[2]);
}

inline double dual_norm(const DualAlgebraElement& a) {
  return std::sqrt(a.c[0] * a.c[0] + a.c[1] * a.c[1] + a.c[2] * a.c[2]);
}

// kappa(mu, xi): the fixed nondegenerate pairing (coordinate dot product).
inline double kappa(const DualAlgebraElement& mu, const AlgebraElement& xi) {
  detail::require_same(mu.group, xi.group, "kappa");
  return mu.c[0] * xi.c[0] + mu.c[1] * xi.c[1] + mu.c[2] * xi.c[2];
}

inline AlgebraElement bracket(const AlgebraElement& a, const AlgebraElement& b) {
  detail::require_same(a.group, b.group, "bracket");
  if (a.group == Group::u1) return algebra_zero(Group::u1);
  const Vec3 r = cross({a.c[0], a.c[1], a.c[2]}, {b.c[0], b.c[1], b.c[2]});
  return {a.group, {r[0], r[1], r[2]}};
}

// ad*_xi mu, defined by kappa(ad*_xi mu, zeta) = kappa(mu, [xi, zeta]).
inline DualAlgebraElement coadjoint_star(const AlgebraElement& xi, const DualAlgebraElement& mu) {
  detail::require_same(xi.group, mu.group, "coadjoint_star");
  if (xi.group == Group::u1) return dual_zero(Group::u1);
  const Vec3 r = cross({mu.c[0], mu.c[1], mu.c[2]}, {xi.c[0], xi.c[1], xi.c[2]});
  return {xi.group, {r[0], r[1], r[2]}};
}

// ---- Group elements ----
//
// Storage: u1 as the unit complex number (re, im); so3 as a row-major 3x3
// orthogonal matrix; su2 as a 2x2 complex unitary matrix, row-major with
// interleaved (re, im) parts.

struct GroupElement {
  Group group;
  std::array<double, 9> m{};
};

inline GroupElement identity_element(Group g) {
  GroupElement e{g, {}};
  switch (g) {
    case Group::u1:
      e.m[0] = 1.0;
      break;
    case Group::so3:
      e.m = mat3_identity();
      break;
    case Group::su2:
      e.m[0] = 1.0;  // U00 = 1
      e.m[6] = 1.0;  // U11 = 1
      break;
  }
  return e;
}

namespace detail {

struct Quat {
  double w, x, y, z;
};

inline Quat quat_from_su2(const GroupElement& g) {
  // U = w*I - i*(x s1 + y s2 + z s3)
  return {(g.m[0] + g.m[6]) / 2.0, -(g.m[3] + g.m[5]) / 2.0, (g.m[4] - g.m[2]) / 2.0,
          (g.m[7] - g.m[1]) / 2.0};
}

inline GroupElement su2_from_quat(const Quat& q) {
  GroupElement g{Group::su2, {}};
  g.m[0] = q.w;
  g.m[1] = -q.z;  // U00 = w - i z
  g.m[2] = -q.y;
  g.m[3] = -q.x;  // U01 = -y - i x
  g.m[4] = q.y;
  g.m[5] = -q.x;  // U10 =  y - i x
  g.m[6] = q.w;
  g.m[7] = q.z;  // U11 = w + i z
  return g;
}

inline Quat quat_mul(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y + a.y * b.w + a.z * b.x - a.x * b.z,
          a.w * b.z + a.z * b.w + a.x * b.y - a.y * b.x};
}

inline Mat3 rotation_from_quat(const Quat& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
          2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

inline Mat3 rodrigues(const Vec3& omega) {
  const double th = norm3(omega);
  if (th < 1e-300) return mat3_identity();
  const Vec3 n = {omega[0] / th, omega[1] / th, omega[2] / th};
  const Mat3 K = {0, -n[2], n[1], n[2], 0, -n[0], -n[1], n[0], 0};
  const Mat3 K2 = mat3_mul(K, K);
  Mat3 r = mat3_identity();
  r = mat3_add(r, mat3_scale(K, std::sin(th)));
  r = mat3_add(r, mat3_scale(K2, 1.0 - std::cos(th)));
  return r;
}

inline Vec3 rotation_log(const Mat3& r) {
  const double c = std::clamp((mat3_trace(r) - 1.0) / 2.0, -1.0, 1.0);
  const Vec3 v = {(r[7] - r[5]) / 2.0, (r[2] - r[6]) / 2.0, (r[3] - r[1]) / 2.0};
  const double vn = norm3(v);
  // |v| = sin(th) up to rounding; atan2 keeps th well conditioned at both
  // ends of [0, pi], unlike acos.
  const double th = std::atan2(vn, c);
  if (th < 1e-8) {
    // sin(th)/th ~ 1; v already carries the sin(th)-scaled axis
    return v;
  }
  if (th < 3.14159265358979 - 1e-4) {
    const double s = th / vn;
    return {s * v[0], s * v[1], s * v[2]};
  }
  // Near pi: recover the axis from the symmetric part, sign from v.
  Vec3 n;
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (r[i * 3 + i] > r[k * 3 + k]) k = i;
  n[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, (r[k * 3 + k] + 1.0) / 2.0));
  for (int i = 0; i < 3; ++i)
    if (i != k) n[static_cast<std::size_t>(i)] = (r[k * 3 + i] + r[i * 3 + k]) / (4.0 * n[static_cast<std::size_t>(k)]);
  double nn = norm3(n);
  for (auto& x : n) x /= nn;
  if (n[0] * v[0] + n[1] * v[1] + n[2] * v[2] < 0)
    for (auto& x : n) x = -x;
  return {th * n[0], th * n[1], th * n[2]};
}

}  // namespace detail

inline GroupElement group_exp(const AlgebraElement& xi, double t = 1.0) {
  switch (xi.group) {
    case Group::u1: {
      const double th = t * xi.c[0];
      GroupElement g{Group::u1, {}};
      g.m[0] = std::cos(th);
      g.m[1] = std::sin(th);
      return g;
    }
    case Group::so3: {
      GroupElement g{Group::so3, detail::rodrigues({t * xi.c[0], t * xi.c[1], t * xi.c[2]})};
      return g;
    }
    case Group::su2: {
      const Vec3 w = {t * xi.c[0], t * xi.c[1], t * xi.c[2]};
      const double th = norm3(w);
      detail::Quat q{1, 0, 0, 0};
      if (th > 1e-300) {
        const double s = std::sin(th / 2.0) / th;
        q = {std::cos(th / 2.0), s * w[0], s * w[1], s * w[2]};
      }
      return detail::su2_from_quat(q);
    }
  }
  throw GroupMismatch("group_exp: unknown group");
}

inline AlgebraElement group_log(const GroupElement& g) {
  switch (g.group) {
    case Group::u1:
      return make_algebra(Group::u1, std::atan2(g.m[1], g.m[0]));
    case Group::so3: {
      Mat3 r;
      std::copy(g.m.begin(), g.m.begin() + 9, r.begin());
      const Vec3 w = detail::rotation_log(r);
      return make_algebra(Group::so3, w[0], w[1], w[2]);
    }
    case Group::su2: {
      const detail::Quat q = detail::quat_from_su2(g);
      const double vn = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
      if (vn < 1e-300) return algebra_zero(Group::su2);
      const double th = 2.0 * std::atan2(vn, q.w);
      const double s = th / vn;
      return make_algebra(Group::su2, s * q.x, s * q.y, s * q.z);
    }
  }
  throw GroupMismatch("group_log: unknown group");
}

inline GroupElement multiply(const GroupElement& a, const GroupElement& b) {
  detail::require_same(a.group, b.group, "multiply");
  switch (a.group) {
    case Group::u1: {
      GroupElement g{Group::u1, {}};
      g.m[0] = a.m[0] * b.m[0] - a.m[1] * b.m[1];
      g.m[1] = a.m[0] * b.m[1] + a.m[1] * b.m[0];
      return g;
    }
    case Group::so3: {
      Mat3 ma, mb;
      std::copy(a.m.begin(), a.m.begin() + 9, ma.begin());
      std::copy(b.m.begin(), b.m.begin() + 9, mb.begin());
      GroupElement g{Group::so3, mat3_mul(ma, mb)};
      return g;
    }
    case Group::su2:
      return detail::su2_from_quat(detail::quat_mul(detail::quat_from_su2(a), detail::quat_from_su2(b)));
  }
  throw GroupMismatch("multiply: unknown group");
}

inline GroupElement inverse(const GroupElement& a) {
  switch (a.group) {
    case Group::u1: {
      GroupElement g{Group::u1, {}};
      g.m[0] = a.m[0];
      g.m[1] = -a.m[1];
      return g;
    }
    case Group::so3: {
      Mat3 m;
      std::copy(a.m.begin(), a.m.begin() + 9, m.begin());
      GroupElement g{Group::so3, mat3_transpose(m)};
      return g;
    }
    case Group::su2: {
      const detail::Quat q = detail::quat_from_su2(a);
      return detail::su2_from_quat({q.w, -q.x, -q.y, -q.z});
    }
  }
  throw GroupMismatch("inverse: unknown group");
}

// Max deviation from the defining constraints (orthogonality/unitarity and det 1).
inline double constraint_defect(const GroupElement& g) {
  switch (g.group) {
    case Group::u1:
      return std::abs(g.m[0] * g.m[0] + g.m[1] * g.m[1] - 1.0);
    case Group::so3: {
      Mat3 m;
      std::copy(g.m.begin(), g.m.begin() + 9, m.begin());
      const Mat3 gtg = mat3_mul(mat3_transpose(m), m);
      double d = std::abs(mat3_det(m) - 1.0);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) d = std::max(d, std::abs(gtg[i * 3 + j] - (i == j ? 1.0 : 0.0)));
      return d;
    }
    case Group::su2: {
      // U+U = I and det U = 1 in terms of the quaternion: |q| = 1.
      const detail::Quat q = detail::quat_from_su2(g);
      return std::abs(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z - 1.0);
    }
  }
  throw GroupMismatch("constraint_defect: unknown group");
}

inline bool is_valid(const GroupElement& g, double tol = 1e-12) {
  return constraint_defect(g) <= tol;
}

// Ad_g zeta in basis coordinates.
inline AlgebraElement adjoint(const GroupElement& g, const AlgebraElement& zeta) {
  detail::require_same(g.group, zeta.group, "adjoint");
  switch (g.group) {
    case Group::u1:
      return zeta;
    case Group::so3: {
      Mat3 r;
      std::copy(g.m.begin(), g.m.begin() + 9, r.begin());
      const Vec3 v = mat3_apply(r, {zeta.c[0], zeta.c[1], zeta.c[2]});
      return make_algebra(Group::so3, v[0], v[1], v[2]);
    }
    case Group::su2: {
      const Mat3 r = detail::rotation_from_quat(detail::quat_from_su2(g));
      const Vec3 v = mat3_apply(r, {zeta.c[0], zeta.c[1], zeta.c[2]});
      return make_algebra(Group::su2, v[0], v[1], v[2]);
    }
  }
  throw GroupMismatch("adjoint: unknown group");
}

// CoAd_g mu, defined by kappa(CoAd_g mu, zeta) = kappa(mu, Ad_{g^-1} zeta).
inline DualAlgebraElement coad(const GroupElement& g, const DualAlgebraElement& mu) {
  detail::require_same(g.group, mu.group, "coad");
  const GroupElement gi = inverse(g);
  DualAlgebraElement out{mu.group, {}};
  const int d = algebra_dim(mu.group);
  for (int a = 0; a < d; ++a) {
    const AlgebraElement w = adjoint(gi, basis_element(mu.group, a));
    out.c[static_cast<std::size_t>(a)] = kappa(mu, w);
  }
  return out;
}

// ---- Tangent group TG = g x|_Ad G ----

struct TangentGroupElement {
  AlgebraElement xi;
  GroupElement g;
};

inline TangentGroupElement tangent_identity(Group g) {
  return {algebra_zero(g), identity_element(g)};
}

// (xi, a) * (zeta, b) = (xi + Ad_a zeta, a b)
inline TangentGroupElement tangent_multiply(const TangentGroupElement& p,
                                            const TangentGroupElement& q) {
  return {p.xi + adjoint(p.g, q.xi), multiply(p.g, q.g)};
}

// (xi, a)^-1 = (-Ad_{a^-1} xi, a^-1)
inline TangentGroupElement tangent_inverse(const TangentGroupElement& p) {
  const GroupElement gi = inverse(p.g);
  return {-1.0 * adjoint(gi, p.xi), gi};
}

// Coadjoint action of TG on (g x g)* = g* x g*:
// CoAd_{(xi,a)}(mu1, mu2) = (CoAd_a mu1, CoAd_a mu2 - ad*_xi CoAd_a mu1).
inline std::pair<DualAlgebraElement, DualAlgebraElement> tangent_group_coadjoint(
    const TangentGroupElement& p, const DualAlgebraElement& mu1, const DualAlgebraElement& mu2) {
  const DualAlgebraElement n1 = coad(p.g, mu1);
  const DualAlgebraElement n2 = coad(p.g, mu2) - coadjoint_star(p.xi, n1);
  return {n1, n2};
}

}  // namespace clebsch
