#pragma once

// Concrete configuration spaces carrying a linear group action. A space
// bundles the action, its algebra derivative, the cotangent lift, and the
// fiber pairing term K(xi . p) defined by <K(xi.p), v> = -<p, D_v xi_*>.
// For the linear actions here D_v xi_* is xi acting on v, so K(xi.p) is the
// dual-representation action of xi on p.

#include <functional>

#include "clebsch/lie.hpp"
#include "clebsch/linalg.hpp"

namespace clebsch {

struct ConfigurationSpace {
  Group group;
  int dim;
  // g . q
  std::function<Vec(const GroupElement&, const Vec&)> act;
  // xi . q (infinitesimal action)
  std::function<Vec(const AlgebraElement&, const Vec&)> act_alg;
  // K(xi . p), the fiber term of the cotangent-lifted infinitesimal action
  std::function<Vec(const AlgebraElement&, const Vec&)> act_alg_dual;
  // cotangent lift of g on covectors
  std::function<Vec(const GroupElement&, const Vec&)> act_cot;
};

namespace detail {
inline Vec cross_vec(const AlgebraElement& xi, const Vec& v) {
  const Vec3 r = cross({xi.c[0], xi.c[1], xi.c[2]}, {v[0], v[1], v[2]});
  return {r[0], r[1], r[2]};
}
}  // namespace detail

// SO(3) acting on R^3 by rotation; xi . q = xi x q, K(xi . p) = xi x p.
inline ConfigurationSpace so3_vector_space() {
  ConfigurationSpace s;
  s.group = Group::so3;
  s.dim = 3;
  s.act = [](const GroupElement& g, const Vec& q) -> Vec {
    Mat3 r;
    std::copy(g.m.begin(), g.m.begin() + 9, r.begin());
    const Vec3 v = mat3_apply(r, {q[0], q[1], q[2]});
    return {v[0], v[1], v[2]};
  };
  s.act_alg = detail::cross_vec;
  s.act_alg_dual = detail::cross_vec;
  s.act_cot = s.act;  // orthogonal action: the lift is the same rotation
  return s;
}

// SU(2) acting on R^3 ~ su(2) via the adjoint representation.
inline ConfigurationSpace su2_adjoint_space() {
  ConfigurationSpace s;
  s.group = Group::su2;
  s.dim = 3;
  s.act = [](const GroupElement& g, const Vec& q) -> Vec {
    const AlgebraElement v = adjoint(g, make_algebra(Group::su2, q[0], q[1], q[2]));
    return {v.c[0], v.c[1], v.c[2]};
  };
  s.act_alg = detail::cross_vec;
  s.act_alg_dual = detail::cross_vec;
  s.act_cot = s.act;
  return s;
}

// U(1) acting on R^2 by rotation; xi . q = xi * J q with J the standard
// symplectic rotation generator.
inline ConfigurationSpace u1_plane_space() {
  ConfigurationSpace s;
  s.group = Group::u1;
  s.dim = 2;
  s.act = [](const GroupElement& g, const Vec& q) -> Vec {
    const double c = g.m[0], sn = g.m[1];
    return {c * q[0] - sn * q[1], sn * q[0] + c * q[1]};
  };
  s.act_alg = [](const AlgebraElement& xi, const Vec& q) -> Vec {
    return {-xi.c[0] * q[1], xi.c[0] * q[0]};
  };
  s.act_alg_dual = [](const AlgebraElement& xi, const Vec& p) -> Vec {
    return {-xi.c[0] * p[1], xi.c[0] * p[0]};
  };
  s.act_cot = s.act;
  return s;
}

}  // namespace clebsch
