#pragma once

// Periodic 3-torus finite-difference Yang-Mills-Higgs system. Fields are
// algebra-valued per site (non-compact discretization with central
// differences), the metric is flat with lapse 1, and star operators are
// identity maps in these coordinates; the a^3 volume weight enters only in
// lattice sums. Supported pairs: U(1) with a charge-1 complex scalar and
// SU(2) with an adjoint (real triplet) Higgs.

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "clebsch/errors.hpp"
#include "clebsch/integrate.hpp"
#include "clebsch/lie.hpp"
#include "clebsch/linalg.hpp"

namespace clebsch {

struct LatticeGeometry {
  int n = 2;
  double a = 1.0;

  int sites() const { return n * n * n; }
  int wrap(int c) const {
    int m = c % n;
    return m < 0 ? m + n : m;
  }
  int index(int x, int y, int z) const { return (wrap(x) * n + wrap(y)) * n + wrap(z); }
  std::array<int, 3> coords(int site) const {
    return {site / (n * n), (site / n) % n, site % n};
  }
  int neighbor(int site, int dir, int offset) const {
    std::array<int, 3> c = coords(site);
    c[static_cast<std::size_t>(dir)] += offset;
    return index(c[0], c[1], c[2]);
  }
  void validate() const {
    if (n < 2) throw std::invalid_argument("LatticeGeometry: n must be at least 2");
    if (!(a > 0)) throw std::invalid_argument("LatticeGeometry: spacing must be positive");
  }
};

// Dimension of the Higgs fiber: charge-1 complex scalar for u1 (re, im),
// adjoint triplet for su2.
inline int lattice_fiber_dim(Group g) {
  switch (g) {
    case Group::u1: return 2;
    case Group::su2: return 3;
    default: break;
  }
  throw GroupMismatch("lattice: group must be u1 or su2, got " + std::string(group_name(g)));
}

struct HiggsPotential {
  double mu = 0.0;
  double v = 0.0;
};

// Field layout: A, D indexed ((site*3 + dir)*dg + a); phi, pi (site*df + c);
// A0 (site*dg + a); site = (x*n + y)*n + z.
struct LatticeState {
  Group group = Group::u1;
  LatticeGeometry geom;
  double t = 0;
  Vec A, D, phi, pi, A0;
};

inline LatticeState make_lattice_state(Group group, const LatticeGeometry& geom) {
  geom.validate();
  const int dg = algebra_dim(group);
  const int df = lattice_fiber_dim(group);
  LatticeState s;
  s.group = group;
  s.geom = geom;
  const std::size_t ns = static_cast<std::size_t>(geom.sites());
  s.A.assign(ns * 3 * static_cast<std::size_t>(dg), 0.0);
  s.D.assign(ns * 3 * static_cast<std::size_t>(dg), 0.0);
  s.phi.assign(ns * static_cast<std::size_t>(df), 0.0);
  s.pi.assign(ns * static_cast<std::size_t>(df), 0.0);
  s.A0.assign(ns * static_cast<std::size_t>(dg), 0.0);
  return s;
}

namespace detail {

inline void check_lattice_shapes(const LatticeState& s, const char* who) {
  s.geom.validate();
  const std::size_t ns = static_cast<std::size_t>(s.geom.sites());
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(s.group));
  const std::size_t df = static_cast<std::size_t>(lattice_fiber_dim(s.group));
  if (s.A.size() != ns * 3 * dg || s.D.size() != ns * 3 * dg || s.phi.size() != ns * df ||
      s.pi.size() != ns * df || s.A0.size() != ns * dg)
    throw std::invalid_argument(std::string(who) + ": field arrays do not match the geometry");
}

// Infinitesimal fiber action rho(xi): i*xi on the complex scalar, xi x . on
// the adjoint triplet. Both representations are skew, so the same map serves
// the dual fields.
inline void rep_act(Group g, const double* xi, const double* f, double* out) {
  if (g == Group::u1) {
    out[0] = -xi[0] * f[1];
    out[1] = xi[0] * f[0];
  } else {
    out[0] = xi[1] * f[2] - xi[2] * f[1];
    out[1] = xi[2] * f[0] - xi[0] * f[2];
    out[2] = xi[0] * f[1] - xi[1] * f[0];
  }
}

inline void bracket_raw(Group g, const double* x, const double* y, double* out) {
  if (g == Group::u1) {
    out[0] = 0.0;
  } else {
    out[0] = x[1] * y[2] - x[2] * y[1];
    out[1] = x[2] * y[0] - x[0] * y[2];
    out[2] = x[0] * y[1] - x[1] * y[0];
  }
}

// ad*_xi mu = mu x xi in these coordinates (zero for u1).
inline void coad_star_raw(Group g, const double* xi, const double* mu, double* out) {
  if (g == Group::u1) {
    out[0] = 0.0;
  } else {
    out[0] = mu[1] * xi[2] - mu[2] * xi[1];
    out[1] = mu[2] * xi[0] - mu[0] * xi[2];
    out[2] = mu[0] * xi[1] - mu[1] * xi[0];
  }
}

inline void diamond_raw(Group g, const double* phi, const double* pi, double* out) {
  if (g == Group::u1) {
    out[0] = phi[0] * pi[1] - phi[1] * pi[0];
  } else {
    out[0] = phi[1] * pi[2] - phi[2] * pi[1];
    out[1] = phi[2] * pi[0] - phi[0] * pi[2];
    out[2] = phi[0] * pi[1] - phi[1] * pi[0];
  }
}

}  // namespace detail

// phi diamond pi, defined by kappa(phi diamond pi, xi) = <xi . phi, pi>:
// Im(conj(phi) pi) for u1, phi x pi for su2.
inline DualAlgebraElement diamond(Group g, const Vec& phi, const Vec& pi) {
  const std::size_t df = static_cast<std::size_t>(lattice_fiber_dim(g));
  if (phi.size() != df || pi.size() != df)
    throw std::invalid_argument("diamond: fiber dimension mismatch");
  DualAlgebraElement out = dual_zero(g);
  detail::diamond_raw(g, phi.data(), pi.data(), out.c.data());
  return out;
}

// (D_i f)(x) = (f(x+i) - f(x-i))/(2a) + rho(A_i(x)) f(x) on a fiber field.
inline Vec covariant_difference(const LatticeGeometry& geom, Group group, const Vec& A,
                                const Vec& field, int direction) {
  if (direction < 0 || direction > 2)
    throw std::out_of_range("covariant_difference: direction must be 0, 1, or 2");
  geom.validate();
  const int ns = geom.sites();
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(group));
  const std::size_t df = static_cast<std::size_t>(lattice_fiber_dim(group));
  if (A.size() != static_cast<std::size_t>(ns) * 3 * dg)
    throw std::invalid_argument("covariant_difference: connection size mismatch");
  if (field.size() != static_cast<std::size_t>(ns) * df)
    throw std::invalid_argument("covariant_difference: field size mismatch");
  Vec out(field.size());
  const double inv2a = 1.0 / (2.0 * geom.a);
  double act[3];
  for (int s = 0; s < ns; ++s) {
    const std::size_t sp = static_cast<std::size_t>(geom.neighbor(s, direction, +1)) * df;
    const std::size_t sm = static_cast<std::size_t>(geom.neighbor(s, direction, -1)) * df;
    const std::size_t s0 = static_cast<std::size_t>(s) * df;
    const double* Ai = &A[(static_cast<std::size_t>(s) * 3 + static_cast<std::size_t>(direction)) * dg];
    detail::rep_act(group, Ai, &field[s0], act);
    for (std::size_t c = 0; c < df; ++c)
      out[s0 + c] = (field[sp + c] - field[sm + c]) * inv2a + act[c];
  }
  return out;
}

// B stored per dual plane: component k holds B_{ij} for (i,j) = (k+1, k+2)
// mod 3, B_ij = Delta_i A_j - Delta_j A_i + [A_i, A_j].
inline Vec curvature_b(const LatticeGeometry& geom, Group group, const Vec& A) {
  geom.validate();
  const int ns = geom.sites();
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(group));
  if (A.size() != static_cast<std::size_t>(ns) * 3 * dg)
    throw std::invalid_argument("curvature_b: connection size mismatch");
  Vec B(A.size());
  const double inv2a = 1.0 / (2.0 * geom.a);
  double br[3];
  for (int s = 0; s < ns; ++s) {
    for (int k = 0; k < 3; ++k) {
      const int i = (k + 1) % 3, j = (k + 2) % 3;
      const std::size_t ip = static_cast<std::size_t>(geom.neighbor(s, i, +1));
      const std::size_t im = static_cast<std::size_t>(geom.neighbor(s, i, -1));
      const std::size_t jp = static_cast<std::size_t>(geom.neighbor(s, j, +1));
      const std::size_t jm = static_cast<std::size_t>(geom.neighbor(s, j, -1));
      const double* Ai = &A[(static_cast<std::size_t>(s) * 3 + static_cast<std::size_t>(i)) * dg];
      const double* Aj = &A[(static_cast<std::size_t>(s) * 3 + static_cast<std::size_t>(j)) * dg];
      detail::bracket_raw(group, Ai, Aj, br);
      double* out = &B[(static_cast<std::size_t>(s) * 3 + static_cast<std::size_t>(k)) * dg];
      for (std::size_t c = 0; c < dg; ++c) {
        const double dAj = (A[(ip * 3 + static_cast<std::size_t>(j)) * dg + c] -
                            A[(im * 3 + static_cast<std::size_t>(j)) * dg + c]) * inv2a;
        const double dAi = (A[(jp * 3 + static_cast<std::size_t>(i)) * dg + c] -
                            A[(jm * 3 + static_cast<std::size_t>(i)) * dg + c]) * inv2a;
        out[c] = dAj - dAi + br[c];
      }
    }
  }
  return B;
}

// Signed plane accessor: B_ij at a site, antisymmetric in (i, j).
inline AlgebraElement curvature_plane(const LatticeGeometry& geom, Group group, const Vec& B,
                                      int site, int i, int j) {
  if (i < 0 || i > 2 || j < 0 || j > 2)
    throw std::out_of_range("curvature_plane: plane indices must be 0, 1, or 2");
  if (site < 0 || site >= geom.sites())
    throw std::out_of_range("curvature_plane: site index out of range");
  AlgebraElement out = algebra_zero(group);
  if (i == j) return out;
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(group));
  // (k+1, k+2) == (i, j) for exactly one k; the swapped order flips the sign.
  const int k = 3 - i - j;
  const double sign = (j == (i + 1) % 3) ? 1.0 : -1.0;
  const double* src = &B[(static_cast<std::size_t>(site) * 3 + static_cast<std::size_t>(k)) * dg];
  for (std::size_t c = 0; c < dg; ++c) out.c[c] = sign * src[c];
  return out;
}

// Gauss operator J(x) = sum_i [Delta_i D_i - ad*_{A_i} D_i] + phi diamond pi,
// a dual-algebra field per site. Vanishing is the constraint; paired against
// an algebra-valued test field it reproduces the gauge-action pairing
// exactly (summation by parts is exact on the periodic torus).
inline Vec gauss_residual(const LatticeState& st) {
  detail::check_lattice_shapes(st, "gauss_residual");
  const int ns = st.geom.sites();
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(st.group));
  const std::size_t df = static_cast<std::size_t>(lattice_fiber_dim(st.group));
  Vec J(static_cast<std::size_t>(ns) * dg, 0.0);
  const double inv2a = 1.0 / (2.0 * st.geom.a);
  double tmp[3];
  for (int s = 0; s < ns; ++s) {
    double* out = &J[static_cast<std::size_t>(s) * dg];
    for (int i = 0; i < 3; ++i) {
      const std::size_t ip = static_cast<std::size_t>(st.geom.neighbor(s, i, +1));
      const std::size_t im = static_cast<std::size_t>(st.geom.neighbor(s, i, -1));
      const double* Ai = &st.A[(static_cast<std::size_t>(s) * 3 + static_cast<std::size_t>(i)) * dg];
      const double* Di = &st.D[(static_cast<std::size_t>(s) * 3 + static_cast<std::size_t>(i)) * dg];
      detail::coad_star_raw(st.group, Ai, Di, tmp);
      for (std::size_t c = 0; c < dg; ++c)
        out[c] += (st.D[(ip * 3 + static_cast<std::size_t>(i)) * dg + c] -
                   st.D[(im * 3 + static_cast<std::size_t>(i)) * dg + c]) * inv2a - tmp[c];
    }
    detail::diamond_raw(st.group, &st.phi[static_cast<std::size_t>(s) * df],
                        &st.pi[static_cast<std::size_t>(s) * df], tmp);
    for (std::size_t c = 0; c < dg; ++c) out[c] += tmp[c];
  }
  return J;
}

struct GaussNorms {
  double l2 = 0;    // sqrt(a^3 sum_x |J(x)|^2)
  double linf = 0;  // max_x |J(x)|
};

inline GaussNorms gauss_norms(const LatticeGeometry& geom, Group group, const Vec& J) {
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(group));
  GaussNorms out;
  double acc = 0;
  for (std::size_t s = 0; s * dg < J.size(); ++s) {
    double site2 = 0;
    for (std::size_t c = 0; c < dg; ++c) site2 += J[s * dg + c] * J[s * dg + c];
    acc += site2;
    out.linf = std::max(out.linf, std::sqrt(site2));
  }
  out.l2 = std::sqrt(acc * geom.a * geom.a * geom.a);
  return out;
}

inline double potential_value(const HiggsPotential& pot, double phi_norm2) {
  const double d = phi_norm2 - pot.v * pot.v;
  return pot.mu * d * d;
}

// H = a^3 sum_x (|D|^2 + |B|^2 + |pi|^2 + |d_A phi|^2)/2 + V(phi),
// V(phi) = mu (|phi|^2 - v^2)^2.
inline double ymh_hamiltonian(const LatticeState& st, const HiggsPotential& pot) {
  detail::check_lattice_shapes(st, "ymh_hamiltonian");
  const int ns = st.geom.sites();
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(st.group));
  const std::size_t df = static_cast<std::size_t>(lattice_fiber_dim(st.group));
  const Vec B = curvature_b(st.geom, st.group, st.A);
  std::array<Vec, 3> dphi;
  for (int i = 0; i < 3; ++i) dphi[static_cast<std::size_t>(i)] =
      covariant_difference(st.geom, st.group, st.A, st.phi, i);
  double H = 0;
  for (int s = 0; s < ns; ++s) {
    double kin = 0;
    for (std::size_t c = 0; c < 3 * dg; ++c) {
      const double d = st.D[static_cast<std::size_t>(s) * 3 * dg + c];
      const double b = B[static_cast<std::size_t>(s) * 3 * dg + c];
      kin += d * d + b * b;
    }
    double phi2 = 0;
    for (std::size_t c = 0; c < df; ++c) {
      const double p = st.pi[static_cast<std::size_t>(s) * df + c];
      const double f = st.phi[static_cast<std::size_t>(s) * df + c];
      kin += p * p;
      phi2 += f * f;
      for (int i = 0; i < 3; ++i) {
        const double g = dphi[static_cast<std::size_t>(i)][static_cast<std::size_t>(s) * df + c];
        kin += g * g;
      }
    }
    H += 0.5 * kin + potential_value(pot, phi2);
  }
  return H * st.geom.a * st.geom.a * st.geom.a;
}

struct LatticeDerivative {
  Vec Adot, Ddot, phidot, pidot;
};

// Evolution equations with prescribed A0:
//   Adot_i   = Delta_i A0 + [A_i, A0] + D_i
//   Ddot_i   = ad*_{A0} D_i - curl-like sum eps_ijk (Delta_j B_k - ad*_{A_j} B_k)
//              - phi diamond (d_A phi)_i
//   phidot   = -rho(A0) phi + pi
//   pidot    = -rho(A0) pi + sum_i [Delta_i (d_A phi)_i + rho(A_i)(d_A phi)_i]
//              - V'(phi)
inline LatticeDerivative ymh_rhs(const LatticeState& st, const HiggsPotential& pot) {
  detail::check_lattice_shapes(st, "ymh_rhs");
  const int ns = st.geom.sites();
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(st.group));
  const std::size_t df = static_cast<std::size_t>(lattice_fiber_dim(st.group));
  const double inv2a = 1.0 / (2.0 * st.geom.a);

  const Vec B = curvature_b(st.geom, st.group, st.A);
  std::array<Vec, 3> dphi;
  for (int i = 0; i < 3; ++i) dphi[static_cast<std::size_t>(i)] =
      covariant_difference(st.geom, st.group, st.A, st.phi, i);

  LatticeDerivative d;
  d.Adot.assign(st.A.size(), 0.0);
  d.Ddot.assign(st.D.size(), 0.0);
  d.phidot.assign(st.phi.size(), 0.0);
  d.pidot.assign(st.pi.size(), 0.0);

  double tmp[3], tmp2[3];
  for (int s = 0; s < ns; ++s) {
    const std::size_t sz = static_cast<std::size_t>(s);
    const double* A0s = &st.A0[sz * dg];
    for (int i = 0; i < 3; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      const std::size_t ip = static_cast<std::size_t>(st.geom.neighbor(s, i, +1));
      const std::size_t im = static_cast<std::size_t>(st.geom.neighbor(s, i, -1));
      const double* Ai = &st.A[(sz * 3 + ii) * dg];
      const double* Di = &st.D[(sz * 3 + ii) * dg];
      double* Adot = &d.Adot[(sz * 3 + ii) * dg];
      double* Ddot = &d.Ddot[(sz * 3 + ii) * dg];

      detail::bracket_raw(st.group, Ai, A0s, tmp);
      for (std::size_t c = 0; c < dg; ++c)
        Adot[c] = (st.A0[ip * dg + c] - st.A0[im * dg + c]) * inv2a + tmp[c] + Di[c];

      detail::coad_star_raw(st.group, A0s, Di, tmp);
      for (std::size_t c = 0; c < dg; ++c) Ddot[c] = tmp[c];

      // eps_ijk over the two cyclic pairings of (j, k) for this i.
      for (int sgn = 0; sgn < 2; ++sgn) {
        const int j = sgn == 0 ? (i + 1) % 3 : (i + 2) % 3;
        const int k = sgn == 0 ? (i + 2) % 3 : (i + 1) % 3;
        const double sign = sgn == 0 ? 1.0 : -1.0;
        const std::size_t jp = static_cast<std::size_t>(st.geom.neighbor(s, j, +1));
        const std::size_t jm = static_cast<std::size_t>(st.geom.neighbor(s, j, -1));
        const double* Ajs = &st.A[(sz * 3 + static_cast<std::size_t>(j)) * dg];
        const double* Bks = &B[(sz * 3 + static_cast<std::size_t>(k)) * dg];
        detail::coad_star_raw(st.group, Ajs, Bks, tmp);
        for (std::size_t c = 0; c < dg; ++c) {
          const double dB = (B[(jp * 3 + static_cast<std::size_t>(k)) * dg + c] -
                             B[(jm * 3 + static_cast<std::size_t>(k)) * dg + c]) * inv2a;
          Ddot[c] -= sign * (dB - tmp[c]);
        }
      }

      detail::diamond_raw(st.group, &st.phi[sz * df], &dphi[ii][sz * df], tmp);
      for (std::size_t c = 0; c < dg; ++c) Ddot[c] -= tmp[c];
    }

    const double* phis = &st.phi[sz * df];
    const double* pis = &st.pi[sz * df];
    double* phidot = &d.phidot[sz * df];
    double* pidot = &d.pidot[sz * df];
    detail::rep_act(st.group, A0s, phis, tmp);
    for (std::size_t c = 0; c < df; ++c) phidot[c] = -tmp[c] + pis[c];

    detail::rep_act(st.group, A0s, pis, tmp);
    double phi2 = 0;
    for (std::size_t c = 0; c < df; ++c) phi2 += phis[c] * phis[c];
    const double vprime = 4.0 * pot.mu * (phi2 - pot.v * pot.v);
    for (std::size_t c = 0; c < df; ++c) pidot[c] = -tmp[c] - vprime * phis[c];
    for (int i = 0; i < 3; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      const std::size_t ip = static_cast<std::size_t>(st.geom.neighbor(s, i, +1));
      const std::size_t im = static_cast<std::size_t>(st.geom.neighbor(s, i, -1));
      const double* Ai = &st.A[(sz * 3 + ii) * dg];
      detail::rep_act(st.group, Ai, &dphi[ii][sz * df], tmp2);
      for (std::size_t c = 0; c < df; ++c)
        pidot[c] += (dphi[ii][ip * df + c] - dphi[ii][im * df + c]) * inv2a + tmp2[c];
    }
  }
  return d;
}

struct GaugeTransformation {
  std::vector<GroupElement> lambda;
};

inline GaugeTransformation identity_gauge(const LatticeGeometry& geom, Group group) {
  return {std::vector<GroupElement>(static_cast<std::size_t>(geom.sites()),
                                    identity_element(group))};
}

// Site-wise gauge action: A_i -> Ad_lam A_i - dlog_i, D_i -> CoAd_lam D_i,
// phi -> lam . phi, pi -> lam . pi, A0 -> Ad_lam A0, where the logarithmic
// derivative is dlog_i(x) = log(lam(x+i) lam(x-i)^{-1}) / (2a). The relative
// log keeps the abelian case exact (A -> A - grad chi) whenever neighbor
// increments stay inside the principal branch, and is first-order accurate
// for non-abelian lam.
inline LatticeState gauge_transform(const LatticeState& st, const GaugeTransformation& lam) {
  detail::check_lattice_shapes(st, "gauge_transform");
  const int ns = st.geom.sites();
  if (lam.lambda.size() != static_cast<std::size_t>(ns))
    throw std::invalid_argument("gauge_transform: one group element per site required");
  for (const auto& g : lam.lambda) {
    detail::require_same(g.group, st.group, "gauge_transform");
    if (constraint_defect(g) > 1e-9)
      throw std::invalid_argument("gauge_transform: site value violates the group constraint");
  }
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(st.group));
  const double inv2a = 1.0 / (2.0 * st.geom.a);

  LatticeState out = st;
  for (int s = 0; s < ns; ++s) {
    const std::size_t sz = static_cast<std::size_t>(s);
    const GroupElement& g = lam.lambda[sz];

    for (int i = 0; i < 3; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      const GroupElement& gp = lam.lambda[static_cast<std::size_t>(st.geom.neighbor(s, i, +1))];
      const GroupElement& gm = lam.lambda[static_cast<std::size_t>(st.geom.neighbor(s, i, -1))];
      const AlgebraElement dlog = group_log(multiply(gp, inverse(gm)));

      AlgebraElement Ai = algebra_zero(st.group);
      DualAlgebraElement Di = dual_zero(st.group);
      for (std::size_t c = 0; c < dg; ++c) {
        Ai.c[c] = st.A[(sz * 3 + ii) * dg + c];
        Di.c[c] = st.D[(sz * 3 + ii) * dg + c];
      }
      const AlgebraElement Anew = adjoint(g, Ai);
      const DualAlgebraElement Dnew = coad(g, Di);
      for (std::size_t c = 0; c < dg; ++c) {
        out.A[(sz * 3 + ii) * dg + c] = Anew.c[c] - dlog.c[c] * inv2a;
        out.D[(sz * 3 + ii) * dg + c] = Dnew.c[c];
      }
    }

    AlgebraElement a0 = algebra_zero(st.group);
    for (std::size_t c = 0; c < dg; ++c) a0.c[c] = st.A0[sz * dg + c];
    const AlgebraElement a0new = adjoint(g, a0);
    for (std::size_t c = 0; c < dg; ++c) out.A0[sz * dg + c] = a0new.c[c];

    if (st.group == Group::u1) {
      const double re = g.m[0], im = g.m[1];
      const double fr = st.phi[sz * 2], fi = st.phi[sz * 2 + 1];
      const double pr = st.pi[sz * 2], qi = st.pi[sz * 2 + 1];
      out.phi[sz * 2] = re * fr - im * fi;
      out.phi[sz * 2 + 1] = re * fi + im * fr;
      out.pi[sz * 2] = re * pr - im * qi;
      out.pi[sz * 2 + 1] = re * qi + im * pr;
    } else {
      AlgebraElement f = algebra_zero(st.group), p = algebra_zero(st.group);
      for (std::size_t c = 0; c < 3; ++c) {
        f.c[c] = st.phi[sz * 3 + c];
        p.c[c] = st.pi[sz * 3 + c];
      }
      const AlgebraElement fn = adjoint(g, f), pn = adjoint(g, p);
      for (std::size_t c = 0; c < 3; ++c) {
        out.phi[sz * 3 + c] = fn.c[c];
        out.pi[sz * 3 + c] = pn.c[c];
      }
    }
  }
  return out;
}

// Infinitesimal gauge action on the configuration variables:
// xi . A_i = [xi, A_i] - Delta_i xi and xi . phi = rho(xi) phi. Used for the
// discrete momentum-map pairing identity.
inline std::pair<Vec, Vec> infinitesimal_gauge_action(const LatticeGeometry& geom, Group group,
                                                      const Vec& A, const Vec& phi,
                                                      const Vec& xi_field) {
  geom.validate();
  const int ns = geom.sites();
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(group));
  const std::size_t df = static_cast<std::size_t>(lattice_fiber_dim(group));
  if (xi_field.size() != static_cast<std::size_t>(ns) * dg)
    throw std::invalid_argument("infinitesimal_gauge_action: xi field size mismatch");
  Vec dA(A.size(), 0.0), dphi(phi.size(), 0.0);
  const double inv2a = 1.0 / (2.0 * geom.a);
  double tmp[3];
  for (int s = 0; s < ns; ++s) {
    const std::size_t sz = static_cast<std::size_t>(s);
    for (int i = 0; i < 3; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      const std::size_t ip = static_cast<std::size_t>(geom.neighbor(s, i, +1));
      const std::size_t im = static_cast<std::size_t>(geom.neighbor(s, i, -1));
      detail::bracket_raw(group, &xi_field[sz * dg], &A[(sz * 3 + ii) * dg], tmp);
      for (std::size_t c = 0; c < dg; ++c)
        dA[(sz * 3 + ii) * dg + c] =
            tmp[c] - (xi_field[ip * dg + c] - xi_field[im * dg + c]) * inv2a;
    }
    detail::rep_act(group, &xi_field[sz * dg], &phi[sz * df], tmp);
    for (std::size_t c = 0; c < df; ++c) dphi[sz * df + c] = tmp[c];
  }
  return {dA, dphi};
}

// Residuals of the magnetic evolution identity (Faraday) and the closure
// identity (Bianchi) from three consecutive samples spaced dt apart, using
// the middle sample for spatial data. Returns a^3-weighted L2 norms. The
// abelian static case vanishes to round-off; non-abelian residuals carry
// O(a^2) difference defects plus O(dt^2) from the time stencil.
inline std::pair<double, double> faraday_bianchi_residual(
    const std::array<LatticeState, 3>& s, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("faraday_bianchi_residual: dt must be positive");
  for (const auto& st : s) detail::check_lattice_shapes(st, "faraday_bianchi_residual");
  const LatticeState& m = s[1];
  const int ns = m.geom.sites();
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(m.group));
  const double inv2a = 1.0 / (2.0 * m.geom.a);
  const double inv2dt = 1.0 / (2.0 * dt);

  const Vec Bm = curvature_b(m.geom, m.group, s[0].A);
  const Vec B = curvature_b(m.geom, m.group, m.A);
  const Vec Bp = curvature_b(m.geom, m.group, s[2].A);

  // E_i = (d_A A0)_i - Adot_i with the central time difference.
  Vec E(m.A.size());
  double tmp[3];
  for (int st = 0; st < ns; ++st) {
    const std::size_t sz = static_cast<std::size_t>(st);
    for (int i = 0; i < 3; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      const std::size_t ip = static_cast<std::size_t>(m.geom.neighbor(st, i, +1));
      const std::size_t im = static_cast<std::size_t>(m.geom.neighbor(st, i, -1));
      detail::bracket_raw(m.group, &m.A[(sz * 3 + ii) * dg], &m.A0[sz * dg], tmp);
      for (std::size_t c = 0; c < dg; ++c)
        E[(sz * 3 + ii) * dg + c] = (m.A0[ip * dg + c] - m.A0[im * dg + c]) * inv2a + tmp[c] -
                                    (s[2].A[(sz * 3 + ii) * dg + c] -
                                     s[0].A[(sz * 3 + ii) * dg + c]) * inv2dt;
    }
  }

  double far2 = 0, bia2 = 0;
  double tmp2[3];
  for (int st = 0; st < ns; ++st) {
    const std::size_t sz = static_cast<std::size_t>(st);
    double bia[3] = {0, 0, 0};
    for (int k = 0; k < 3; ++k) {
      const std::size_t kk = static_cast<std::size_t>(k);
      double far[3] = {0, 0, 0};
      for (int sgn = 0; sgn < 2; ++sgn) {
        const int i = sgn == 0 ? (k + 1) % 3 : (k + 2) % 3;
        const int j = sgn == 0 ? (k + 2) % 3 : (k + 1) % 3;
        const double sign = sgn == 0 ? 1.0 : -1.0;
        const std::size_t ip = static_cast<std::size_t>(m.geom.neighbor(st, i, +1));
        const std::size_t im = static_cast<std::size_t>(m.geom.neighbor(st, i, -1));
        detail::bracket_raw(m.group, &m.A[(sz * 3 + static_cast<std::size_t>(i)) * dg],
                            &E[(sz * 3 + static_cast<std::size_t>(j)) * dg], tmp);
        for (std::size_t c = 0; c < dg; ++c)
          far[c] += sign * ((E[(ip * 3 + static_cast<std::size_t>(j)) * dg + c] -
                             E[(im * 3 + static_cast<std::size_t>(j)) * dg + c]) * inv2a + tmp[c]);
      }
      detail::bracket_raw(m.group, &m.A0[sz * dg], &B[(sz * 3 + kk) * dg], tmp);
      for (std::size_t c = 0; c < dg; ++c) {
        const double bdot = (Bp[(sz * 3 + kk) * dg + c] - Bm[(sz * 3 + kk) * dg + c]) * inv2dt;
        const double r = far[c] + bdot + tmp[c];
        far2 += r * r;
      }
      const std::size_t kp = static_cast<std::size_t>(m.geom.neighbor(st, k, +1));
      const std::size_t km = static_cast<std::size_t>(m.geom.neighbor(st, k, -1));
      detail::bracket_raw(m.group, &m.A[(sz * 3 + kk) * dg], &B[(sz * 3 + kk) * dg], tmp2);
      for (std::size_t c = 0; c < dg; ++c)
        bia[c] += (B[(kp * 3 + kk) * dg + c] - B[(km * 3 + kk) * dg + c]) * inv2a + tmp2[c];
    }
    for (std::size_t c = 0; c < dg; ++c) bia2 += bia[c] * bia[c];
  }
  const double vol = m.geom.a * m.geom.a * m.geom.a;
  return {std::sqrt(far2 * vol), std::sqrt(bia2 * vol)};
}

namespace detail {

// Covariant divergence acting on a per-direction dual field:
// (L w)(x) = sum_i [Delta_i w_i - ad*_{A_i} w_i].
inline void gauss_linear_apply(const LatticeGeometry& geom, Group group, const Vec& A,
                               const Vec& W, Vec& out) {
  const int ns = geom.sites();
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(group));
  const double inv2a = 1.0 / (2.0 * geom.a);
  double tmp[3];
  std::fill(out.begin(), out.end(), 0.0);
  for (int s = 0; s < ns; ++s) {
    const std::size_t sz = static_cast<std::size_t>(s);
    for (int i = 0; i < 3; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      const std::size_t ip = static_cast<std::size_t>(geom.neighbor(s, i, +1));
      const std::size_t im = static_cast<std::size_t>(geom.neighbor(s, i, -1));
      coad_star_raw(group, &A[(sz * 3 + ii) * dg], &W[(sz * 3 + ii) * dg], tmp);
      for (std::size_t c = 0; c < dg; ++c)
        out[sz * dg + c] += (W[(ip * 3 + ii) * dg + c] - W[(im * 3 + ii) * dg + c]) * inv2a -
                            tmp[c];
    }
  }
}

// Adjoint of gauss_linear_apply: (L^T w)_i(x) = -Delta_i w(x) - [A_i(x), w(x)].
inline void gauss_linear_adjoint(const LatticeGeometry& geom, Group group, const Vec& A,
                                 const Vec& w, Vec& out) {
  const int ns = geom.sites();
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(group));
  const double inv2a = 1.0 / (2.0 * geom.a);
  double tmp[3];
  for (int s = 0; s < ns; ++s) {
    const std::size_t sz = static_cast<std::size_t>(s);
    for (int i = 0; i < 3; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      const std::size_t ip = static_cast<std::size_t>(geom.neighbor(s, i, +1));
      const std::size_t im = static_cast<std::size_t>(geom.neighbor(s, i, -1));
      bracket_raw(group, &A[(sz * 3 + ii) * dg], &w[sz * dg], tmp);
      for (std::size_t c = 0; c < dg; ++c)
        out[(sz * 3 + ii) * dg + c] =
            -(w[ip * dg + c] - w[im * dg + c]) * inv2a - tmp[c];
    }
  }
}

// Removes the components along the checkerboard null patterns of the
// central-difference Laplacian (all eight sign patterns for even n, the
// constant for odd n).
inline void remove_null_patterns(const LatticeGeometry& geom, Vec& f) {
  const int ns = geom.sites();
  const bool even = geom.n % 2 == 0;
  for (int m = 0; m < 8; ++m) {
    if (m != 0 && !even) continue;
    double coef = 0;
    for (int s = 0; s < ns; ++s) {
      const std::array<int, 3> c = geom.coords(s);
      const int par = ((m & 1) ? c[0] : 0) + ((m & 2) ? c[1] : 0) + ((m & 4) ? c[2] : 0);
      coef += (par % 2 == 0 ? 1.0 : -1.0) * f[static_cast<std::size_t>(s)];
    }
    coef /= ns;
    for (int s = 0; s < ns; ++s) {
      const std::array<int, 3> c = geom.coords(s);
      const int par = ((m & 1) ? c[0] : 0) + ((m & 2) ? c[1] : 0) + ((m & 4) ? c[2] : 0);
      f[static_cast<std::size_t>(s)] -= (par % 2 == 0 ? 1.0 : -1.0) * coef;
    }
  }
}

inline Vec conjugate_gradient(const std::function<void(const Vec&, Vec&)>& apply, const Vec& b,
                              double tol, int max_iter, const char* who) {
  Vec x(b.size(), 0.0), r = b, p = b, Ap(b.size());
  double rr = dot(r, r);
  const double target = std::max(tol * tol * rr, 1e-120);
  for (int it = 0; it < max_iter; ++it) {
    if (rr <= target) return x;
    apply(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(std::abs(pAp) > 0))
      throw NonConvergence(std::string(who) + ": conjugate gradient broke down");
    const double alpha = rr / pAp;
    axpy(alpha, p, x);
    axpy(-alpha, Ap, r);
    const double rr_new = dot(r, r);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + (rr_new / rr) * p[i];
    rr = rr_new;
  }
  if (rr <= target) return x;
  throw NonConvergence(std::string(who) + ": conjugate gradient did not converge");
}

}  // namespace detail

// Adjusts D by a least-norm correction so the Gauss residual vanishes:
// a direct Poisson solve for u1 (the charge part must already be orthogonal
// to the checkerboard null patterns), a normal-equations solve through the
// covariant divergence for su2. Throws NonConvergence when the residual
// cannot be brought below the tolerance.
inline LatticeState project_to_gauss(const LatticeState& st, double tol = 1e-12,
                                     int max_iter = 20000) {
  detail::check_lattice_shapes(st, "project_to_gauss");
  const int ns = st.geom.sites();
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(st.group));
  LatticeState out = st;
  Vec J0 = gauss_residual(st);
  const double scale = 1.0 + norm_inf(st.D) + norm_inf(J0);

  if (st.group == Group::u1) {
    // J(D + grad w) = J(D) + Laplacian_c w with the doubled-step stencil.
    Vec rhs = scaled(J0, -1.0);
    detail::remove_null_patterns(st.geom, rhs);
    const double inv4a2 = 1.0 / (4.0 * st.geom.a * st.geom.a);
    auto apply = [&](const Vec& wv, Vec& Aw) {
      for (int s = 0; s < ns; ++s) {
        double acc = 0;
        for (int i = 0; i < 3; ++i)
          acc += wv[static_cast<std::size_t>(st.geom.neighbor(s, i, +2))] - 2.0 * wv[static_cast<std::size_t>(s)] +
                 wv[static_cast<std::size_t>(st.geom.neighbor(s, i, -2))];
        Aw[static_cast<std::size_t>(s)] = acc * inv4a2;
      }
    };
    const Vec w = detail::conjugate_gradient(apply, rhs, 1e-14, max_iter, "project_to_gauss");
    const double inv2a = 1.0 / (2.0 * st.geom.a);
    for (int s = 0; s < ns; ++s)
      for (int i = 0; i < 3; ++i)
        out.D[(static_cast<std::size_t>(s) * 3 + static_cast<std::size_t>(i)) * dg] +=
            (w[static_cast<std::size_t>(st.geom.neighbor(s, i, +1))] -
             w[static_cast<std::size_t>(st.geom.neighbor(s, i, -1))]) * inv2a;
  } else {
    // Least-norm D-correction: solve (L L^T) w = -J0, set D += L^T w.
    Vec rhs = scaled(J0, -1.0);
    Vec lt(st.D.size());
    auto apply = [&](const Vec& wv, Vec& Aw) {
      detail::gauss_linear_adjoint(st.geom, st.group, st.A, wv, lt);
      detail::gauss_linear_apply(st.geom, st.group, st.A, lt, Aw);
    };
    const Vec w = detail::conjugate_gradient(apply, rhs, 1e-14, max_iter, "project_to_gauss");
    detail::gauss_linear_adjoint(st.geom, st.group, st.A, w, lt);
    axpy(1.0, lt, out.D);
  }

  const GaussNorms gn = gauss_norms(out.geom, out.group, gauss_residual(out));
  if (gn.linf > tol * scale)
    throw NonConvergence("project_to_gauss: residual " + std::to_string(gn.linf) +
                         " above tolerance (obstructed charge or stalled solve)");
  return out;
}

// Flat packing [A | D | phi | pi] for the integrators; A0 is carried by the
// state and is not evolved.
inline Vec state_to_flat(const LatticeState& st) {
  Vec y;
  y.reserve(st.A.size() + st.D.size() + st.phi.size() + st.pi.size());
  y.insert(y.end(), st.A.begin(), st.A.end());
  y.insert(y.end(), st.D.begin(), st.D.end());
  y.insert(y.end(), st.phi.begin(), st.phi.end());
  y.insert(y.end(), st.pi.begin(), st.pi.end());
  return y;
}

inline void flat_to_state(const Vec& y, LatticeState& st) {
  const std::size_t na = st.A.size(), nd = st.D.size(), nf = st.phi.size(), np = st.pi.size();
  if (y.size() != na + nd + nf + np)
    throw std::invalid_argument("flat_to_state: flat vector size mismatch");
  std::copy(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(na), st.A.begin());
  std::copy(y.begin() + static_cast<std::ptrdiff_t>(na),
            y.begin() + static_cast<std::ptrdiff_t>(na + nd), st.D.begin());
  std::copy(y.begin() + static_cast<std::ptrdiff_t>(na + nd),
            y.begin() + static_cast<std::ptrdiff_t>(na + nd + nf), st.phi.begin());
  std::copy(y.begin() + static_cast<std::ptrdiff_t>(na + nd + nf), y.end(), st.pi.begin());
}

// Rhs closure over the flat packing; the snapshot state supplies geometry,
// group, and the prescribed A0.
inline Rhs make_ymh_rhs(LatticeState snapshot, HiggsPotential pot) {
  detail::check_lattice_shapes(snapshot, "make_ymh_rhs");
  auto work = std::make_shared<LatticeState>(std::move(snapshot));
  return [work, pot](double t, const Vec& y, Vec& dydt) {
    flat_to_state(y, *work);
    work->t = t;
    const LatticeDerivative d = ymh_rhs(*work, pot);
    std::size_t o = 0;
    std::copy(d.Adot.begin(), d.Adot.end(), dydt.begin() + static_cast<std::ptrdiff_t>(o));
    o += d.Adot.size();
    std::copy(d.Ddot.begin(), d.Ddot.end(), dydt.begin() + static_cast<std::ptrdiff_t>(o));
    o += d.Ddot.size();
    std::copy(d.phidot.begin(), d.phidot.end(), dydt.begin() + static_cast<std::ptrdiff_t>(o));
    o += d.phidot.size();
    std::copy(d.pidot.begin(), d.pidot.end(), dydt.begin() + static_cast<std::ptrdiff_t>(o));
  };
}

// Volume-summed Gauss charge, the momentum-map total paired with constant
// test fields; one component per algebra dimension.
inline DualAlgebraElement total_gauss_charge(const LatticeState& st) {
  const Vec J = gauss_residual(st);
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(st.group));
  DualAlgebraElement out = dual_zero(st.group);
  for (std::size_t s = 0; s * dg < J.size(); ++s)
    for (std::size_t c = 0; c < dg; ++c) out.c[c] += J[s * dg + c];
  const double vol = st.geom.a * st.geom.a * st.geom.a;
  for (std::size_t c = 0; c < dg; ++c) out.c[c] *= vol;
  return out;
}

}  // namespace clebsch
