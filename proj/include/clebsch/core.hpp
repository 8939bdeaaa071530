#pragma once

// Clebsch-Hamilton mechanics on a configuration space with group action:
// evolution of (q, p) driven by a Hamiltonian H(q, p, xi) with the algebra
// parameter xi(t) prescribed, the momentum-map constraint J(q,p) = dH/dxi,
// and the Lagrangian-side counterparts related by the fiber Legendre
// transform at shifted velocity v = qdot + xi . q.

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "clebsch/errors.hpp"
#include "clebsch/lie.hpp"
#include "clebsch/linalg.hpp"
#include "clebsch/spaces.hpp"

namespace clebsch {

struct ClebschState {
  Vec q, p;
  AlgebraElement xi;
  double t = 0;
};

using XiFn = std::function<AlgebraElement(double t)>;

struct ClebschHamiltonian {
  std::function<double(const Vec& q, const Vec& p, const AlgebraElement& xi)> value;
  std::function<Vec(const Vec&, const Vec&, const AlgebraElement&)> dq;
  std::function<Vec(const Vec&, const Vec&, const AlgebraElement&)> dp;
  std::function<DualAlgebraElement(const Vec&, const Vec&, const AlgebraElement&)> dxi;
  bool is_G_invariant = false;    // H(g.q, g.p, Ad_g xi) = H (and H(g.q, g.p, xi) = H
                                  // whenever xi enters only through invariants)
  bool is_xi_independent = false;
};

struct ClebschLagrangian {
  // Arguments are (q, v, xi) with v the effective velocity qdot + xi . q.
  std::function<double(const Vec& q, const Vec& v, const AlgebraElement& xi)> value;
  std::function<Vec(const Vec&, const Vec&, const AlgebraElement&)> dv;
  std::function<Vec(const Vec&, const Vec&, const AlgebraElement&)> dq;
  std::function<DualAlgebraElement(const Vec&, const Vec&, const AlgebraElement&)> dxi;
};

// J(q, p) defined by kappa(J, xi) = <p, xi . q>.
inline DualAlgebraElement momentum_map(const ConfigurationSpace& space, const Vec& q,
                                       const Vec& p) {
  DualAlgebraElement J{space.group, {}};
  const int d = algebra_dim(space.group);
  for (int a = 0; a < d; ++a)
    J.c[static_cast<std::size_t>(a)] = dot(p, space.act_alg(basis_element(space.group, a), q));
  return J;
}

// Fiber Legendre transform at shifted velocity: p = dL/dv(q, qdot + xi.q, xi).
inline ClebschState clebsch_legendre(const ConfigurationSpace& space, const ClebschLagrangian& L,
                                     const Vec& q, const Vec& qdot, const AlgebraElement& xi,
                                     double t = 0) {
  const Vec v = added(qdot, space.act_alg(xi, q));
  return {q, L.dv(q, v, xi), xi, t};
}

struct InverseLegendreResult {
  Vec q, qdot;
  AlgebraElement xi;
  int newton_iterations = 0;
};

// Solve p = dL/dv(q, v, xi) for v by damped Newton with a finite-difference
// Jacobian, then report qdot = v - xi . q.
inline InverseLegendreResult inverse_clebsch_legendre(const ConfigurationSpace& space,
                                                      const ClebschLagrangian& L,
                                                      const ClebschState& s, double tol = 1e-12,
                                                      int max_iter = 50) {
  const std::size_t n = s.q.size();
  Vec v(n, 0.0);
  auto residual = [&](const Vec& vv) { return subtracted(L.dv(s.q, vv, s.xi), s.p); };
  Vec F = residual(v);
  double fn = norm2(F);
  const double target = tol * (1.0 + norm_inf(s.p));
  int it = 0;
  while (fn > target) {
    if (it >= max_iter)
      throw NonConvergence("inverse_clebsch_legendre: Newton did not converge in " +
                           std::to_string(max_iter) + " iterations");
    // Finite-difference Jacobian of the residual in v.
    std::vector<double> Jm(n * n);
    for (std::size_t j = 0; j < n; ++j) {
      const double h = 1e-7 * (1.0 + std::abs(v[j]));
      Vec vp = v, vm = v;
      vp[j] += h;
      vm[j] -= h;
      const Vec Fp = residual(vp), Fm = residual(vm);
      for (std::size_t i = 0; i < n; ++i) Jm[i * n + j] = (Fp[i] - Fm[i]) / (2.0 * h);
    }
    Vec dv;
    try {
      dv = solve_dense(std::move(Jm), scaled(F, -1.0));
    } catch (const NonConvergence&) {
      throw NonConvergence("inverse_clebsch_legendre: singular fiber derivative");
    }
    double lambda = 1.0;
    bool improved = false;
    for (int back = 0; back < 30; ++back) {
      Vec vt = v;
      axpy(lambda, dv, vt);
      const Vec Ft = residual(vt);
      const double ft = norm2(Ft);
      if (ft < fn) {
        v = vt;
        F = Ft;
        fn = ft;
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    ++it;
    if (!improved)
      throw NonConvergence("inverse_clebsch_legendre: line search stalled at iteration " +
                           std::to_string(it));
  }
  return {s.q, subtracted(v, space.act_alg(s.xi, s.q)), s.xi, it};
}

// H(q,p,xi) = <p, v> - L(q, v, xi) with v defined by p = dL/dv. The partials
// are the envelope relations dH/dq = -dL/dq, dH/dp = v, dH/dxi = -dL/dxi,
// all evaluated at the solved velocity.
inline ClebschHamiltonian hamiltonian_from_lagrangian(const ConfigurationSpace& space,
                                                      const ClebschLagrangian& L,
                                                      bool is_G_invariant = false,
                                                      bool is_xi_independent = false,
                                                      double tol = 1e-12, int max_iter = 50) {
  auto solve_v = [space, L, tol, max_iter](const Vec& q, const Vec& p,
                                           const AlgebraElement& xi) -> Vec {
    ClebschState s{q, p, xi, 0};
    const InverseLegendreResult r = inverse_clebsch_legendre(space, L, s, tol, max_iter);
    return added(r.qdot, space.act_alg(xi, q));
  };
  ClebschHamiltonian H;
  H.value = [L, solve_v](const Vec& q, const Vec& p, const AlgebraElement& xi) {
    const Vec v = solve_v(q, p, xi);
    return dot(p, v) - L.value(q, v, xi);
  };
  H.dq = [L, solve_v](const Vec& q, const Vec& p, const AlgebraElement& xi) {
    return scaled(L.dq(q, solve_v(q, p, xi), xi), -1.0);
  };
  H.dp = solve_v;
  H.dxi = [L, solve_v](const Vec& q, const Vec& p, const AlgebraElement& xi) {
    return -1.0 * L.dxi(q, solve_v(q, p, xi), xi);
  };
  H.is_G_invariant = is_G_invariant;
  H.is_xi_independent = is_xi_independent;
  return H;
}

struct PhaseDerivative {
  Vec qdot, pdot;
};

// qdot = dH/dp - xi . q,  pdot = -dH/dq - K(xi . p).
inline PhaseDerivative clebsch_hamilton_rhs(const ConfigurationSpace& space,
                                            const ClebschHamiltonian& H, const ClebschState& s) {
  PhaseDerivative d;
  d.qdot = subtracted(H.dp(s.q, s.p, s.xi), space.act_alg(s.xi, s.q));
  d.pdot = scaled(H.dq(s.q, s.p, s.xi), -1.0);
  axpy(-1.0, space.act_alg_dual(s.xi, s.p), d.pdot);
  return d;
}

// C(q,p,xi) = J(q,p) - dH/dxi.
inline DualAlgebraElement momentum_constraint_residual(const ConfigurationSpace& space,
                                                       const ClebschHamiltonian& H,
                                                       const ClebschState& s) {
  return momentum_map(space, s.q, s.p) - H.dxi(s.q, s.p, s.xi);
}

struct CelSample {
  Vec q, qdot;
  AlgebraElement xi;
};

struct CelResidual {
  Vec evolution;                    // D/dt dL/dqdot - <dL/dqdot, grad xi_*> - dL/dq
  DualAlgebraElement constraint;    // <dL/dqdot, zeta.q> + kappa(dL/dxi, zeta) per basis zeta
};

// Residuals of the variational equations on three consecutive samples spaced
// dt apart, evaluated at the middle sample. The time derivative is a central
// difference, so exact solutions leave O(dt^2).
inline CelResidual cel_residual(const ConfigurationSpace& space, const ClebschLagrangian& L,
                                const std::array<CelSample, 3>& s, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("cel_residual: dt must be positive");
  auto fiber_momentum = [&](const CelSample& a) {
    return L.dv(a.q, added(a.qdot, space.act_alg(a.xi, a.q)), a.xi);
  };
  const Vec Pm = fiber_momentum(s[0]);
  const Vec P = fiber_momentum(s[1]);
  const Vec Pp = fiber_momentum(s[2]);
  const Vec v = added(s[1].qdot, space.act_alg(s[1].xi, s[1].q));

  CelResidual r;
  r.evolution = scaled(subtracted(Pp, Pm), 1.0 / (2.0 * dt));
  // <P, grad xi_*> applied to a vector equals -K(xi . P) for linear actions.
  axpy(1.0, space.act_alg_dual(s[1].xi, P), r.evolution);
  axpy(-1.0, L.dq(s[1].q, v, s[1].xi), r.evolution);

  r.constraint = momentum_map(space, s[1].q, P) + L.dxi(s[1].q, v, s[1].xi);
  return r;
}

struct PathSample {
  Vec q;
  AlgebraElement xi;
};

// Trapezoid discretization of S = int L(q, qdot + xi.q, xi) dt on a uniformly
// sampled path; qdot uses central differences inside and one-sided
// second-order differences at the ends.
inline double action_functional(const ConfigurationSpace& space, const ClebschLagrangian& L,
                                const std::vector<PathSample>& path, double dt) {
  if (path.size() < 3) throw std::invalid_argument("action_functional: need at least 3 samples");
  if (!(dt > 0)) throw std::invalid_argument("action_functional: dt must be positive");
  const std::size_t m = path.size();
  auto qdot_at = [&](std::size_t k) -> Vec {
    if (k == 0) {
      Vec d = scaled(path[0].q, -3.0);
      axpy(4.0, path[1].q, d);
      axpy(-1.0, path[2].q, d);
      return scaled(d, 1.0 / (2.0 * dt));
    }
    if (k == m - 1) {
      Vec d = scaled(path[m - 1].q, 3.0);
      axpy(-4.0, path[m - 2].q, d);
      axpy(1.0, path[m - 3].q, d);
      return scaled(d, 1.0 / (2.0 * dt));
    }
    return scaled(subtracted(path[k + 1].q, path[k - 1].q), 1.0 / (2.0 * dt));
  };
  double S = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const Vec v = added(qdot_at(k), space.act_alg(path[k].xi, path[k].q));
    const double lk = L.value(path[k].q, v, path[k].xi);
    S += (k == 0 || k == m - 1) ? 0.5 * lk : lk;
  }
  return S * dt;
}

// Max over interior samples of || (J_{k+1} - J_{k-1}) / 2dt - ad*_xi J_k ||.
// For G-invariant H the flow satisfies dJ/dt = ad*_xi J, so exact solutions
// leave O(dt^2) truncation.
inline double euler_poincare_residual(const ConfigurationSpace& space,
                                      const ClebschHamiltonian& H,
                                      const std::vector<ClebschState>& traj, double dt) {
  if (!H.is_G_invariant)
    throw std::invalid_argument("euler_poincare_residual: H is not flagged G-invariant");
  if (traj.size() < 3)
    throw std::invalid_argument("euler_poincare_residual: need at least 3 samples");
  double worst = 0;
  std::vector<DualAlgebraElement> J;
  J.reserve(traj.size());
  for (const auto& s : traj) J.push_back(momentum_map(space, s.q, s.p));
  for (std::size_t k = 1; k + 1 < traj.size(); ++k) {
    const DualAlgebraElement r =
        (1.0 / (2.0 * dt)) * (J[k + 1] - J[k - 1]) - coadjoint_star(traj[k].xi, J[k]);
    worst = std::max(worst, dual_norm(r));
  }
  return worst;
}

// Max over interior samples of the drift identity residual for
// C = J - dH/dxi:  dC/dt = ad*_xi C - d/dt dH/dxi  along solutions.
inline double constraint_drift_residual(const ConfigurationSpace& space,
                                        const ClebschHamiltonian& H,
                                        const std::vector<ClebschState>& traj, double dt) {
  if (!H.is_G_invariant)
    throw std::invalid_argument("constraint_drift_residual: H is not flagged G-invariant");
  if (traj.size() < 3)
    throw std::invalid_argument("constraint_drift_residual: need at least 3 samples");
  std::vector<DualAlgebraElement> C, W;
  C.reserve(traj.size());
  W.reserve(traj.size());
  for (const auto& s : traj) {
    const DualAlgebraElement w = H.dxi(s.q, s.p, s.xi);
    W.push_back(w);
    C.push_back(momentum_map(space, s.q, s.p) - w);
  }
  double worst = 0;
  for (std::size_t k = 1; k + 1 < traj.size(); ++k) {
    const DualAlgebraElement r = (1.0 / (2.0 * dt)) * (C[k + 1] - C[k - 1]) -
                                 coadjoint_star(traj[k].xi, C[k]) +
                                 (1.0 / (2.0 * dt)) * (W[k + 1] - W[k - 1]);
    worst = std::max(worst, dual_norm(r));
  }
  return worst;
}

// Spot check of the G-invariance property by sampling group-translated
// arguments; used by tests to validate the is_G_invariant flag.
inline double g_invariance_defect(const ConfigurationSpace& space, const ClebschHamiltonian& H,
                                  const Vec& q, const Vec& p, const AlgebraElement& xi,
                                  const std::vector<GroupElement>& samples,
                                  bool rotate_xi = true) {
  const double h0 = H.value(q, p, xi);
  double worst = 0;
  for (const auto& g : samples) {
    const AlgebraElement xg = rotate_xi ? adjoint(g, xi) : xi;
    const double hg = H.value(space.act(g, q), space.act_cot(g, p), xg);
    worst = std::max(worst, std::abs(hg - h0) / std::max(1.0, std::abs(h0)));
  }
  return worst;
}

}  // namespace clebsch
