#pragma once

// Extended phase space T*Q x (g x g*): points (q, p, xi, nu), the lifted
// tangent-group action, its momentum map, the extended Hamiltonian
// H_ext = H - kappa(J, xi), and the two-stage constraint specialization
// (primary nu = 0, secondary dH/dxi = J). On the constraint surface the
// canonical flow of H_ext reproduces the Clebsch-Hamilton flow.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "clebsch/core.hpp"
#include "clebsch/errors.hpp"
#include "clebsch/integrate.hpp"
#include "clebsch/lie.hpp"
#include "clebsch/linalg.hpp"
#include "clebsch/spaces.hpp"

namespace clebsch {

struct ExtendedState {
  Vec q, p;
  AlgebraElement xi;
  DualAlgebraElement nu;
  double t = 0;
};

// (zeta, g) . (q, p, xi, nu) = (g.q, g.p, Ad_g xi + zeta, CoAd_g nu).
inline ExtendedState tangent_group_act(const ConfigurationSpace& space,
                                       const TangentGroupElement& elem, const ExtendedState& s) {
  detail::require_same(elem.g.group, s.xi.group, "tangent_group_act");
  ExtendedState out;
  out.q = space.act(elem.g, s.q);
  out.p = space.act_cot(elem.g, s.p);
  out.xi = adjoint(elem.g, s.xi) + elem.xi;
  out.nu = coad(elem.g, s.nu);
  out.t = s.t;
  return out;
}

// J_ext(q, p, xi, nu) = (nu, J(q, p) - ad*_xi nu); equivariant for the
// lifted action with the tangent-group coadjoint representation.
inline std::pair<DualAlgebraElement, DualAlgebraElement> extended_momentum_map(
    const ConfigurationSpace& space, const ExtendedState& s) {
  return {s.nu, momentum_map(space, s.q, s.p) - coadjoint_star(s.xi, s.nu)};
}

// H_ext(q, p, xi) = H(q, p, xi) - kappa(J(q, p), xi), with partials given by
// the reductions dHext/dq = dH/dq + K(xi.p), dHext/dp = dH/dp - xi.q,
// dHext/dxi = dH/dxi - J.
inline ClebschHamiltonian extended_hamiltonian(const ConfigurationSpace& space,
                                               const ClebschHamiltonian& H) {
  ClebschHamiltonian E;
  E.value = [space, value = H.value](const Vec& q, const Vec& p, const AlgebraElement& xi) {
    return value(q, p, xi) - kappa(momentum_map(space, q, p), xi);
  };
  E.dq = [space, dq = H.dq](const Vec& q, const Vec& p, const AlgebraElement& xi) {
    Vec out = dq(q, p, xi);
    axpy(1.0, space.act_alg_dual(xi, p), out);
    return out;
  };
  E.dp = [space, dp = H.dp](const Vec& q, const Vec& p, const AlgebraElement& xi) {
    Vec out = dp(q, p, xi);
    axpy(-1.0, space.act_alg(xi, q), out);
    return out;
  };
  E.dxi = [space, dxi = H.dxi](const Vec& q, const Vec& p, const AlgebraElement& xi) {
    return dxi(q, p, xi) - momentum_map(space, q, p);
  };
  E.is_G_invariant = H.is_G_invariant;
  E.is_xi_independent = false;
  return E;
}

// Canonical equations of H_ext: qdot = dHext/dp, pdot = -dHext/dq. The
// transport terms of the Clebsch form are absorbed into H_ext, and nu is
// carried unchanged.
inline PhaseDerivative extended_hamilton_rhs(const ConfigurationSpace& space,
                                             const ClebschHamiltonian& H,
                                             const ExtendedState& s) {
  PhaseDerivative d;
  d.qdot = H.dp(s.q, s.p, s.xi);
  axpy(-1.0, space.act_alg(s.xi, s.q), d.qdot);
  d.pdot = scaled(H.dq(s.q, s.p, s.xi), -1.0);
  axpy(-1.0, space.act_alg_dual(s.xi, s.p), d.pdot);
  return d;
}

// Primary constraint nu = 0 and secondary constraint dH/dxi - J = 0; both
// vanish exactly when J_ext = (0, dH/dxi).
inline std::pair<DualAlgebraElement, DualAlgebraElement> dirac_constraints(
    const ConfigurationSpace& space, const ClebschHamiltonian& H, const ExtendedState& s) {
  return {s.nu, H.dxi(s.q, s.p, s.xi) - momentum_map(space, s.q, s.p)};
}

using Observable = std::function<double(const Vec& q, const Vec& p)>;

struct EquivalenceReport {
  double max_state_diff = 0;             // (q,p) gap between the two formulations
  double max_invariant_diff_gauge = 0;   // invariant gap across gauge-shifted data
  double max_invariant_diff_xi = 0;      // invariant gap across a different xi(t)
  bool xi_comparison_done = false;
};

namespace detail {

inline Rhs clebsch_flat_rhs(const ConfigurationSpace& space, const ClebschHamiltonian& H,
                            const XiFn& xi, std::size_t n) {
  return [&space, &H, xi, n](double t, const Vec& y, Vec& dydt) {
    ClebschState s;
    s.q.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    s.p.assign(y.begin() + static_cast<std::ptrdiff_t>(n), y.begin() + 2 * static_cast<std::ptrdiff_t>(n));
    s.xi = xi(t);
    s.t = t;
    const PhaseDerivative d = clebsch_hamilton_rhs(space, H, s);
    for (std::size_t i = 0; i < n; ++i) {
      dydt[i] = d.qdot[i];
      dydt[n + i] = d.pdot[i];
    }
  };
}

}  // namespace detail

// Integrates the Clebsch-Hamilton system and the extended system from the
// same data and compares them pointwise; then re-runs the Clebsch system from
// gauge-shifted data (and optionally with a different xi prescription) and
// compares G-invariant observables. Requires a xi-independent G-invariant H
// and initial data on the constraint surface.
inline EquivalenceReport equivalence_check(const ConfigurationSpace& space,
                                           const ClebschHamiltonian& H,
                                           const ClebschState& initial, const XiFn& xi,
                                           double horizon, const StepperSpec& spec,
                                           std::vector<Observable> invariants,
                                           const std::vector<TangentGroupElement>& gauge_shifts,
                                           const XiFn* alternate_xi = nullptr) {
  if (!H.is_G_invariant || !H.is_xi_independent)
    throw std::invalid_argument(
        "equivalence_check: H must be flagged G-invariant and xi-independent");
  const DualAlgebraElement C0 =
      momentum_constraint_residual(space, H, {initial.q, initial.p, xi(initial.t), initial.t});
  if (dual_norm(C0) > 1e-10)
    throw std::invalid_argument("equivalence_check: initial data violates the momentum "
                                "constraint, |C| = " +
                                std::to_string(dual_norm(C0)));
  if (invariants.empty()) {
    invariants = {[](const Vec& q, const Vec&) { return dot(q, q); },
                  [](const Vec&, const Vec& p) { return dot(p, p); },
                  [](const Vec& q, const Vec& p) { return dot(q, p); }};
  }

  const std::size_t n = initial.q.size();
  const int d = algebra_dim(space.group);
  Vec y0(2 * n);
  std::copy(initial.q.begin(), initial.q.end(), y0.begin());
  std::copy(initial.p.begin(), initial.p.end(), y0.begin() + static_cast<std::ptrdiff_t>(n));

  IntegrationOptions opts;
  opts.store = IntegrationOptions::StorePolicy::all;
  const TrajectoryRecord runA =
      integrate(detail::clebsch_flat_rhs(space, H, xi, n), y0, initial.t, horizon, spec, nullptr,
                opts);

  // Extended run: state [q | p | nu] under the canonical H_ext equations.
  Vec y0e(2 * n + static_cast<std::size_t>(d), 0.0);
  std::copy(y0.begin(), y0.end(), y0e.begin());
  auto ext_rhs = [&space, &H, &xi, n, d](double t, const Vec& y, Vec& dydt) {
    ExtendedState s;
    s.q.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    s.p.assign(y.begin() + static_cast<std::ptrdiff_t>(n), y.begin() + 2 * static_cast<std::ptrdiff_t>(n));
    s.xi = xi(t);
    s.nu = dual_zero(s.xi.group);
    for (int a = 0; a < d; ++a) s.nu.c[static_cast<std::size_t>(a)] = y[2 * n + static_cast<std::size_t>(a)];
    s.t = t;
    const PhaseDerivative dv = extended_hamilton_rhs(space, H, s);
    for (std::size_t i = 0; i < n; ++i) {
      dydt[i] = dv.qdot[i];
      dydt[n + i] = dv.pdot[i];
    }
    for (int a = 0; a < d; ++a) dydt[2 * n + static_cast<std::size_t>(a)] = 0.0;
  };
  const TrajectoryRecord runB = integrate(ext_rhs, y0e, initial.t, horizon, spec, nullptr, opts);

  EquivalenceReport rep;
  for (std::size_t k = 0; k < runA.states.size(); ++k)
    for (std::size_t i = 0; i < 2 * n; ++i)
      rep.max_state_diff = std::max(rep.max_state_diff,
                                    std::abs(runA.states[k][i] - runB.states[k][i]));

  auto invariant_gap = [&](const TrajectoryRecord& other) {
    double worst = 0;
    for (std::size_t k = 0; k < runA.states.size(); ++k) {
      const Vec qa(runA.states[k].begin(), runA.states[k].begin() + static_cast<std::ptrdiff_t>(n));
      const Vec pa(runA.states[k].begin() + static_cast<std::ptrdiff_t>(n), runA.states[k].begin() + 2 * static_cast<std::ptrdiff_t>(n));
      const Vec qb(other.states[k].begin(), other.states[k].begin() + static_cast<std::ptrdiff_t>(n));
      const Vec pb(other.states[k].begin() + static_cast<std::ptrdiff_t>(n), other.states[k].begin() + 2 * static_cast<std::ptrdiff_t>(n));
      for (const auto& f : invariants)
        worst = std::max(worst, std::abs(f(qa, pa) - f(qb, pb)));
    }
    return worst;
  };

  for (const auto& elem : gauge_shifts) {
    ExtendedState e0{initial.q, initial.p, xi(initial.t), dual_zero(space.group), initial.t};
    const ExtendedState shifted = tangent_group_act(space, elem, e0);
    Vec ys(2 * n);
    std::copy(shifted.q.begin(), shifted.q.end(), ys.begin());
    std::copy(shifted.p.begin(), shifted.p.end(), ys.begin() + static_cast<std::ptrdiff_t>(n));
    XiFn xi_shift = [xi, elem](double t) { return adjoint(elem.g, xi(t)) + elem.xi; };
    const TrajectoryRecord runG = integrate(detail::clebsch_flat_rhs(space, H, xi_shift, n), ys,
                                            initial.t, horizon, spec, nullptr, opts);
    rep.max_invariant_diff_gauge = std::max(rep.max_invariant_diff_gauge, invariant_gap(runG));
  }

  if (alternate_xi) {
    const TrajectoryRecord runX = integrate(detail::clebsch_flat_rhs(space, H, *alternate_xi, n),
                                            y0, initial.t, horizon, spec, nullptr, opts);
    rep.max_invariant_diff_xi = invariant_gap(runX);
    rep.xi_comparison_done = true;
  }
  return rep;
}

}  // namespace clebsch
