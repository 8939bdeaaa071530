#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "clebsch/diagnostics.hpp"
#include "clebsch/extended.hpp"
#include "clebsch/spaces.hpp"

using namespace clebsch;

namespace {

Vec random_vec(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec v(static_cast<std::size_t>(n));
  for (auto& x : v) x = u(rng);
  return v;
}

AlgebraElement random_algebra(Group g, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  if (g == Group::u1) return make_algebra(g, u(rng));
  return make_algebra(g, u(rng), u(rng), u(rng));
}

DualAlgebraElement random_dual(Group g, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  if (g == Group::u1) return make_dual(g, u(rng));
  return make_dual(g, u(rng), u(rng), u(rng));
}

ExtendedState random_state(const ConfigurationSpace& space, std::mt19937& rng) {
  return {random_vec(space.dim, rng), random_vec(space.dim, rng),
          random_algebra(space.group, rng), random_dual(space.group, rng), 0};
}

ClebschHamiltonian kinetic_spring(double m, double k, bool xi_coupled = false) {
  ClebschHamiltonian H;
  H.value = [m, k, xi_coupled](const Vec& q, const Vec& p, const AlgebraElement& xi) {
    double s = 0.5 * dot(p, p) / m + 0.5 * k * dot(q, q);
    if (xi_coupled) {
      const double xn = algebra_norm(xi);
      s += 0.5 * xn * xn;
    }
    return s;
  };
  H.dq = [k](const Vec& q, const Vec&, const AlgebraElement&) { return scaled(q, k); };
  H.dp = [m](const Vec&, const Vec& p, const AlgebraElement&) { return scaled(p, 1.0 / m); };
  H.dxi = [xi_coupled](const Vec&, const Vec&, const AlgebraElement& xi) {
    if (!xi_coupled) return dual_zero(xi.group);
    return DualAlgebraElement{xi.group, xi.c};
  };
  H.is_G_invariant = true;
  H.is_xi_independent = !xi_coupled;
  return H;
}

}  // namespace

TEST_CASE("lifted action: translations shift xi, group factors move everything") {
  std::mt19937 rng(211);
  const ConfigurationSpace space = so3_vector_space();
  const ExtendedState s = random_state(space, rng);
  const AlgebraElement zeta = random_algebra(Group::so3, rng);

  const ExtendedState ts =
      tangent_group_act(space, {zeta, identity_element(Group::so3)}, s);
  CHECK(norm_inf(subtracted(ts.q, s.q)) < 1e-15);
  CHECK(norm_inf(subtracted(ts.p, s.p)) < 1e-15);
  CHECK(algebra_norm(ts.xi - (s.xi + zeta)) < 1e-15);
  CHECK(dual_norm(ts.nu - s.nu) < 1e-15);

  const GroupElement g = group_exp(random_algebra(Group::so3, rng));
  const ExtendedState gs = tangent_group_act(space, {algebra_zero(Group::so3), g}, s);
  CHECK(norm_inf(subtracted(gs.q, space.act(g, s.q))) < 1e-15);
  CHECK(algebra_norm(gs.xi - adjoint(g, s.xi)) < 1e-15);
  CHECK(dual_norm(gs.nu - coad(g, s.nu)) < 1e-15);
}

TEST_CASE("lifted action composes through tangent group multiplication") {
  std::mt19937 rng(223);
  for (const auto& space : {so3_vector_space(), su2_adjoint_space()}) {
    for (int k = 0; k < 20; ++k) {
      const TangentGroupElement a{random_algebra(space.group, rng),
                                  group_exp(random_algebra(space.group, rng))};
      const TangentGroupElement b{random_algebra(space.group, rng),
                                  group_exp(random_algebra(space.group, rng))};
      const ExtendedState s = random_state(space, rng);
      const ExtendedState one = tangent_group_act(space, tangent_multiply(a, b), s);
      const ExtendedState two = tangent_group_act(space, a, tangent_group_act(space, b, s));
      CHECK(norm_inf(subtracted(one.q, two.q)) < 1e-10);
      CHECK(norm_inf(subtracted(one.p, two.p)) < 1e-10);
      CHECK(algebra_norm(one.xi - two.xi) < 1e-10);
      CHECK(dual_norm(one.nu - two.nu) < 1e-10);
    }
  }
}

TEST_CASE("extended momentum map value and equivariance") {
  std::mt19937 rng(227);
  const ConfigurationSpace space = so3_vector_space();
  const ExtendedState s = random_state(space, rng);
  const auto J = extended_momentum_map(space, s);
  CHECK(dual_norm(J.first - s.nu) < 1e-15);
  const DualAlgebraElement expect =
      momentum_map(space, s.q, s.p) - coadjoint_star(s.xi, s.nu);
  CHECK(dual_norm(J.second - expect) < 1e-15);

  for (const auto& sp : {so3_vector_space(), su2_adjoint_space(), u1_plane_space()}) {
    for (int k = 0; k < 20; ++k) {
      const ExtendedState x = random_state(sp, rng);
      const TangentGroupElement elem{random_algebra(sp.group, rng),
                                     group_exp(random_algebra(sp.group, rng), 1.3)};
      const auto lhs = extended_momentum_map(sp, tangent_group_act(sp, elem, x));
      const auto base = extended_momentum_map(sp, x);
      const auto rhs = tangent_group_coadjoint(elem, base.first, base.second);
      CHECK(dual_norm(lhs.first - rhs.first) < 1e-9);
      CHECK(dual_norm(lhs.second - rhs.second) < 1e-9);
    }
  }
}

TEST_CASE("extended Hamiltonian subtracts the paired momentum") {
  std::mt19937 rng(229);
  const ConfigurationSpace space = so3_vector_space();
  const ClebschHamiltonian H = kinetic_spring(1.0, 0.0);
  const ClebschHamiltonian E = extended_hamiltonian(space, H);
  for (int k = 0; k < 10; ++k) {
    const Vec q = random_vec(3, rng), p = random_vec(3, rng);
    const AlgebraElement xi = random_algebra(Group::so3, rng);
    const Vec3 J = cross({q[0], q[1], q[2]}, {p[0], p[1], p[2]});
    const double expect =
        0.5 * dot(p, p) - (J[0] * xi.c[0] + J[1] * xi.c[1] + J[2] * xi.c[2]);
    CHECK(E.value(q, p, xi) == Catch::Approx(expect).margin(1e-13));
  }
}

TEST_CASE("extended Hamiltonian partials match finite differences") {
  std::mt19937 rng(233);
  for (const auto& space : {so3_vector_space(), u1_plane_space()}) {
    const ClebschHamiltonian H = kinetic_spring(1.4, 0.7, true);
    const ClebschHamiltonian E = extended_hamiltonian(space, H);
    for (int trial = 0; trial < 20; ++trial) {
      const Vec q = random_vec(space.dim, rng), p = random_vec(space.dim, rng);
      const AlgebraElement xi = random_algebra(space.group, rng);
      const Vec eq = E.dq(q, p, xi), ep = E.dp(q, p, xi);
      for (int i = 0; i < space.dim; ++i) {
        Vec dir(static_cast<std::size_t>(space.dim), 0.0);
        dir[static_cast<std::size_t>(i)] = 1.0;
        const double fdq = directional_derivative(
            [&](const Vec& qq) { return E.value(qq, p, xi); }, q, dir);
        const double fdp = directional_derivative(
            [&](const Vec& pp) { return E.value(q, pp, xi); }, p, dir);
        CHECK(rel_err(eq[static_cast<std::size_t>(i)], fdq) < 1e-6);
        CHECK(rel_err(ep[static_cast<std::size_t>(i)], fdp) < 1e-6);
      }
      const DualAlgebraElement exi = E.dxi(q, p, xi);
      const double h = 1e-6;
      for (int a = 0; a < algebra_dim(space.group); ++a) {
        AlgebraElement xp = xi, xm = xi;
        xp.c[static_cast<std::size_t>(a)] += h;
        xm.c[static_cast<std::size_t>(a)] -= h;
        const double fd = (E.value(q, p, xp) - E.value(q, p, xm)) / (2.0 * h);
        CHECK(rel_err(exi.c[static_cast<std::size_t>(a)], fd) < 1e-6);
      }
    }
  }
}

TEST_CASE("extended evolution is canonical and agrees with the reduced equations") {
  std::mt19937 rng(239);
  const ConfigurationSpace space = so3_vector_space();
  const ClebschHamiltonian H = kinetic_spring(1.2, 0.5, true);
  const ClebschHamiltonian E = extended_hamiltonian(space, H);
  for (int k = 0; k < 20; ++k) {
    const ExtendedState s = random_state(space, rng);
    const PhaseDerivative d = extended_hamilton_rhs(space, H, s);
    // canonical equations of the extended Hamiltonian
    const Vec qdot = E.dp(s.q, s.p, s.xi);
    const Vec pdot = scaled(E.dq(s.q, s.p, s.xi), -1.0);
    CHECK(norm_inf(subtracted(d.qdot, qdot)) < 1e-12);
    CHECK(norm_inf(subtracted(d.pdot, pdot)) < 1e-12);
    // pointwise agreement with the reduced form
    const PhaseDerivative r = clebsch_hamilton_rhs(space, H, {s.q, s.p, s.xi, s.t});
    CHECK(norm_inf(subtracted(d.qdot, r.qdot)) < 1e-15);
    CHECK(norm_inf(subtracted(d.pdot, r.pdot)) < 1e-15);
  }
}

TEST_CASE("constraint pair reports nu and the negated momentum residual") {
  std::mt19937 rng(241);
  const ConfigurationSpace space = so3_vector_space();
  const ClebschHamiltonian H = kinetic_spring(1.0, 0.3, true);
  const ExtendedState s = random_state(space, rng);
  const auto dc = dirac_constraints(space, H, s);
  CHECK(dual_norm(dc.first - s.nu) < 1e-15);
  const DualAlgebraElement C =
      momentum_constraint_residual(space, H, {s.q, s.p, s.xi, s.t});
  CHECK(dual_norm(dc.second - (-1.0 * C)) < 1e-14);
}

TEST_CASE("secondary constraint stays on the surface along the flow") {
  const ConfigurationSpace space = so3_vector_space();
  const ClebschHamiltonian H = kinetic_spring(1.0, 1.0, true);
  // data with q x p = xi so the constraint starts at zero
  const Vec q{1, 0, 0}, p{0, 0.8, 0};
  const AlgebraElement xi = make_algebra(Group::so3, 0, 0, 0.8);
  const XiFn xifn = [xi](double) { return xi; };
  Vec y{q[0], q[1], q[2], p[0], p[1], p[2]};
  StepperSpec spec;
  spec.dt = 1e-3;
  auto rhs = [&](double t, const Vec& yy, Vec& dydt) {
    ExtendedState s;
    s.q.assign(yy.begin(), yy.begin() + 3);
    s.p.assign(yy.begin() + 3, yy.end());
    s.xi = xifn(t);
    s.nu = dual_zero(Group::so3);
    s.t = t;
    const PhaseDerivative d = extended_hamilton_rhs(space, H, s);
    dydt.resize(6);
    for (int i = 0; i < 3; ++i) {
      dydt[static_cast<std::size_t>(i)] = d.qdot[static_cast<std::size_t>(i)];
      dydt[static_cast<std::size_t>(i) + 3] = d.pdot[static_cast<std::size_t>(i)];
    }
  };
  const TrajectoryRecord rec = integrate(rhs, y, 0.0, 2.0, spec);
  for (std::size_t k = 0; k < rec.states.size(); ++k) {
    ClebschState s;
    s.q.assign(rec.states[k].begin(), rec.states[k].begin() + 3);
    s.p.assign(rec.states[k].begin() + 3, rec.states[k].end());
    s.xi = xi;
    CHECK(dual_norm(momentum_constraint_residual(space, H, s)) < 1e-8);
  }
}

TEST_CASE("the reduced and extended formulations produce the same trajectory") {
  const ConfigurationSpace space = so3_vector_space();
  const ClebschHamiltonian H = kinetic_spring(1.0, 1.0);
  const ClebschState initial{{1, 0, 0}, {0.6, 0, 0}, make_algebra(Group::so3, 0.2, -0.4, 0.9), 0};
  const XiFn xifn = [](double t) {
    return adjoint(group_exp(basis_element(Group::so3, 2), t),
                   make_algebra(Group::so3, 0.2, -0.4, 0.9));
  };
  const XiFn alternate = [](double) { return make_algebra(Group::so3, -0.3, 0.1, 0.5); };
  StepperSpec spec;
  spec.dt = 1e-3;
  std::vector<TangentGroupElement> shifts;
  shifts.push_back({make_algebra(Group::so3, 0.4, 0.0, -0.2),
                    group_exp(make_algebra(Group::so3, 0.3, 1.1, -0.5))});
  shifts.push_back({algebra_zero(Group::so3),
                    group_exp(make_algebra(Group::so3, -1.2, 0.2, 0.7))});
  const EquivalenceReport rep =
      equivalence_check(space, H, initial, xifn, 2.0, spec, {}, shifts, &alternate);
  CHECK(rep.max_state_diff < 1e-10);
  CHECK(rep.max_invariant_diff_gauge < 1e-8);
  CHECK(rep.xi_comparison_done);
  CHECK(rep.max_invariant_diff_xi < 1e-8);
}

TEST_CASE("equivalence check rejects unsuitable inputs") {
  const ConfigurationSpace space = so3_vector_space();
  ClebschHamiltonian H = kinetic_spring(1.0, 1.0);
  const XiFn xifn = [](double) { return basis_element(Group::so3, 2); };
  StepperSpec spec;
  spec.dt = 1e-2;
  const ClebschState ok{{1, 0, 0}, {0.5, 0, 0}, xifn(0), 0};

  ClebschHamiltonian coupled = kinetic_spring(1.0, 1.0, true);
  CHECK_THROWS_AS(equivalence_check(space, coupled, ok, xifn, 0.1, spec, {}, {}),
                  std::invalid_argument);

  const ClebschState off{{1, 0, 0}, {0, 1, 0}, xifn(0), 0};  // q x p != 0
  CHECK_THROWS_AS(equivalence_check(space, H, off, xifn, 0.1, spec, {}, {}),
                  std::invalid_argument);
}
