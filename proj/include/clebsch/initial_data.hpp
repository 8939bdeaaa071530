#pragma once

// Deterministic lattice initial data: band-limited random fields with the
// Gauss constraint projected out, homogeneous SU(2) states, and pure-gauge
// U(1) connections. All generators draw from a seeded mt19937 so runs are
// reproducible.

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "clebsch/lattice.hpp"
#include "clebsch/lie.hpp"
#include "clebsch/linalg.hpp"

namespace clebsch {
namespace detail {

// Real trig polynomial over the lowest Fourier modes, uniformly bounded by
// roughly the amplitude.
inline Vec smooth_scalar_field(const LatticeGeometry& geom, std::mt19937& rng,
                               double amplitude) {
  static const int modes[6][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1},
                                  {1, 1, 0}, {0, 1, 1}, {1, 0, 1}};
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int ns = geom.sites();
  Vec f(static_cast<std::size_t>(ns), 0.0);
  const double norm = amplitude / 7.0;
  const double base = u(rng);
  for (int s = 0; s < ns; ++s) f[static_cast<std::size_t>(s)] = base * norm;
  for (const auto& k : modes) {
    const double ca = u(rng), sa = u(rng);
    for (int s = 0; s < ns; ++s) {
      const std::array<int, 3> c = geom.coords(s);
      const double phase =
          2.0 * 3.14159265358979323846 * (k[0] * c[0] + k[1] * c[1] + k[2] * c[2]) / geom.n;
      f[static_cast<std::size_t>(s)] += norm * (ca * std::cos(phase) + sa * std::sin(phase));
    }
  }
  return f;
}

}  // namespace detail

// Band-limited random fields for every component of A, D, phi; pi is a
// smooth real multiple of phi so the charge density vanishes pointwise and
// the divergence correction of project_to_gauss can reach tolerance.
inline LatticeState smooth_random_state(Group group, const LatticeGeometry& geom, unsigned seed,
                                        double amplitude, bool project = true) {
  LatticeState st = make_lattice_state(group, geom);
  std::mt19937 rng(seed);
  const int ns = geom.sites();
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(group));
  const std::size_t df = static_cast<std::size_t>(lattice_fiber_dim(group));

  for (int dir = 0; dir < 3; ++dir)
    for (std::size_t c = 0; c < dg; ++c) {
      const Vec f = detail::smooth_scalar_field(geom, rng, amplitude);
      const Vec h = detail::smooth_scalar_field(geom, rng, amplitude);
      for (int s = 0; s < ns; ++s) {
        st.A[(static_cast<std::size_t>(s) * 3 + static_cast<std::size_t>(dir)) * dg + c] =
            f[static_cast<std::size_t>(s)];
        st.D[(static_cast<std::size_t>(s) * 3 + static_cast<std::size_t>(dir)) * dg + c] =
            h[static_cast<std::size_t>(s)];
      }
    }
  for (std::size_t c = 0; c < df; ++c) {
    const Vec f = detail::smooth_scalar_field(geom, rng, amplitude);
    for (int s = 0; s < ns; ++s)
      st.phi[static_cast<std::size_t>(s) * df + c] = f[static_cast<std::size_t>(s)];
  }
  const Vec mult = detail::smooth_scalar_field(geom, rng, 1.0);
  for (int s = 0; s < ns; ++s)
    for (std::size_t c = 0; c < df; ++c)
      st.pi[static_cast<std::size_t>(s) * df + c] =
          mult[static_cast<std::size_t>(s)] * st.phi[static_cast<std::size_t>(s) * df + c];

  return project ? project_to_gauss(st) : st;
}

// Spatially constant SU(2) data with non-commuting field directions and a
// vanishing Gauss residual. Homogeneity is preserved exactly by the flow,
// and the constraint value depends only on the bracket terms, so this is the
// sharp setting for constraint-drift order measurements.
inline LatticeState homogeneous_su2_state(const LatticeGeometry& geom, unsigned seed,
                                          double amplitude) {
  LatticeState st = make_lattice_state(Group::su2, geom);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int ns = geom.sites();
  double Ac[9], Dc[9], phic[3];
  for (auto& x : Ac) x = amplitude * u(rng);
  for (auto& x : Dc) x = amplitude * u(rng);
  for (auto& x : phic) x = amplitude * u(rng);
  const double pscale = u(rng);
  for (int s = 0; s < ns; ++s) {
    const std::size_t sz = static_cast<std::size_t>(s);
    for (int dir = 0; dir < 3; ++dir)
      for (std::size_t c = 0; c < 3; ++c) {
        st.A[(sz * 3 + static_cast<std::size_t>(dir)) * 3 + c] =
            Ac[static_cast<std::size_t>(dir) * 3 + c];
        st.D[(sz * 3 + static_cast<std::size_t>(dir)) * 3 + c] =
            Dc[static_cast<std::size_t>(dir) * 3 + c];
      }
    for (std::size_t c = 0; c < 3; ++c) {
      st.phi[sz * 3 + c] = phic[c];
      st.pi[sz * 3 + c] = pscale * phic[c];
    }
  }
  return project_to_gauss(st);
}

struct PureGaugeData {
  LatticeState state;
  Vec chi;  // per-site angle, A = grad chi
};

// U(1) connection that is exactly a lattice gradient: B vanishes to
// round-off and the state is gauge-equivalent to the zero connection via
// lambda = exp(i chi).
inline PureGaugeData pure_gauge_u1_state(const LatticeGeometry& geom, unsigned seed,
                                         double chi_amplitude) {
  PureGaugeData out{make_lattice_state(Group::u1, geom), {}};
  std::mt19937 rng(seed);
  out.chi = detail::smooth_scalar_field(geom, rng, chi_amplitude);
  const int ns = geom.sites();
  const double inv2a = 1.0 / (2.0 * geom.a);
  for (int s = 0; s < ns; ++s)
    for (int i = 0; i < 3; ++i)
      out.state.A[static_cast<std::size_t>(s) * 3 + static_cast<std::size_t>(i)] =
          (out.chi[static_cast<std::size_t>(geom.neighbor(s, i, +1))] -
           out.chi[static_cast<std::size_t>(geom.neighbor(s, i, -1))]) * inv2a;
  return out;
}

// Site-wise exponential of an algebra-valued field.
inline GaugeTransformation gauge_from_field(const LatticeGeometry& geom, Group group,
                                            const Vec& xi_field) {
  const int ns = geom.sites();
  const std::size_t dg = static_cast<std::size_t>(algebra_dim(group));
  if (xi_field.size() != static_cast<std::size_t>(ns) * dg)
    throw std::invalid_argument("gauge_from_field: field size mismatch");
  GaugeTransformation lam;
  lam.lambda.reserve(static_cast<std::size_t>(ns));
  for (int s = 0; s < ns; ++s) {
    AlgebraElement xi = algebra_zero(group);
    for (std::size_t c = 0; c < dg; ++c) xi.c[c] = xi_field[static_cast<std::size_t>(s) * dg + c];
    lam.lambda.push_back(group_exp(xi));
  }
  return lam;
}

}  // namespace clebsch
