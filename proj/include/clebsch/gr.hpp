#pragma once

// Spatially homogeneous ADM mechanics on a flat 3-torus with unit coordinate
// volume: metric g, momentum coefficient pi_bar (the density momentum is
// pi = pi_bar vol_g), prescribed lapse, zero shift. The scalar curvature of
// the flat slices vanishes, so the Kasner family is the analytic oracle.

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include "clebsch/errors.hpp"
#include "clebsch/integrate.hpp"
#include "clebsch/linalg.hpp"

namespace clebsch {

struct AdmState {
  Mat3 g = mat3_identity();
  Mat3 pi_bar = mat3_zero();
  double lapse = 1.0;
  Vec3 shift = {0.0, 0.0, 0.0};
  double t = 0;
};

struct ExtrinsicData {
  Mat3 k = mat3_zero();
};

namespace detail {

inline void require_spd(const Mat3& g, const char* who) {
  if (!mat3_is_spd(g)) throw SingularMetric(std::string(who) + ": metric is not positive definite");
}

}  // namespace detail

// k = gdot / (2 lapse); homogeneous slicing has no shift transport.
inline ExtrinsicData gr_effective_velocity(const AdmState& s, const Mat3& gdot) {
  if (!(s.lapse > 0)) throw std::invalid_argument("gr_effective_velocity: lapse must be positive");
  return {mat3_scale(gdot, 1.0 / (2.0 * s.lapse))};
}

// L = lapse (|k|_g^2 - (tr_g k)^2) sqrt(det g), with the flat-torus scalar
// curvature dropped.
inline double gr_lagrangian(const AdmState& s, const ExtrinsicData& k) {
  detail::require_spd(s.g, "gr_lagrangian");
  const Mat3 ginv = mat3_inverse(s.g);
  const Mat3 mixed = mat3_mul(ginv, k.k);
  const double tr = mat3_trace(mixed);
  const double norm2 = mat3_trace(mat3_mul(mixed, mixed));
  return s.lapse * (norm2 - tr * tr) * std::sqrt(mat3_det(s.g));
}

// pi_bar = k-sharp - (tr_g k) g^{-1}.
inline Mat3 gr_legendre(const AdmState& s, const ExtrinsicData& k) {
  detail::require_spd(s.g, "gr_legendre");
  const Mat3 ginv = mat3_inverse(s.g);
  const Mat3 sharp = mat3_mul(ginv, mat3_mul(k.k, ginv));
  return mat3_add(sharp, mat3_scale(ginv, -mat3_trace(mat3_mul(ginv, k.k))));
}

// k = g pi_bar g - (tr(g pi_bar)/2) g, the inverse of gr_legendre.
inline ExtrinsicData gr_inverse_legendre(const AdmState& s) {
  const Mat3 gpg = mat3_mul(s.g, mat3_mul(s.pi_bar, s.g));
  return {mat3_add(gpg, mat3_scale(s.g, -0.5 * mat3_trace(mat3_mul(s.g, s.pi_bar))))};
}

// Central-difference divergence (div pi)^j = sum_i d_i pi^{ij} of a matrix
// field; the oracle hook for the homogeneous momentum map.
inline Vec3 discrete_pi_divergence(const std::function<Mat3(const Vec3&)>& pi_field,
                                   const Vec3& x0, double h) {
  if (!(h > 0)) throw std::invalid_argument("discrete_pi_divergence: step must be positive");
  Vec3 out = {0.0, 0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    Vec3 xp = x0, xm = x0;
    xp[static_cast<std::size_t>(i)] += h;
    xm[static_cast<std::size_t>(i)] -= h;
    const Mat3 pp = pi_field(xp), pm = pi_field(xm);
    for (int j = 0; j < 3; ++j)
      out[static_cast<std::size_t>(j)] +=
          (pp[static_cast<std::size_t>(i * 3 + j)] - pm[static_cast<std::size_t>(i * 3 + j)]) /
          (2.0 * h);
  }
  return out;
}

// J = 2 (div_g pi)-flat. The state is homogeneous, so the divergence is the
// discrete divergence of a constant field: identically zero, computed rather
// than assumed.
inline Vec3 gr_momentum_map(const AdmState& s) {
  const Mat3 pb = s.pi_bar;
  const Vec3 div = discrete_pi_divergence([&pb](const Vec3&) { return pb; },
                                          {0.0, 0.0, 0.0}, 0.5);
  const Vec3 lowered = mat3_apply(s.g, div);
  return {2.0 * lowered[0], 2.0 * lowered[1], 2.0 * lowered[2]};
}

struct GrConstraints {
  Vec3 diffeo = {0.0, 0.0, 0.0};
  double hamiltonian = 0;
};

// Diffeomorphism residual (zero for homogeneous data, via the momentum map)
// and Hamiltonian residual (tr_g k)^2 - |k|_g^2 with k recovered from pi_bar.
inline GrConstraints gr_constraints(const AdmState& s) {
  detail::require_spd(s.g, "gr_constraints");
  const ExtrinsicData k = gr_inverse_legendre(s);
  const Mat3 mixed = mat3_mul(mat3_inverse(s.g), k.k);
  const double tr = mat3_trace(mixed);
  const double norm2 = mat3_trace(mat3_mul(mixed, mixed));
  return {gr_momentum_map(s), tr * tr - norm2};
}

// H = lapse sqrt(det g) (|pi_bar|_g^2 - (tr_g pi_bar)^2 / 2); vanishes on the
// constraint set.
inline double adm_hamiltonian(const AdmState& s) {
  detail::require_spd(s.g, "adm_hamiltonian");
  const Mat3 pg = mat3_mul(s.pi_bar, s.g);
  const double tr = mat3_trace(pg);
  const double norm2 = mat3_trace(mat3_mul(pg, pg));
  return s.lapse * std::sqrt(mat3_det(s.g)) * (norm2 - 0.5 * tr * tr);
}

struct AdmDerivative {
  Mat3 gdot = mat3_zero();
  Mat3 pibar_dot = mat3_zero();
};

struct AdmCanonicalPartials {
  Mat3 dH_dg = mat3_zero();
  Mat3 dH_dpi = mat3_zero();  // conjugate variable pi = pi_bar sqrt(det g)
};

// Matrix gradients of adm_hamiltonian in the canonical variables (g, pi):
//   dH/dpi = lapse (2 g pi_bar g - tr(g pi_bar) g)
//   dH/dg  = lapse sqrt(det g) (2 pi_bar g pi_bar - tr(g pi_bar) pi_bar
//            - (|pi_bar|_g^2 - tr(g pi_bar)^2 / 2) g^{-1} / 2)
inline AdmCanonicalPartials adm_canonical_partials(const AdmState& s) {
  detail::require_spd(s.g, "adm_canonical_partials");
  const Mat3 ginv = mat3_inverse(s.g);
  const Mat3 pg = mat3_mul(s.pi_bar, s.g);
  const double tr = mat3_trace(pg);
  const double norm2 = mat3_trace(mat3_mul(pg, pg));
  const double root = std::sqrt(mat3_det(s.g));

  AdmCanonicalPartials out;
  const Mat3 gpg = mat3_mul(s.g, mat3_mul(s.pi_bar, s.g));
  out.dH_dpi = mat3_scale(mat3_add(mat3_scale(gpg, 2.0), mat3_scale(s.g, -tr)), s.lapse);

  const Mat3 pgp = mat3_mul(s.pi_bar, mat3_mul(s.g, s.pi_bar));
  Mat3 dg = mat3_scale(pgp, 2.0);
  dg = mat3_add(dg, mat3_scale(s.pi_bar, -tr));
  dg = mat3_add(dg, mat3_scale(ginv, -0.5 * (norm2 - 0.5 * tr * tr)));
  out.dH_dg = mat3_scale(dg, s.lapse * root);
  return out;
}

// Canonical flow in (g, pi) re-expressed in the stored variable pi_bar:
//   gdot = dH/dpi
//   pibar_dot = lapse (-2 pi_bar g pi_bar + 3/2 tr(g pi_bar) pi_bar
//               + (|pi_bar|_g^2 - tr(g pi_bar)^2 / 2) g^{-1} / 2)
inline AdmDerivative adm_rhs(const AdmState& s) {
  detail::require_spd(s.g, "adm_rhs");
  const Mat3 ginv = mat3_inverse(s.g);
  const Mat3 pg = mat3_mul(s.pi_bar, s.g);
  const double tr = mat3_trace(pg);
  const double norm2 = mat3_trace(mat3_mul(pg, pg));

  AdmDerivative d;
  const Mat3 gpg = mat3_mul(s.g, mat3_mul(s.pi_bar, s.g));
  d.gdot = mat3_scale(mat3_add(mat3_scale(gpg, 2.0), mat3_scale(s.g, -tr)), s.lapse);

  const Mat3 pgp = mat3_mul(s.pi_bar, mat3_mul(s.g, s.pi_bar));
  Mat3 pd = mat3_scale(pgp, -2.0);
  pd = mat3_add(pd, mat3_scale(s.pi_bar, 1.5 * tr));
  pd = mat3_add(pd, mat3_scale(ginv, 0.5 * (norm2 - 0.5 * tr * tr)));
  d.pibar_dot = mat3_scale(pd, s.lapse);
  return d;
}

inline std::array<double, 3> standard_kasner_exponents() {
  return {2.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0};
}

inline Mat3 kasner_metric(const std::array<double, 3>& p, double t) {
  Mat3 g = mat3_zero();
  for (int i = 0; i < 3; ++i)
    g[static_cast<std::size_t>(i * 4)] = std::pow(t, 2.0 * p[static_cast<std::size_t>(i)]);
  return g;
}

// Exact vacuum data g = diag(t^{2 p_i}), pi_bar = diag((p_i - 1) t^{-2 p_i - 1}).
inline AdmState kasner_state(const std::array<double, 3>& p, double t0, double lapse = 1.0) {
  if (!(t0 > 0)) throw std::invalid_argument("kasner_state: time must be positive");
  AdmState s;
  s.g = kasner_metric(p, t0);
  s.pi_bar = mat3_zero();
  for (int i = 0; i < 3; ++i)
    s.pi_bar[static_cast<std::size_t>(i * 4)] =
        (p[static_cast<std::size_t>(i)] - 1.0) * std::pow(t0, -2.0 * p[static_cast<std::size_t>(i)] - 1.0);
  s.lapse = lapse;
  s.t = t0;
  return s;
}

// Exponents recovered from two diagonal metric snapshots.
inline std::array<double, 3> fitted_kasner_exponents(const Mat3& g0, const Mat3& g1, double t0,
                                                     double t1) {
  if (!(t0 > 0) || !(t1 > 0) || t0 == t1)
    throw std::invalid_argument("fitted_kasner_exponents: need two distinct positive times");
  std::array<double, 3> p{};
  for (int i = 0; i < 3; ++i)
    p[static_cast<std::size_t>(i)] =
        std::log(g1[static_cast<std::size_t>(i * 4)] / g0[static_cast<std::size_t>(i * 4)]) /
        (2.0 * std::log(t1 / t0));
  return p;
}

// Random state on the constraint set: a random extrinsic curvature is shifted
// along g until (tr_g k)^2 = |k|_g^2; the quadratic in the shift always has
// real roots by Cauchy-Schwarz.
inline AdmState random_constraint_state(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  AdmState s;
  Mat3 a = mat3_zero();
  for (auto& x : a) x = u(rng);
  s.g = mat3_add(mat3_mul(a, mat3_transpose(a)), mat3_scale(mat3_identity(), 0.6));
  Mat3 k0 = mat3_zero();
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      const double x = u(rng);
      k0[static_cast<std::size_t>(i * 3 + j)] = x;
      k0[static_cast<std::size_t>(j * 3 + i)] = x;
    }
  const Mat3 mixed = mat3_mul(mat3_inverse(s.g), k0);
  const double tau = mat3_trace(mixed);
  const double knorm2 = mat3_trace(mat3_mul(mixed, mixed));
  // 6 lam^2 + 4 tau lam + tau^2 - knorm2 = 0
  const double disc = 16.0 * tau * tau - 24.0 * (tau * tau - knorm2);
  const double sqrt_disc = std::sqrt(std::max(disc, 0.0));
  const double lam = (-4.0 * tau + (u(rng) > 0 ? sqrt_disc : -sqrt_disc)) / 12.0;
  const ExtrinsicData k{mat3_add(k0, mat3_scale(s.g, lam))};
  s.pi_bar = gr_legendre(s, k);
  s.lapse = 0.75 + 0.5 * std::abs(u(rng));
  return s;
}

using LapseFn = std::function<double(double t)>;

// Flat packing [g6 | pi_bar6] in symmetric component order; the rhs checks
// positive-definiteness every evaluation and reports SingularMetric.
inline Vec adm_state_to_flat(const AdmState& s) {
  Vec y(12);
  sym6_pack(s.g, y.data());
  sym6_pack(s.pi_bar, y.data() + 6);
  return y;
}

inline void adm_flat_to_state(const Vec& y, AdmState& s) {
  if (y.size() != 12) throw std::invalid_argument("adm_flat_to_state: expected 12 components");
  s.g = sym6_unpack(y.data());
  s.pi_bar = sym6_unpack(y.data() + 6);
}

inline Rhs make_adm_rhs(LapseFn lapse) {
  return [lapse](double t, const Vec& y, Vec& dydt) {
    AdmState s;
    adm_flat_to_state(y, s);
    s.lapse = lapse(t);
    s.t = t;
    const AdmDerivative d = adm_rhs(s);
    sym6_pack(d.gdot, dydt.data());
    sym6_pack(d.pibar_dot, dydt.data() + 6);
  };
}

}  // namespace clebsch
