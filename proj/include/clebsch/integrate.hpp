#pragma once

// Fixed-step integrators over flat state vectors. Deterministic: the same
// inputs produce bitwise-identical trajectories.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "clebsch/errors.hpp"
#include "clebsch/linalg.hpp"

namespace clebsch {

using Rhs = std::function<void(double t, const Vec& y, Vec& dydt)>;

struct StepperSpec {
  enum class Scheme { rk4, implicit_midpoint };
  Scheme scheme = Scheme::rk4;
  double dt = 1e-3;
  double newton_tol = 1e-12;  // midpoint fixed-point tolerance
  int max_newton = 50;
  // When set, the midpoint equation is solved with one dense linear solve,
  // probing the rhs for its affine form instead of iterating.
  bool assume_linear_rhs = false;
};

struct Diagnostics {
  std::vector<std::string> names;
  std::function<std::vector<double>(double t, const Vec& y)> eval;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Vec> states;                       // per StorePolicy
  std::vector<std::vector<double>> diagnostics;  // aligned with times
  std::vector<std::string> diagnostic_names;
};

struct IntegrationOptions {
  int cadence = 1;  // record every k-th step (initial and final always kept)
  enum class StorePolicy { all, sampled, final_only };
  StorePolicy store = StorePolicy::sampled;
};

namespace detail {

struct Rk4Workspace {
  Vec k1, k2, k3, k4, tmp;
  void resize(std::size_t n) {
    k1.resize(n);
    k2.resize(n);
    k3.resize(n);
    k4.resize(n);
    tmp.resize(n);
  }
};

inline void rk4_step(const Rhs& f, double t, Vec& y, double dt, Rk4Workspace& w) {
  const std::size_t n = y.size();
  w.resize(n);
  f(t, y, w.k1);
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + 0.5 * dt * w.k1[i];
  f(t + 0.5 * dt, w.tmp, w.k2);
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + 0.5 * dt * w.k2[i];
  f(t + 0.5 * dt, w.tmp, w.k3);
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + dt * w.k3[i];
  f(t + dt, w.tmp, w.k4);
  for (std::size_t i = 0; i < n; ++i)
    y[i] += dt / 6.0 * (w.k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
}

inline void midpoint_step(const Rhs& f, double t, Vec& y, const StepperSpec& spec) {
  const std::size_t n = y.size();
  const double tm = t + 0.5 * spec.dt;
  Vec z = y, fz(n);
  if (spec.assume_linear_rhs) {
    // Probe f(tm, .) = A y + b and solve (I - dt/2 A) z = y + dt/2 b.
    Vec zero(n, 0.0), b(n);
    f(tm, zero, b);
    std::vector<double> M(n * n, 0.0);
    Vec e(n, 0.0), col(n);
    for (std::size_t j = 0; j < n; ++j) {
      e[j] = 1.0;
      f(tm, e, col);
      e[j] = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        M[i * n + j] = (i == j ? 1.0 : 0.0) - 0.5 * spec.dt * (col[i] - b[i]);
    }
    Vec rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = y[i] + 0.5 * spec.dt * b[i];
    z = solve_dense(std::move(M), std::move(rhs));
  } else {
    bool converged = false;
    for (int it = 0; it < spec.max_newton; ++it) {
      f(tm, z, fz);
      double delta = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double zn = y[i] + 0.5 * spec.dt * fz[i];
        delta = std::max(delta, std::abs(zn - z[i]));
        z[i] = zn;
      }
      if (delta <= spec.newton_tol * (1.0 + norm_inf(z))) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw NonConvergence("implicit midpoint: fixed-point iteration did not converge in " +
                           std::to_string(spec.max_newton) + " iterations");
  }
  f(tm, z, fz);
  for (std::size_t i = 0; i < n; ++i) y[i] += spec.dt * fz[i];
}

}  // namespace detail

// One step of the selected scheme; returns the advanced state.
inline Vec step(const Rhs& f, double t, const Vec& y, const StepperSpec& spec) {
  if (!(spec.dt > 0)) throw std::invalid_argument("step: dt must be positive");
  Vec out = y;
  if (spec.scheme == StepperSpec::Scheme::rk4) {
    detail::Rk4Workspace w;
    detail::rk4_step(f, t, out, spec.dt, w);
  } else {
    detail::midpoint_step(f, t, out, spec);
  }
  return out;
}

// Integrate over [t0, t0 + horizon] with fixed steps; horizon must be a
// (near-)integer multiple of dt. horizon == 0 records the initial state only.
inline TrajectoryRecord integrate(const Rhs& f, const Vec& y0, double t0, double horizon,
                                  const StepperSpec& spec, const Diagnostics* diag = nullptr,
                                  const IntegrationOptions& opts = {}) {
  if (!(spec.dt > 0)) throw std::invalid_argument("integrate: dt must be positive");
  if (horizon < 0) throw std::invalid_argument("integrate: horizon must be nonnegative");
  if (opts.cadence < 1) throw std::invalid_argument("integrate: cadence must be >= 1");
  const long long steps = std::llround(horizon / spec.dt);
  if (std::abs(static_cast<double>(steps) * spec.dt - horizon) > 1e-9 * std::max(1.0, horizon))
    throw std::invalid_argument("integrate: horizon is not an integer multiple of dt");

  TrajectoryRecord rec;
  if (diag) rec.diagnostic_names = diag->names;
  Vec y = y0;
  detail::Rk4Workspace w;

  auto record = [&](long long k, double t) {
    rec.times.push_back(t);
    if (opts.store == IntegrationOptions::StorePolicy::all ||
        opts.store == IntegrationOptions::StorePolicy::sampled)
      rec.states.push_back(y);
    if (diag) rec.diagnostics.push_back(diag->eval(t, y));
    (void)k;
  };

  record(0, t0);
  for (long long k = 1; k <= steps; ++k) {
    const double t = t0 + static_cast<double>(k - 1) * spec.dt;
    if (spec.scheme == StepperSpec::Scheme::rk4)
      detail::rk4_step(f, t, y, spec.dt, w);
    else
      detail::midpoint_step(f, t, y, spec);
    if (k % opts.cadence == 0 || k == steps) record(k, t0 + static_cast<double>(k) * spec.dt);
  }
  if (opts.store == IntegrationOptions::StorePolicy::final_only) {
    rec.states.clear();
    rec.states.push_back(y);
  }
  return rec;
}

}  // namespace clebsch
