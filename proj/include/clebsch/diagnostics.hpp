#pragma once

// Measurement helpers for convergence studies and gradient validation.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "clebsch/linalg.hpp"

namespace clebsch {

// Least-squares slope of log(y) against log(x). Used to read off convergence
// orders from (dt, error) pairs.
inline double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_loglog_slope: need >= 2 matching samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0))
      throw std::invalid_argument("fit_loglog_slope: samples must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) throw std::invalid_argument("fit_loglog_slope: degenerate x");
  return (n * sxy - sx * sy) / denom;
}

// Central-difference directional derivative of a scalar function.
inline double directional_derivative(const std::function<double(const Vec&)>& f, const Vec& x,
                                     const Vec& dir, double h = 1e-6) {
  Vec xp = x, xm = x;
  axpy(h, dir, xp);
  axpy(-h, dir, xm);
  return (f(xp) - f(xm)) / (2.0 * h);
}

// Relative error |a-b| / max(1, |a|, |b|).
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace clebsch
