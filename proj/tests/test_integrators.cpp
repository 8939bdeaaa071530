#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

#include "clebsch/diagnostics.hpp"
#include "clebsch/integrate.hpp"

using namespace clebsch;

namespace {

// unit harmonic oscillator: y = (q, p), H = (q^2 + p^2)/2
const Rhs oscillator = [](double, const Vec& y, Vec& dydt) {
  dydt[0] = y[1];
  dydt[1] = -y[0];
};

double oscillator_error(StepperSpec spec, double T) {
  const TrajectoryRecord rec = integrate(oscillator, {1.0, 0.0}, 0.0, T, spec);
  const Vec& yf = rec.states.back();
  return std::hypot(yf[0] - std::cos(T), yf[1] + std::sin(T));
}

}  // namespace

TEST_CASE("zero right-hand side holds the state fixed") {
  const Rhs zero = [](double, const Vec& y, Vec& dydt) { dydt.assign(y.size(), 0.0); };
  for (auto scheme : {StepperSpec::Scheme::rk4, StepperSpec::Scheme::implicit_midpoint}) {
    StepperSpec spec;
    spec.scheme = scheme;
    spec.dt = 0.1;
    const TrajectoryRecord rec = integrate(zero, {1.5, -2.0, 0.25}, 0.0, 10.0, spec);
    for (const auto& y : rec.states) {
      CHECK(y[0] == 1.5);
      CHECK(y[1] == -2.0);
      CHECK(y[2] == 0.25);
    }
  }
}

TEST_CASE("classical Runge-Kutta converges at fourth order") {
  std::vector<double> dts{4e-2, 2e-2, 1e-2}, errs;
  for (double dt : dts) {
    StepperSpec spec;
    spec.dt = dt;
    errs.push_back(oscillator_error(spec, 4.0));
  }
  CHECK(std::abs(fit_loglog_slope(dts, errs) - 4.0) < 0.2);
}

TEST_CASE("implicit midpoint converges at second order") {
  std::vector<double> dts{4e-2, 2e-2, 1e-2}, errs;
  for (double dt : dts) {
    StepperSpec spec;
    spec.scheme = StepperSpec::Scheme::implicit_midpoint;
    spec.dt = dt;
    errs.push_back(oscillator_error(spec, 4.0));
  }
  CHECK(std::abs(fit_loglog_slope(dts, errs) - 2.0) < 0.2);
}

TEST_CASE("implicit midpoint preserves the oscillator energy over long runs") {
  StepperSpec spec;
  spec.scheme = StepperSpec::Scheme::implicit_midpoint;
  spec.dt = 0.05;
  IntegrationOptions opts;
  opts.cadence = 100;
  const TrajectoryRecord rec = integrate(oscillator, {1.0, 0.0}, 0.0, 5000.0, spec, nullptr, opts);
  double worst = 0;
  for (const auto& y : rec.states)
    worst = std::max(worst, std::abs(0.5 * (y[0] * y[0] + y[1] * y[1]) - 0.5));
  CHECK(worst < 1e-6);
}

TEST_CASE("the linear-solve midpoint path agrees with the fixed-point path") {
  StepperSpec fp;
  fp.scheme = StepperSpec::Scheme::implicit_midpoint;
  fp.dt = 0.02;
  StepperSpec lin = fp;
  lin.assume_linear_rhs = true;
  const TrajectoryRecord a = integrate(oscillator, {0.3, -1.1}, 0.0, 2.0, fp);
  const TrajectoryRecord b = integrate(oscillator, {0.3, -1.1}, 0.0, 2.0, lin);
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    CHECK(std::abs(a.states[k][0] - b.states[k][0]) < 1e-10);
    CHECK(std::abs(a.states[k][1] - b.states[k][1]) < 1e-10);
  }
}

TEST_CASE("zero horizon records exactly the initial state") {
  StepperSpec spec;
  const TrajectoryRecord rec = integrate(oscillator, {1.0, 0.0}, 3.5, 0.0, spec);
  REQUIRE(rec.times.size() == 1);
  CHECK(rec.times[0] == 3.5);
  CHECK(rec.states[0][0] == 1.0);
}

TEST_CASE("horizon must divide into whole steps") {
  StepperSpec spec;
  spec.dt = 0.3;
  CHECK_THROWS_AS(integrate(oscillator, {1.0, 0.0}, 0.0, 1.0, spec), std::invalid_argument);
  CHECK_NOTHROW(integrate(oscillator, {1.0, 0.0}, 0.0, 0.9, spec));
}

TEST_CASE("input validation") {
  StepperSpec spec;
  spec.dt = -1.0;
  CHECK_THROWS_AS(integrate(oscillator, {1.0, 0.0}, 0.0, 1.0, spec), std::invalid_argument);
  spec.dt = 0.1;
  CHECK_THROWS_AS(integrate(oscillator, {1.0, 0.0}, 0.0, -0.5, spec), std::invalid_argument);
  IntegrationOptions opts;
  opts.cadence = 0;
  CHECK_THROWS_AS(integrate(oscillator, {1.0, 0.0}, 0.0, 1.0, spec, nullptr, opts),
                  std::invalid_argument);
}

TEST_CASE("recording cadence keeps the endpoints and every k-th step") {
  StepperSpec spec;
  spec.dt = 0.01;
  IntegrationOptions opts;
  opts.cadence = 7;
  const TrajectoryRecord rec = integrate(oscillator, {1.0, 0.0}, 0.0, 1.0, spec, nullptr, opts);
  // 100 steps: k = 0, 7, ..., 98, then the forced final k = 100
  REQUIRE(rec.times.size() == 16);
  CHECK(rec.times.front() == 0.0);
  CHECK(rec.times.back() == Catch::Approx(1.0).margin(1e-12));
  for (std::size_t k = 1; k < rec.times.size(); ++k) CHECK(rec.times[k] > rec.times[k - 1]);
}

TEST_CASE("diagnostics rows align with recorded times") {
  StepperSpec spec;
  spec.dt = 0.1;
  Diagnostics diag;
  diag.names = {"sum"};
  diag.eval = [](double, const Vec& y) { return std::vector<double>{y[0] + y[1]}; };
  const TrajectoryRecord rec = integrate(oscillator, {1.0, 0.0}, 0.0, 1.0, spec, &diag);
  REQUIRE(rec.diagnostics.size() == rec.times.size());
  REQUIRE(rec.diagnostic_names == std::vector<std::string>{"sum"});
  for (std::size_t k = 0; k < rec.times.size(); ++k)
    CHECK(rec.diagnostics[k][0] == rec.states[k][0] + rec.states[k][1]);
}

TEST_CASE("final-only storage keeps one state but all diagnostics") {
  StepperSpec spec;
  spec.dt = 0.1;
  Diagnostics diag;
  diag.names = {"q"};
  diag.eval = [](double, const Vec& y) { return std::vector<double>{y[0]}; };
  IntegrationOptions opts;
  opts.store = IntegrationOptions::StorePolicy::final_only;
  const TrajectoryRecord rec = integrate(oscillator, {1.0, 0.0}, 0.0, 1.0, spec, &diag, opts);
  CHECK(rec.states.size() == 1);
  CHECK(rec.diagnostics.size() == rec.times.size());
  CHECK(rec.times.size() == 11);
}

TEST_CASE("integration is deterministic") {
  StepperSpec spec;
  spec.dt = 1e-3;
  const TrajectoryRecord a = integrate(oscillator, {0.77, 0.13}, 0.0, 1.0, spec);
  const TrajectoryRecord b = integrate(oscillator, {0.77, 0.13}, 0.0, 1.0, spec);
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    CHECK(std::memcmp(a.states[k].data(), b.states[k].data(), 2 * sizeof(double)) == 0);
  }
}

TEST_CASE("single step matches the first integration step") {
  StepperSpec spec;
  spec.dt = 0.05;
  const Vec y0{0.4, -0.9};
  const Vec one = step(oscillator, 0.0, y0, spec);
  const TrajectoryRecord rec = integrate(oscillator, y0, 0.0, 0.05, spec);
  CHECK(one[0] == rec.states.back()[0]);
  CHECK(one[1] == rec.states.back()[1]);
}

TEST_CASE("constant forcing is integrated exactly") {
  const Rhs constant = [](double, const Vec&, Vec& dydt) { dydt.assign(2, 3.0); };
  for (auto scheme : {StepperSpec::Scheme::rk4, StepperSpec::Scheme::implicit_midpoint}) {
    StepperSpec spec;
    spec.scheme = scheme;
    spec.dt = 0.125;  // exactly representable
    const TrajectoryRecord rec = integrate(constant, {1.0, 2.0}, 0.0, 8.0, spec);
    CHECK(std::abs(rec.states.back()[0] - 25.0) < 1e-12);
    CHECK(std::abs(rec.states.back()[1] - 26.0) < 1e-12);
  }
}

TEST_CASE("midpoint fixed point reports divergence on a too-stiff step") {
  const Rhs stiff = [](double, const Vec& y, Vec& dydt) { dydt[0] = -1e6 * y[0]; };
  StepperSpec spec;
  spec.scheme = StepperSpec::Scheme::implicit_midpoint;
  spec.dt = 1.0;
  CHECK_THROWS_AS(integrate(stiff, {1.0}, 0.0, 1.0, spec), NonConvergence);
}
