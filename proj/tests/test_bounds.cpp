#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lsmfg/fictitious.hpp"
#include "lsmfg/validation.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>

using namespace lsmfg;

TEST_CASE("free diffusion has Gamma_min = Gamma_max = 1") {
  const Problem p(testing::quiet(1, 0.02));
  const PeriodicGrid g = build_grid(1, {16}, 50, 1.0);
  const BoundConstants b = compute_bounds(p, g);
  CHECK(b.log_gamma_min == 0.0);
  CHECK(b.log_gamma_max == 0.0);
  CHECK(b.lipschitz == 0.0);
  CHECK(b.m0_sup == doctest::Approx(0.5));
  CHECK(b.gamma_tilde_max() == doctest::Approx(0.5));
  CHECK(b.density_cap() == doctest::Approx(0.5));

  const auto report = run(p, g, SolveOptions<double>{});
  CHECK(report.diagnostics.bound_violations == 0);
  CHECK(report.psi.values().minCoeff() == 1.0);
  CHECK(report.psi.values().maxCoeff() == 1.0);
}

TEST_CASE("Gamma_min is exp(-T ||g|| / lambda) for a constant cost") {
  const PeriodicGrid g = build_grid(1, {8}, 40, 2.0);
  const double cost = 0.7, lambda = 0.4;
  const AdrCoefficients c = constant_coefficients(
      g, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 0.01), lambda, cost);
  const Eigen::VectorXd vt = Eigen::VectorXd::Zero(g.node_count());
  const Eigen::VectorXd m0 = Eigen::VectorXd::Constant(g.node_count(), 0.5);
  const BoundConstants b = compute_bounds(c, vt, m0);
  CHECK(b.gamma_min() == doctest::Approx(std::exp(-2.0 * cost / lambda)));
  CHECK(b.g_sup == doctest::Approx(cost));
  CHECK(b.log_gamma_tilde_max == doctest::Approx(std::log(0.5) + 2.0 * cost / lambda));

  // The recursion itself decays slower than the exponential bound.
  const Field psi = backward_sweep<double>(c, Field(g), Slice<double>::Ones(g.node_count()));
  CHECK(psi.values().minCoeff() >= b.gamma_min());
}

TEST_CASE("terminal cost sets the extreme Psi bounds") {
  const PeriodicGrid g = build_grid(1, {4}, 10, 1.0);
  const AdrCoefficients c = constant_coefficients(
      g, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1), 0.5, 0.0);
  Eigen::VectorXd vt(8);
  vt << 0.2, 0.4, 1.0, 0.3, 0.2, 0.9, 0.5, 0.6;
  const BoundConstants b =
      compute_bounds(c, vt, Eigen::VectorXd::Constant(8, 0.5));
  CHECK(b.log_gamma_max == doctest::Approx(-0.4));
  CHECK(b.log_gamma_min == doctest::Approx(-2.0));
}

TEST_CASE("congestion widens ||g|| to the implied density cap") {
  const PeriodicGrid g = build_grid(1, {4}, 10, 1.0);
  AdrCoefficients c = constant_coefficients(
      g, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 0.01), 1.0, 0.5);
  c.congestion = 0.2;
  const Eigen::VectorXd m0 = Eigen::VectorXd::Constant(8, 0.5);
  const BoundConstants b = compute_bounds(c, Eigen::VectorXd::Zero(8), m0);
  // first pass: Gamma_min = e^-0.5, Gamma~ = 0.5 e^0.5, cap = Gamma~
  CHECK(b.g_sup == doctest::Approx(0.5 + 0.2 * 0.5 * std::exp(0.5)));
  CHECK(b.log_gamma_min == doctest::Approx(-b.g_sup));
}

TEST_CASE("adjacent-node Lipschitz constant of a smooth drift") {
  const PeriodicGrid g = build_grid(1, {50}, 10, 1.0);
  const double pi = std::numbers::pi;
  AdrCoefficients c = constant_coefficients(
      g, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1), 1.0, 0.0);
  for (Index i = 0; i < g.node_count(); ++i)
    c.drift(i, 0) = std::sin(pi * g.coordinate(i, 0));
  const double lf = drift_lipschitz(c);
  CHECK(lf <= pi);
  CHECK(lf >= 0.99 * pi);
}

TEST_CASE("check_bounds counts every kind of violation") {
  const PeriodicGrid g = build_grid(1, {2}, 1, 1.0);
  BoundConstants b;
  b.log_gamma_min = std::log(0.5);
  b.log_gamma_max = 0.0;
  b.log_gamma_tilde_max = std::log(2.0);
  Field psi(g, 0.75), tilde(g, 1.0);
  CHECK(check_bounds(psi, tilde, b).ok());

  psi(0, 0) = 0.4;
  psi(1, 0) = 1.1;
  tilde(2, 1) = -1e-300;
  tilde(3, 1) = 2.5;
  const BoundReport r = check_bounds(psi, tilde, b);
  CHECK(r.psi_below == 1);
  CHECK(r.psi_above == 1);
  CHECK(r.psitilde_negative == 1);
  CHECK(r.psitilde_above == 1);
  CHECK(r.violations() == 4);
  CHECK(r.first_violation.find("Psi below") != std::string::npos);

  // within the rounding slack
  Field edge(g, 1.0 + 1e-12), t2(g, 1.0);
  CHECK(check_bounds(edge, t2, b).psi_above == 0);
}

TEST_CASE("bounds far outside the double range are compared in logs") {
  const PeriodicGrid g = build_grid(1, {2}, 1, 1.0);
  BoundConstants b;
  b.log_gamma_min = -2000.0;
  b.log_gamma_max = 1.0;
  b.log_gamma_tilde_max = 2000.0;
  Field psi(g, 1e-300), tilde(g, 1e300);
  CHECK(check_bounds(psi, tilde, b).ok());
  psi(0, 0) = 0.0;
  CHECK(check_bounds(psi, tilde, b).psi_below == 1);

  b.log_gamma_min = -1.0;
  psi(0, 0) = 1.0;
  CHECK(check_bounds(psi, tilde, b).psi_below == 7);
}

TEST_CASE("solver iterates respect the bounds on smooth-drift problems") {
  const CampaignResult c = bound_campaign(15, 42, 3, 0.0);
  CHECK(c.problems == 15);
  CHECK(c.violations == 0);
  INFO(c.first_failure);
}

TEST_CASE("running the bundled examples reports no bound violations") {
  const Problem p(testing::example1(0.1));
  const PeriodicGrid g = build_grid(1, {40}, 200, 1.0);
  SolveOptions<double> options;
  options.max_iterations = 10;
  options.tolerance = 0.0;
  const auto report = run(p, g, options);
  CHECK(report.diagnostics.bound_violations == 0);
  CHECK(report.density.values().minCoeff() >= 0.0);
  CHECK(std::log(report.density.values().maxCoeff()) <=
        report.bounds.log_gamma_max + report.bounds.log_gamma_tilde_max + 1e-10);
}
