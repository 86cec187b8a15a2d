#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lsmfg/schemes.hpp"
#include "support.hpp"

#include <cfloat>
#include <cmath>
#include <numbers>
#include <random>

using namespace lsmfg;

namespace {

// Variable drift, cross diffusion, node-dependent cost and congestion on a
// small anisotropic 2D grid.
AdrCoefficients random_coefficients(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5), pos(0.0, 2.0);
  const PeriodicGrid g = build_grid(2, {4, 5}, 20, 1.0);
  AdrCoefficients c{g, Eigen::MatrixXd(g.node_count(), 2), Eigen::MatrixXd(2, 2),
                    0.3, Eigen::VectorXd(g.node_count()), 0.4};
  for (Index i = 0; i < c.drift.size(); ++i) c.drift.data()[i] = u(rng);
  c.nu << 0.01, 0.002, 0.002, 0.015;
  for (Index i = 0; i < g.node_count(); ++i) c.base_cost[i] = pos(rng);
  return c;
}

Field random_field(const PeriodicGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Field f(g);
  for (Index i = 0; i < f.values().size(); ++i) f.values().data()[i] = u(rng);
  return f;
}

}  // namespace

TEST_CASE("stencil sweeps agree with the literal difference quotients") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const AdrCoefficients c = random_coefficients(rng);
    const PeriodicGrid& g = c.grid;
    const Field m_bar = random_field(g, rng);
    const Field edge = random_field(g, rng);
    const AdrScheme<double> scheme(c);
    const double dt = g.dt();

    Field psi(g);
    scheme.backward(m_bar, edge.slice(0), psi);
    for (int j = g.time_steps(); j >= 1; --j)
      for (Index i = 0; i < g.node_count(); ++i) {
        const double rhs = psi(i, j) + dt * (apply_D(c, psi, i, j) +
                                             apply_D2(c, psi, i, j));
        const double expect = rhs / (1.0 + dt / c.lambda * c.reaction(i, m_bar(i, j)));
        CHECK(psi(i, j - 1) == doctest::Approx(expect).epsilon(1e-12));
      }

    Field tilde(g);
    scheme.forward(m_bar, edge.slice(1), tilde);
    for (int j = 0; j < g.time_steps(); ++j)
      for (Index i = 0; i < g.node_count(); ++i) {
        const double rhs = tilde(i, j) + dt * (apply_Dtilde(c, tilde, i, j) +
                                               apply_D2tilde(c, tilde, i, j));
        const double expect = rhs / (1.0 + dt / c.lambda * c.reaction(i, m_bar(i, j)));
        CHECK(tilde(i, j + 1) == doctest::Approx(expect).epsilon(1e-12));
      }
  }
}

TEST_CASE("double and long double sweeps agree") {
  std::mt19937_64 rng(11);
  const AdrCoefficients c = random_coefficients(rng);
  const Field m_bar = random_field(c.grid, rng);
  const Field edge = random_field(c.grid, rng);
  const Field psi = backward_sweep<double>(c, m_bar, edge.slice(0));
  const BasicField<long double> m_bar_l(c.grid, m_bar.values().cast<long double>());
  const Slice<long double> edge_l = edge.slice(0).cast<long double>();
  const auto psi_l = backward_sweep<long double>(c, m_bar_l, edge_l);
  const double diff = static_cast<double>(
      (psi_l.values() - psi.values().cast<long double>()).cwiseAbs().maxCoeff());
  CHECK(diff <= 1e-13 * psi.values().cwiseAbs().maxCoeff());
}

TEST_CASE("constant reaction gives the closed-form geometric decay") {
  const double cost = 2.0, lambda = 0.5;
  const PeriodicGrid g = build_grid(1, {8}, 40, 1.0);
  const AdrCoefficients c = constant_coefficients(
      g, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 0.01), lambda, cost);
  const Field m_bar(g);
  const Field psi = backward_sweep<double>(c, m_bar, Slice<double>::Ones(g.node_count()));
  const Field tilde = forward_sweep<double>(c, m_bar, Slice<double>::Ones(g.node_count()));
  const double factor = 1.0 + g.dt() * cost / lambda;
  for (int j = 0; j < g.time_levels(); ++j) {
    const double back = std::pow(factor, -(g.time_steps() - j));
    const double fwd = std::pow(factor, -j);
    CHECK(psi.slice(j).minCoeff() == doctest::Approx(back).epsilon(1e-13));
    CHECK(psi.slice(j).maxCoeff() == doctest::Approx(back).epsilon(1e-13));
    CHECK(tilde.slice(j).minCoeff() == doctest::Approx(fwd).epsilon(1e-13));
    CHECK(tilde.slice(j).maxCoeff() == doctest::Approx(fwd).epsilon(1e-13));
  }
}

TEST_CASE("congestion enters the divisor through the old-level average") {
  const PeriodicGrid g = build_grid(1, {2}, 2, 1.0);
  AdrCoefficients c = constant_coefficients(
      g, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1), 1.0, 0.0);
  c.congestion = 1.0;
  Field m_bar(g);
  m_bar.slice(0).setConstant(1.0);  // used by the forward step 0 -> 1
  m_bar.slice(2).setConstant(3.0);  // used by the backward step 2 -> 1
  const Slice<double> ones = Slice<double>::Ones(g.node_count());
  const Field psi = backward_sweep<double>(c, m_bar, ones);
  const Field tilde = forward_sweep<double>(c, m_bar, ones);
  CHECK(psi(0, 1) == doctest::Approx(1.0 / (1.0 + 0.5 * 3.0)));
  CHECK(psi(0, 0) == doctest::Approx(psi(0, 1) / (1.0 + 0.0)));
  CHECK(tilde(0, 1) == doctest::Approx(1.0 / (1.0 + 0.5 * 1.0)));
}

TEST_CASE("unstable steps are refused") {
  const PeriodicGrid g = build_grid(1, {50}, 10, 1.0);
  const AdrCoefficients c = constant_coefficients(
      g, Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 0.01), 1.0, 0.0);
  CHECK(cfl_lhs(c) == doctest::Approx(0.1 * (50.0 + 2.0 * 0.01 * 2500.0)));
  try {
    AdrScheme<double> scheme(c);
    FAIL("expected a CFL violation");
  } catch (const CflViolation& e) {
    CHECK(e.lhs() == doctest::Approx(10.0));
  }

  const PeriodicGrid fine = build_grid(2, {4, 4}, 100, 1.0);
  Eigen::MatrixXd nu(2, 2);
  nu << 0.01, 0.02, 0.02, 0.01;
  CHECK_THROWS_AS(AdrScheme<double>(constant_coefficients(
                      fine, Eigen::VectorXd::Zero(2), nu, 1.0, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("under CFL the backward stencil is a nonnegative averaging") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    AdrCoefficients c = random_coefficients(rng);
    c.nu(0, 1) = c.nu(1, 0) = 0.0;
    const auto s = make_stencil<double>(c, Direction::backward);
    CHECK(s.self_coeff.minCoeff() >= 0.0);
    CHECK(s.plus_coeff.minCoeff() >= 0.0);
    CHECK(s.minus_coeff.minCoeff() >= 0.0);
    for (Index i = 0; i < c.grid.node_count(); ++i)
      CHECK(s.weight_sum(i) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("backward sweep is monotone in its terminal data") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    AdrCoefficients c = random_coefficients(rng);
    c.nu(0, 1) = c.nu(1, 0) = 0.0;
    const Field m_bar = random_field(c.grid, rng);
    const Field low = random_field(c.grid, rng);
    Slice<double> high = low.slice(0);
    high += random_field(c.grid, rng).slice(0);
    const Field a = backward_sweep<double>(c, m_bar, low.slice(0));
    const Field b = backward_sweep<double>(c, m_bar, high);
    CHECK((b.values() - a.values()).minCoeff() >= 0.0);
    CHECK(a.values().minCoeff() > 0.0);
  }
}

TEST_CASE("forward sweep keeps nonnegative data nonnegative for one-signed drift") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (double sign : {1.0, -1.0}) {
    AdrCoefficients c = random_coefficients(rng);
    for (Index i = 0; i < c.drift.size(); ++i) c.drift.data()[i] = sign * u(rng);
    c.nu(0, 1) = c.nu(1, 0) = 0.0;
    const Field m_bar = random_field(c.grid, rng);
    Slice<double> init = random_field(c.grid, rng).slice(0);
    init[3] = 0.0;
    const Field tilde = forward_sweep<double>(c, m_bar, init);
    CHECK(tilde.values().minCoeff() >= 0.0);
  }
}

TEST_CASE("conservative forward sweep preserves mass without reaction") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (double sign : {0.0, 1.0, -1.0}) {
    AdrCoefficients c = random_coefficients(rng);
    for (Index i = 0; i < c.drift.size(); ++i) c.drift.data()[i] = sign * u(rng);
    c.base_cost.setZero();
    c.congestion = 0.0;
    const Field m_bar(c.grid);
    const Slice<double> init = random_field(c.grid, rng).slice(0);
    const Field tilde = forward_sweep<double>(c, m_bar, init);
    for (int j = 0; j < c.grid.time_levels(); ++j)
      CHECK(tilde.slice(j).sum() == doctest::Approx(init.sum()).epsilon(1e-13));
  }
}

TEST_CASE("upwind direction follows the drift sign, with sgn(0) = +1") {
  const PeriodicGrid g = build_grid(1, {4}, 10, 1.0);
  AdrCoefficients c = constant_coefficients(
      g, Eigen::VectorXd::Constant(1, 0.0), Eigen::MatrixXd::Constant(1, 1, 0.01), 1.0, 0.0);
  c.drift << 0.5, -0.5, 0.0, 0.25, -0.25, 0.0, 0.1, -0.1;
  const double alpha = g.dt() / g.dx(0);
  const double diff = g.dt() / (g.dx(0) * g.dx(0)) * 0.01;

  const auto back = make_stencil<double>(c, Direction::backward);
  CHECK(back.plus_coeff(0, 0) == doctest::Approx(diff + alpha * 0.5));
  CHECK(back.minus_coeff(0, 0) == doctest::Approx(diff));
  CHECK(back.plus_coeff(1, 0) == doctest::Approx(diff));
  CHECK(back.minus_coeff(1, 0) == doctest::Approx(diff + alpha * 0.5));

  const auto fwd = make_stencil<double>(c, Direction::forward);
  // f_3 >= 0 pulls flux from node 2, f_4 < 0 from node 5.
  CHECK(fwd.minus_coeff(3, 0) == doctest::Approx(diff + alpha * 0.0));
  CHECK(fwd.plus_coeff(4, 0) == doctest::Approx(diff - alpha * 0.0));
  CHECK(fwd.minus_coeff(2, 0) == doctest::Approx(diff + alpha * -0.5));
  CHECK(fwd.plus_coeff(2, 0) == doctest::Approx(diff));
  CHECK(fwd.self_coeff[0] == doctest::Approx(1.0 - alpha * 0.5 - 2.0 * diff));

  c.flip_upwind = true;
  const auto flipped = make_stencil<double>(c, Direction::backward);
  CHECK(flipped.plus_coeff(0, 0) == doctest::Approx(diff));
  CHECK(flipped.minus_coeff(0, 0) == doctest::Approx(diff + alpha * 0.5));
}

TEST_CASE("backward underflow is clamped and counted") {
  const PeriodicGrid g = build_grid(1, {4}, 200, 1.0);
  const AdrCoefficients c = constant_coefficients(
      g, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1), 1e-3, 10.0);
  SweepDiagnostics<double> diag;
  const Field psi = backward_sweep<double>(
      c, Field(g), Slice<double>::Ones(g.node_count()), &diag);
  CHECK(diag.clamp_count > 0);
  CHECK(psi.values().minCoeff() == DBL_MIN);
  CHECK(diag.min == DBL_MIN);
  CHECK(diag.max == 1.0);
}

TEST_CASE("sweep inputs are validated") {
  const PeriodicGrid g = build_grid(1, {4}, 10, 1.0);
  const AdrCoefficients c = constant_coefficients(
      g, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 0.01), 1.0, 0.0);
  const AdrScheme<double> scheme(c);
  Field out(g), m_bar(g);
  const Slice<double> ones = Slice<double>::Ones(g.node_count());
  m_bar(2, 3) = -1.0;
  CHECK_THROWS_AS(scheme.backward(m_bar, ones, out), std::invalid_argument);
  m_bar(2, 3) = 0.0;
  Slice<double> negative = ones;
  negative[1] = -0.1;
  CHECK_THROWS_AS(scheme.forward(m_bar, negative, out), std::invalid_argument);
  CHECK_THROWS_AS(scheme.backward(m_bar, Slice<double>::Ones(3), out),
                  std::invalid_argument);
  Field other(build_grid(1, {4}, 11, 1.0));
  CHECK_THROWS_AS(scheme.backward(m_bar, ones, other), std::invalid_argument);
  Slice<double> bad = ones;
  bad[0] = std::nan("");
  CHECK_THROWS_AS(scheme.backward(m_bar, bad, out), InvariantViolation);
}

TEST_CASE("coefficients are sampled from the problem") {
  const Problem p(testing::example1(0.1));
  const PeriodicGrid g = build_grid(1, {10}, 100, 1.0);
  const AdrCoefficients c = make_coefficients(p, g);
  for (Index i = 0; i < g.node_count(); ++i) {
    const double x = g.coordinate(i, 0);
    CHECK(c.drift(i, 0) == doctest::Approx(x));
    CHECK(c.base_cost[i] == doctest::Approx(5.0 * x * x));
  }
  CHECK(c.congestion == 0.1);
  CHECK(c.lambda == doctest::Approx(0.005));
  CHECK_THROWS_AS(make_coefficients(p, build_grid(2, {3, 3}, 10, 1.0)),
                  std::invalid_argument);
}
