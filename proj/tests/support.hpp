#pragma once

#include "lsmfg/problem.hpp"

#include <cmath>

namespace testing {

using lsmfg::ProblemSpec;

// Unstable linear drift with quadratic running cost, built in code so the
// tests do not depend on the config parser.
inline ProblemSpec example1(double congestion) {
  ProblemSpec s;
  s.dim = 1;
  s.horizon = 1.0;
  s.drift = lsmfg::LinearDrift{Eigen::MatrixXd::Constant(1, 1, 1.0)};
  s.cost.state.q = Eigen::MatrixXd::Constant(1, 1, 5.0);
  s.cost.state.target = Eigen::VectorXd::Zero(1);
  s.cost.congestion = congestion;
  s.sigma = Eigen::MatrixXd::Constant(1, 1, 0.1);
  s.b = Eigen::MatrixXd::Identity(1, 1);
  s.r = Eigen::MatrixXd::Identity(1, 1);
  s.initial_density.kind = lsmfg::InitialDensity::Kind::gaussian;
  s.initial_density.mean = Eigen::VectorXd::Zero(1);
  s.initial_density.covariance = Eigen::MatrixXd::Constant(1, 1, 0.2);
  return s;
}

// Planar crowd with an obstacle bump in both costs.
inline ProblemSpec example2(double congestion) {
  ProblemSpec s;
  s.dim = 2;
  s.horizon = 1.0;
  s.drift = lsmfg::ZeroDrift{};
  const Eigen::Vector2d target(0.5, 0.5);
  const lsmfg::GaussianBump obstacle{Eigen::Vector2d(-0.1, -0.1),
                                     0.01 * Eigen::Matrix2d::Identity(), 0.2};
  s.cost.state.q = Eigen::Matrix2d::Identity();
  s.cost.state.target = target;
  s.cost.state.bumps = {obstacle};
  s.cost.congestion = congestion;
  s.terminal_cost.q = 0.8 * Eigen::Matrix2d::Identity();
  s.terminal_cost.target = target;
  s.terminal_cost.bumps = {obstacle};
  s.sigma = 0.5 * Eigen::Matrix2d::Identity();
  s.b = Eigen::Matrix2d::Identity();
  s.r = Eigen::Matrix2d::Identity();
  s.initial_density.kind = lsmfg::InitialDensity::Kind::bump;
  s.initial_density.mean = Eigen::Vector2d(-0.4, -0.4);
  s.initial_density.covariance = 0.02 * Eigen::Matrix2d::Identity();
  return s;
}

// Driftless, costless problem with uniform density: every sweep is trivial.
inline ProblemSpec quiet(int dim, double nu) {
  ProblemSpec s;
  s.dim = dim;
  s.horizon = 1.0;
  s.sigma = std::sqrt(2.0 * nu) * Eigen::MatrixXd::Identity(dim, dim);
  s.b = Eigen::MatrixXd::Identity(dim, dim);
  s.r = Eigen::MatrixXd::Identity(dim, dim);
  return s;
}

}  // namespace testing
