#pragma once

#include "lsmfg/grid.hpp"

#include <Eigen/Dense>

#include <variant>
#include <vector>

namespace lsmfg {

/// height * exp(-(x - center)^T shape^-1 (x - center))
struct GaussianBump {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;
  double height = 0.0;
};

/// State-dependent cost family shared by the running cost and the terminal
/// cost: (x - target)^T Q (x - target) + sum of Gaussian bumps + offset.
/// An empty Q disables the quadratic term.
struct StateCost {
  Eigen::MatrixXd q;
  Eigen::VectorXd target;
  std::vector<GaussianBump> bumps;
  double offset = 0.0;

  double operator()(const Eigen::VectorXd& x) const;
};

/// Running cost g(x, m) = state(x) + congestion * m.
struct CostSpec {
  StateCost state;
  double congestion = 0.0;

  double operator()(const Eigen::VectorXd& x, double m) const;
};

struct ZeroDrift {};
struct LinearDrift {
  Eigen::MatrixXd a;  ///< f(x) = A x
};
/// Drift given at every node of one particular grid (rows = nodes, cols = n).
struct TabulatedDrift {
  Eigen::MatrixXd values;
};
using DriftSpec = std::variant<ZeroDrift, LinearDrift, TabulatedDrift>;

struct InitialDensity {
  enum class Kind {
    uniform,   ///< 2^-n
    gaussian,  ///< normal pdf with the given mean and covariance
    bump,      ///< exp(-(x - mean)^T covariance^-1 (x - mean)), unnormalized
  };
  Kind kind = Kind::uniform;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  double operator()(const Eigen::VectorXd& x) const;
};

/// Raw problem data as supplied by the user.
struct ProblemSpec {
  int dim = 1;
  double horizon = 1.0;
  DriftSpec drift = ZeroDrift{};
  CostSpec cost;
  Eigen::MatrixXd sigma;  ///< n x n
  Eigen::MatrixXd b;      ///< n x m
  Eigen::MatrixXd r;      ///< m x m, symmetric positive definite
  StateCost terminal_cost;
  InitialDensity initial_density;
  /// Rescale the sampled initial density so that its discrete mass is 1.
  bool normalize_density = true;
};

/// nu = 1/2 sigma^T sigma
Eigen::MatrixXd diffusion_matrix(const Eigen::MatrixXd& sigma);

/// The unique lambda > 0 with lambda * B R^-1 B^T = 1/2 sigma^T sigma,
/// verified entrywise to 1e-10 relative. Throws NotLinearizable otherwise.
double derive_lambda(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& b,
                     const Eigen::MatrixXd& r);

/// A validated problem: immutable, with nu and lambda derived.
class Problem {
 public:
  explicit Problem(ProblemSpec spec);

  const ProblemSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  int control_dim() const { return static_cast<int>(spec_.b.cols()); }
  double horizon() const { return spec_.horizon; }
  double lambda() const { return lambda_; }
  const Eigen::MatrixXd& nu() const { return nu_; }
  /// -R^-1 B^T, maps a value gradient to the optimal control.
  const Eigen::MatrixXd& feedback_gain() const { return gain_; }

  Eigen::VectorXd drift(const Eigen::VectorXd& x) const;
  Eigen::VectorXd drift_at(const PeriodicGrid& grid, Index node) const;
  double cost(const Eigen::VectorXd& x, double m) const;
  double terminal_cost(const Eigen::VectorXd& x) const;
  double initial_density(const Eigen::VectorXd& x) const;

 private:
  ProblemSpec spec_;
  Eigen::MatrixXd nu_;
  Eigen::MatrixXd gain_;
  double lambda_ = 0.0;
};

/// m0 sampled on the grid nodes; renormalized to unit discrete mass when the
/// problem asks for it, otherwise checked to have mass 1 within 1e-6.
Eigen::VectorXd initial_density_slice(const Problem& problem,
                                      const PeriodicGrid& grid);

/// v_T sampled on the grid nodes.
Eigen::VectorXd terminal_cost_slice(const Problem& problem,
                                    const PeriodicGrid& grid);

/// Per-dimension sup over nodes of |f_l(x_i)|.
Eigen::VectorXd drift_sup(const Problem& problem, const PeriodicGrid& grid);

struct CflReport {
  double lhs = 0.0;
  bool satisfied = false;
};

/// dt * sum_l ( sup|f_l| / dx_l + 2 nu_ll / dx_l^2 )
double cfl_lhs(const Eigen::VectorXd& sup_drift, const Eigen::MatrixXd& nu,
               std::span<const double> dx, double dt);

CflReport check_cfl(const Problem& problem, const PeriodicGrid& grid);

struct TimeStep {
  double dt = 0.0;
  int time_steps = 0;
};

/// Largest dt with CFL left-hand side <= target that divides the horizon
/// into an integer number of steps.
TimeStep max_dt_for_target(const Problem& problem,
                           const std::vector<int>& partitions, double target);

/// Same rule given the raw CFL ingredients.
TimeStep max_dt_for_target(const Eigen::VectorXd& sup_drift,
                           const Eigen::MatrixXd& nu,
                           std::span<const double> dx, double horizon,
                           double target);

}  // namespace lsmfg
