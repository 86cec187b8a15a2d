#pragma once

#include "lsmfg/oracle.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace lsmfg {

/// Smooth positive test data built from a handful of low Fourier modes, so
/// that its grid samples are represented exactly by the discrete expansion.
double band_limited_profile(const Eigen::VectorXd& x);

/// One constant-coefficient operator checked against the Fourier oracle.
struct OracleCase {
  Eigen::VectorXd drift;        ///< per dimension
  Eigen::VectorXd nu_diagonal;  ///< per dimension
  double reaction = 0.0;
  double lambda = 1.0;
  double horizon = 0.5;
  double cfl_target = 0.5;
  bool flip_upwind = false;
};

struct OraclePoint {
  int partitions = 0;
  double dx = 0.0;
  double dt = 0.0;
  double error = 0.0;  ///< sup over nodes and levels
};

struct OracleLadder {
  std::vector<OraclePoint> points;
  double order = 0.0;  ///< fitted slope of log(error) against log(dx + dt)
};

/// Sup error of one sweep (both the sweep and the oracle start from the
/// sampled band-limited profile) on the given grid.
double oracle_error(const OracleCase& oc, const PeriodicGrid& grid,
                    Direction direction);

/// The same on a ladder of uniform partition counts, with the fitted order.
OracleLadder oracle_ladder(const OracleCase& oc,
                           const std::vector<int>& partitions,
                           Direction direction);

/// Draw of the randomized bound campaign: unstable/stable linear drift,
/// quadratic cost, congestion, scalar noise and a Gaussian initial density
/// on a random CFL-satisfying 1D grid.
struct RandomCase {
  ProblemSpec spec;
  std::vector<int> partitions;
  double cfl_target = 0.5;
};

/// Drift slope A is drawn from [drift_min, 2].
RandomCase random_case(std::mt19937_64& rng, double drift_min = -2.0);

struct CampaignResult {
  int problems = 0;
  long violations = 0;
  int failed_problems = 0;
  std::string first_failure;
};

/// Runs `iterations` fictitious-play rounds on each of `count` random cases
/// and checks the bounds after every round.
CampaignResult bound_campaign(int count, std::uint64_t seed, int iterations = 5,
                              double drift_min = -2.0);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationOptions {
  int campaign_size = 100;
  std::uint64_t seed = 20240607;
  bool flip_upwind = false;  ///< mutation check: the suite must fail
};

/// The oracle suite behind the `validate` command.
std::vector<CheckResult> run_validation(const ValidationOptions& options);

}  // namespace lsmfg
