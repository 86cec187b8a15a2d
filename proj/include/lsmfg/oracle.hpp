#pragma once

#include "lsmfg/fictitious.hpp"
#include "lsmfg/grid.hpp"
#include "lsmfg/problem.hpp"
#include "lsmfg/schemes.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace lsmfg {

/// Exact solution of a constant-coefficient linear advection-diffusion-
/// reaction equation on the periodic grid, by discrete Fourier expansion.
///
/// Forward:  u_t = -f . grad u + sum_l nu_l u_{x_l x_l} - (g / lambda) u
/// Backward: the same equation for Psi run in reversed time s = T - t,
///           Psi_s = +f . grad Psi + sum_l nu_l Psi_{x_l x_l} - (g/lambda) Psi
///
/// Mode k (wavenumber pi k on the period-2 domain) is advanced by the phase
/// exp(-/+ i pi k.f tau), the decay exp(-sum_l nu_l pi^2 k_l^2 tau), and the
/// reaction factor exp(-g tau / lambda). The Nyquist mode keeps only its real
/// part.
Eigen::VectorXd fourier_adr_solution(const PeriodicGrid& grid,
                                     const Eigen::VectorXd& drift,
                                     const Eigen::VectorXd& nu_diagonal,
                                     double reaction, double lambda,
                                     const Eigen::VectorXd& data, double tau,
                                     Direction direction);

/// Same, with coefficients taken from an operator that must be constant:
/// uniform drift, diagonal nu, uniform base cost and no congestion term.
Eigen::VectorXd fourier_adr_solution(const AdrCoefficients& c,
                                     const Eigen::VectorXd& data, double tau,
                                     Direction direction);

/// Node subsampling of a field onto a nested coarser grid: every partition
/// count and the step count of `coarse` must divide those of `fine`.
Field downsample(const Field& fine, const PeriodicGrid& coarse);

/// Multilinear (periodic in space, linear in time) interpolation of `field`
/// at the nodes and levels of `target`. Coincident nodes are copied exactly.
Field resample(const Field& field, const PeriodicGrid& target);

/// How the time step of a study grid is chosen.
struct TimeRule {
  std::optional<int> time_steps;  ///< fixed N_t
  double cfl_target = 0.5;        ///< otherwise dt from this CFL target
};

/// Trigonometric interpolation in space (the periodic band-limited
/// interpolant of each time slice) and cubic Lagrange interpolation in time.
/// Far more accurate than `resample` on smooth, well-resolved fields; the
/// refinement studies compare against the reference this way.
Field resample_spectral(const Field& field, const PeriodicGrid& target);

PeriodicGrid make_grid(const Problem& problem, const std::vector<int>& partitions,
                       const TimeRule& rule);

/// Density of a full solve after `iterations` fictitious-play rounds on a
/// fine grid (tolerance 0: the run stops early only at an exact fixed point).
Field reference_solution(const Problem& problem, const PeriodicGrid& fine,
                         int iterations,
                         InitialGuess guess = InitialGuess::initial_density);

struct LadderPoint {
  double dx = 0.0;
  double dt = 0.0;
  double error = 0.0;
  double runtime = 0.0;  ///< seconds
};

struct OrderFit {
  double slope = 0.0;
  double intercept = 0.0;
};

struct RefinementLadder {
  std::vector<LadderPoint> points;
  OrderFit fit;
};

/// Least-squares slope of log(error) against log(dx). Needs at least three
/// points, strictly decreasing dx and positive finite errors.
OrderFit estimate_order(const std::vector<LadderPoint>& points);

/// Least-squares slope and intercept of y against x.
OrderFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct DxStudySpec {
  std::vector<std::vector<int>> ladder;  ///< partitions per ladder point
  std::vector<int> reference_partitions;
  int reference_iterations = 1000;
  int iterations = 1000;
  TimeRule time_rule;
  InitialGuess guess = InitialGuess::initial_density;
};

/// Error of each ladder solution against a finer reference (carried over by
/// resample_spectral), sup over all coarse nodes and levels, plus the fitted
/// order. Ladder points must be
/// strictly coarser than the reference in every dimension.
RefinementLadder sweep_dx(const Problem& problem, const DxStudySpec& spec);

struct KStudyPoint {
  int k = 0;
  double error = 0.0;
};

struct KStudySpec {
  std::vector<int> partitions;
  std::vector<int> k_list;  ///< strictly increasing
  std::vector<int> reference_partitions;
  int reference_iterations = 1000;
  TimeRule time_rule;
  InitialGuess guess = InitialGuess::initial_density;
};

/// Error of M^(k) against the reference for each requested k. When the study
/// grid equals the reference grid and the reference iteration count covers
/// the list, one run serves both.
std::vector<KStudyPoint> sweep_k(const Problem& problem, const KStudySpec& spec);

void write_ladder_csv(std::ostream& out, const RefinementLadder& ladder);
void write_k_study_csv(std::ostream& out, const std::vector<KStudyPoint>& pts);

}  // namespace lsmfg
