#pragma once

#include "lsmfg/bounds.hpp"
#include "lsmfg/colehopf.hpp"
#include "lsmfg/grid.hpp"
#include "lsmfg/problem.hpp"
#include "lsmfg/schemes.hpp"

#include <chrono>
#include <functional>
#include <limits>
#include <vector>

namespace lsmfg {

/// Policy for the density iterate M^(0) that seeds the running average.
enum class InitialGuess {
  initial_density,  ///< M^(0)(x_i, t_j) = m0(x_i) for every j
  zero,
};

enum class Termination { converged, iteration_cap };

struct IterationRecord {
  int k = 0;            ///< index of the iterate just produced, M^(k)
  double residual = 0;  ///< ||M^(k) - M^(k-1)||_inf
  double backward_seconds = 0;
  double forward_seconds = 0;
  double wall_seconds = 0;  ///< since the start of the run
  double psi_min = 0, psi_max = 0;
  double psitilde_min = 0, psitilde_max = 0;
  long bound_violations = 0;
  double mass_drift = 0;
};

template <typename Scalar = double>
struct SolveOptions {
  double tolerance = 5e-7;
  int max_iterations = 1000;
  InitialGuess initial_guess = InitialGuess::initial_density;
  bool check_bounds = true;
  std::function<void(const IterationRecord&)> on_iteration;
  /// Called with every new density iterate M^(k), k >= 1.
  std::function<void(int, const BasicField<Scalar>&)> on_density;
};

/// M' = (k * M + M_new) / (k + 1): the running mean of k fields extended by
/// one more.
template <typename Scalar>
void accumulate_average(BasicField<Scalar>& m_bar,
                        const BasicField<Scalar>& m_new, int k) {
  require_same_grid(m_bar, m_new, "update_average");
  if (k < 0) throw std::invalid_argument("update_average: k must be >= 0");
  const Scalar weight = Scalar(1) / static_cast<Scalar>(k + 1);
  m_bar.values() =
      (static_cast<Scalar>(k) * weight) * m_bar.values() + weight * m_new.values();
}

template <typename Scalar>
BasicField<Scalar> update_average(BasicField<Scalar> m_bar,
                                  const BasicField<Scalar>& m_new, int k) {
  accumulate_average(m_bar, m_new, k);
  return m_bar;
}

/// max over all nodes and levels of |curr - prev|
template <typename Scalar>
double residual(const BasicField<Scalar>& prev, const BasicField<Scalar>& curr) {
  require_same_grid(prev, curr, "residual");
  return static_cast<double>(
      (curr.values() - prev.values()).cwiseAbs().maxCoeff());
}

struct MassDrift {
  std::vector<double> mass;  ///< per time level
  double max_drift = 0.0;    ///< max_j |mass(j) - mass(0)|
};

template <typename Scalar>
MassDrift mass_drift(const BasicField<Scalar>& m) {
  const auto& g = m.grid();
  MassDrift out;
  out.mass.resize(g.time_levels());
  for (int j = 0; j < g.time_levels(); ++j)
    out.mass[j] = static_cast<double>(m.slice(j).sum()) * g.cell_volume();
  for (double v : out.mass)
    out.max_drift = std::max(out.max_drift, std::abs(v - out.mass.front()));
  return out;
}

/// Working fields of the fictitious-play loop.
template <typename Scalar>
struct IterationState {
  explicit IterationState(const PeriodicGrid& grid)
      : psi(grid), psitilde(grid), m_current(grid), m_previous(grid),
        m_bar(grid) {}

  int k = 0;
  BasicField<Scalar> psi, psitilde;
  BasicField<Scalar> m_current, m_previous;
  BasicField<Scalar> m_bar;  ///< mean of M^(0) .. M^(k)
  double residual = std::numeric_limits<double>::infinity();
  std::vector<IterationRecord> history;
};

struct SolveDiagnostics {
  long bound_violations = 0;
  std::string first_bound_violation;
  std::vector<double> mass_drift;  ///< per iteration
  long clamp_count = 0;
};

template <typename Scalar = double>
struct SolveReport {
  bool converged = false;
  Termination reason = Termination::iteration_cap;
  int iterations = 0;
  double cfl_lhs = 0.0;
  double lambda = 0.0;
  std::vector<IterationRecord> history;
  double total_seconds = 0.0;
  SolveDiagnostics diagnostics;
  BoundConstants bounds;

  BasicField<Scalar> psi, psitilde, density, value;
  std::vector<BasicField<Scalar>> control;

  explicit SolveReport(const PeriodicGrid& grid)
      : psi(grid), psitilde(grid), density(grid), value(grid) {}
};

/// Fictitious play: each round computes the best response (backward sweep)
/// to the running average of all density iterates so far, propagates the
/// density forward, and stops once consecutive iterates agree to within
/// the tolerance or the iteration cap is hit. The guess M^(0) counts as the
/// first iterate.
template <typename Scalar = double>
SolveReport<Scalar> run(const Problem& problem, const PeriodicGrid& grid,
                        const SolveOptions<Scalar>& options = {}) {
  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };
  if (!(options.tolerance >= 0.0))
    throw std::invalid_argument("tolerance must be >= 0");
  if (options.max_iterations < 1)
    throw std::invalid_argument("max_iterations must be >= 1");

  const auto start = clock::now();
  AdrCoefficients coeffs = make_coefficients(problem, grid);
  const double lhs = cfl_lhs(coeffs);
  const AdrScheme<Scalar> scheme(coeffs);  // throws on CFL violation

  SolveReport<Scalar> report(grid);
  report.cfl_lhs = lhs;
  report.lambda = problem.lambda();

  const Eigen::VectorXd vt = terminal_cost_slice(problem, grid);
  const Eigen::VectorXd m0 = initial_density_slice(problem, grid);
  report.bounds = compute_bounds(coeffs, vt, m0);
  const Slice<Scalar> psi_terminal =
      terminal_psi<Scalar>(vt, problem.lambda(), &report.diagnostics.clamp_count);
  const Slice<Scalar> m0_slice = m0.cast<Scalar>();

  IterationState<Scalar> state(grid);
  if (options.initial_guess == InitialGuess::initial_density)
    state.m_previous.values() = m0_slice.replicate(1, grid.time_levels());
  else
    state.m_previous.values().setZero();
  state.m_bar = state.m_previous;

  while (state.k < options.max_iterations) {
    IterationRecord rec;
    SweepDiagnostics<Scalar> back_diag, fwd_diag;

    auto t0 = clock::now();
    scheme.backward(state.m_bar, psi_terminal, state.psi, &back_diag);
    rec.backward_seconds = seconds_since(t0);

    t0 = clock::now();
    const Slice<Scalar> psitilde0 =
        initial_psitilde<Scalar>(m0_slice, state.psi.slice(0));
    scheme.forward(state.m_bar, psitilde0, state.psitilde, &fwd_diag);
    rec.forward_seconds = seconds_since(t0);

    state.m_current.values() =
        state.psi.values().cwiseProduct(state.psitilde.values());
    state.residual = residual(state.m_previous, state.m_current);
    ++state.k;
    accumulate_average(state.m_bar, state.m_current, state.k);

    report.diagnostics.clamp_count += back_diag.clamp_count;
    rec.k = state.k;
    rec.residual = state.residual;
    rec.psi_min = static_cast<double>(back_diag.min);
    rec.psi_max = static_cast<double>(back_diag.max);
    rec.psitilde_min = static_cast<double>(fwd_diag.min);
    rec.psitilde_max = static_cast<double>(fwd_diag.max);
    if (options.check_bounds) {
      const BoundReport br =
          check_bounds(state.psi, state.psitilde, report.bounds);
      rec.bound_violations = br.violations();
      report.diagnostics.bound_violations += br.violations();
      if (report.diagnostics.first_bound_violation.empty() && !br.ok())
        report.diagnostics.first_bound_violation = br.first_violation;
    }
    rec.mass_drift = mass_drift(state.m_current).max_drift;
    report.diagnostics.mass_drift.push_back(rec.mass_drift);
    rec.wall_seconds = seconds_since(start);
    state.history.push_back(rec);
    if (options.on_iteration) options.on_iteration(rec);
    if (options.on_density) options.on_density(state.k, state.m_current);

    if (state.residual <= options.tolerance) {
      report.converged = true;
      report.reason = Termination::converged;
      break;
    }
    std::swap(state.m_previous, state.m_current);
  }

  // After a non-converged exit the newest iterate sits in m_previous.
  const BasicField<Scalar>& newest =
      report.converged ? state.m_current : state.m_previous;
  report.iterations = state.k;
  report.history = std::move(state.history);
  report.psi = state.psi;
  report.psitilde = state.psitilde;
  report.density = newest;
  report.value = recover_value(state.psi, problem.lambda());
  report.control = recover_control(report.value, problem);
  report.total_seconds = seconds_since(start);
  return report;
}

}  // namespace lsmfg
