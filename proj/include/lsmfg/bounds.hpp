#pragma once

#include "lsmfg/grid.hpp"
#include "lsmfg/problem.hpp"
#include "lsmfg/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace lsmfg {

/// Discrete maximum-principle constants. Lower bounds can fall far below the
/// double range, so every bound is also carried as a logarithm.
struct BoundConstants {
  double log_gamma_min = 0.0;        ///< ln of inf Psi bound
  double log_gamma_max = 0.0;        ///< ln of sup Psi bound
  double log_gamma_tilde_max = 0.0;  ///< ln of sup Psitilde bound
  double g_sup = 0.0;                ///< ||g||_inf used for gamma_min
  double lipschitz = 0.0;            ///< L_f from adjacent-node quotients
  double m0_sup = 0.0;

  double gamma_min() const { return std::exp(log_gamma_min); }
  double gamma_max() const { return std::exp(log_gamma_max); }
  double gamma_tilde_max() const { return std::exp(log_gamma_tilde_max); }
  /// Upper bound on every density iterate, Gamma_max * Gamma~_max.
  double density_cap() const {
    return std::exp(log_gamma_max + log_gamma_tilde_max);
  }
};

/// max_i sum_l max(|f_l(x_i) - f_l(x_i[l+])|, |f_l(x_i) - f_l(x_i[l-])|) / dx_l
double drift_lipschitz(const AdrCoefficients& c);

/// Bounds from the coefficients, the terminal cost samples and the (already
/// normalized) initial density samples.
///
/// ||g||_inf is taken over the nodes and m in [0, cap] with cap computed from
/// a first pass that evaluates g at m = 0; g is affine and nondecreasing in m
/// so the supremum sits at the endpoint.
BoundConstants compute_bounds(const AdrCoefficients& c,
                              const Eigen::VectorXd& terminal_cost,
                              const Eigen::VectorXd& m0);

BoundConstants compute_bounds(const Problem& problem, const PeriodicGrid& grid);

struct BoundReport {
  BoundConstants bounds;
  long psi_below = 0;
  long psi_above = 0;
  long psitilde_negative = 0;
  long psitilde_above = 0;
  long density_above = 0;
  std::string first_violation;

  long violations() const {
    return psi_below + psi_above + psitilde_negative + psitilde_above +
           density_above;
  }
  bool ok() const { return violations() == 0; }
};

/// Relative slack granted to the bound comparisons for rounding in the
/// N_t-step recursions.
inline constexpr double kBoundSlack = 1e-10;

/// Beyond exp(+-kSafeLog) the bound comparisons switch to logarithms.
inline constexpr double kSafeLog = 700.0;

template <typename Scalar>
BoundReport check_bounds(const BasicField<Scalar>& psi,
                         const BasicField<Scalar>& psitilde,
                         const BoundConstants& bounds) {
  require_same_grid(psi, psitilde, "check_bounds");
  BoundReport report;
  report.bounds = bounds;
  const double log_lo = bounds.log_gamma_min + std::log1p(-kBoundSlack);
  const double log_hi = bounds.log_gamma_max + std::log1p(kBoundSlack);
  const double log_tilde_hi =
      bounds.log_gamma_tilde_max + std::log1p(kBoundSlack);
  const double log_m_hi = bounds.log_gamma_max + log_tilde_hi;

  auto note = [&](const char* what, Index node, int level, double value) {
    if (!report.first_violation.empty()) return;
    std::ostringstream msg;
    msg << what << " at node " << node << ", level " << level << " (value "
        << value << ")";
    report.first_violation = msg.str();
  };

  // Linear-space thresholds; comparisons fall back to logarithms only when
  // a threshold sits outside the comfortable double range.
  auto at_least_fn = [](double log_bound) {
    const double linear = std::exp(std::max(log_bound, -kSafeLog));
    return [=](double v) {
      if (log_bound > -kSafeLog) return v >= linear;
      return v >= linear || std::log(v) >= log_bound;
    };
  };
  auto at_most_fn = [](double log_bound) {
    const double linear = std::exp(std::min(log_bound, kSafeLog));
    return [=](double v) {
      if (log_bound < kSafeLog) return v <= linear;
      return v <= linear || std::log(v) <= log_bound;
    };
  };
  const auto psi_lo = at_least_fn(log_lo);
  const auto psi_hi = at_most_fn(log_hi);
  const auto tilde_hi = at_most_fn(log_tilde_hi);
  const auto m_hi = at_most_fn(log_m_hi);

  const auto& g = psi.grid();
  for (int j = 0; j < g.time_levels(); ++j) {
    for (Index i = 0; i < g.node_count(); ++i) {
      const double p = static_cast<double>(psi(i, j));
      const double q = static_cast<double>(psitilde(i, j));
      if (!(p > 0.0 && psi_lo(p))) {
        ++report.psi_below;
        note("Psi below Gamma_min", i, j, p);
      }
      if (!psi_hi(p)) {
        ++report.psi_above;
        note("Psi above Gamma_max", i, j, p);
      }
      if (!(q >= 0.0)) {
        ++report.psitilde_negative;
        note("Psitilde negative", i, j, q);
        continue;
      }
      if (!tilde_hi(q)) {
        ++report.psitilde_above;
        note("Psitilde above its bound", i, j, q);
      }
      if (p > 0.0 && q > 0.0 && !m_hi(p * q) &&
          !(std::log(p) + std::log(q) <= log_m_hi)) {
        ++report.density_above;
        note("M above Gamma_max * Gamma~_max", i, j, p * q);
      }
    }
  }
  return report;
}

template <typename Scalar>
BoundReport check_bounds(const BasicField<Scalar>& psi,
                         const BasicField<Scalar>& psitilde,
                         const Problem& problem) {
  return check_bounds(psi, psitilde, compute_bounds(problem, psi.grid()));
}

}  // namespace lsmfg
