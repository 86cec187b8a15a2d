#include "lsmfg/bounds.hpp"

#include <limits>

namespace lsmfg {

double drift_lipschitz(const AdrCoefficients& c) {
  const auto& g = c.grid;
  double lipschitz = 0.0;
  for (Index i = 0; i < g.node_count(); ++i) {
    double local = 0.0;
    for (int l = 0; l < g.dim(); ++l) {
      const double f = c.drift(i, l);
      const double jump =
          std::max(std::abs(f - c.drift(g.neighbor(i, l, +1), l)),
                   std::abs(f - c.drift(g.neighbor(i, l, -1), l)));
      local += jump / g.dx(l);
    }
    lipschitz = std::max(lipschitz, local);
  }
  return lipschitz;
}

BoundConstants compute_bounds(const AdrCoefficients& c,
                              const Eigen::VectorXd& terminal_cost,
                              const Eigen::VectorXd& m0) {
  if (terminal_cost.size() != c.grid.node_count() ||
      m0.size() != c.grid.node_count())
    throw std::invalid_argument("compute_bounds: slices do not match grid");
  const double horizon = c.grid.horizon();
  const double lambda = c.lambda;

  BoundConstants b;
  b.lipschitz = drift_lipschitz(c);
  b.m0_sup = m0.maxCoeff();
  b.log_gamma_max = -terminal_cost.minCoeff() / lambda;
  const double log_gamma_vt = -terminal_cost.maxCoeff() / lambda;
  const double base_sup = c.base_cost.maxCoeff();
  const double log_m0_sup = std::log(b.m0_sup);

  // First pass with g(x, 0), then widen ||g|| to the implied density cap.
  const double log_min_0 = -horizon * base_sup / lambda + log_gamma_vt;
  const double log_tilde_0 = horizon * b.lipschitz + log_m0_sup - log_min_0;
  b.g_sup = base_sup;
  if (c.congestion > 0.0) {
    const double log_cap = b.log_gamma_max + log_tilde_0;
    b.g_sup += c.congestion * std::exp(log_cap);
  }
  b.log_gamma_min = -horizon * b.g_sup / lambda + log_gamma_vt;
  b.log_gamma_tilde_max =
      b.m0_sup > 0.0
          ? horizon * b.lipschitz + log_m0_sup - b.log_gamma_min
          : -std::numeric_limits<double>::infinity();
  return b;
}

BoundConstants compute_bounds(const Problem& problem, const PeriodicGrid& grid) {
  return compute_bounds(make_coefficients(problem, grid),
                        terminal_cost_slice(problem, grid),
                        initial_density_slice(problem, grid));
}

}  // namespace lsmfg
