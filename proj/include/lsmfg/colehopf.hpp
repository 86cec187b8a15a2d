#pragma once

#include "lsmfg/errors.hpp"
#include "lsmfg/grid.hpp"
#include "lsmfg/problem.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace lsmfg {

/// Psi at the terminal level: exp(-v_T / lambda). Results below the smallest
/// normal number are clamped to it and counted in `clamps`.
template <typename Scalar = double>
Slice<Scalar> terminal_psi(const Eigen::VectorXd& terminal_cost, double lambda,
                           long* clamps = nullptr) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  const Scalar floor = std::numeric_limits<Scalar>::min();
  Slice<Scalar> psi(terminal_cost.size());
  long count = 0;
  for (Index i = 0; i < psi.size(); ++i) {
    Scalar v = std::exp(-static_cast<Scalar>(terminal_cost[i]) /
                        static_cast<Scalar>(lambda));
    if (!(v >= floor)) {
      v = floor;
      ++count;
    }
    psi[i] = v;
  }
  if (clamps) *clamps += count;
  return psi;
}

template <typename Scalar = double>
Slice<Scalar> terminal_psi(const Problem& problem, const PeriodicGrid& grid,
                           long* clamps = nullptr) {
  return terminal_psi<Scalar>(terminal_cost_slice(problem, grid),
                              problem.lambda(), clamps);
}

/// Psitilde at level 0: m0 / Psi(., 0). Positivity of Psi is a guarantee of
/// the backward scheme; a nonpositive entry is reported as a broken invariant.
template <typename Scalar>
Slice<Scalar> initial_psitilde(const Slice<Scalar>& m0,
                               const Slice<Scalar>& psi_initial) {
  if (m0.size() != psi_initial.size())
    throw std::invalid_argument("initial_psitilde: slice sizes differ");
  for (Index i = 0; i < psi_initial.size(); ++i) {
    if (!(psi_initial[i] > Scalar(0))) {
      std::ostringstream msg;
      msg << "Psi(., 0) is not positive at node " << i << " (value "
          << static_cast<double>(psi_initial[i]) << ")";
      throw InvariantViolation(msg.str());
    }
  }
  return m0.cwiseQuotient(psi_initial);
}

/// M = Psi * Psitilde, pointwise.
template <typename Scalar>
BasicField<Scalar> recover_density(const BasicField<Scalar>& psi,
                                   const BasicField<Scalar>& psitilde) {
  require_same_grid(psi, psitilde, "recover_density");
  return BasicField<Scalar>(psi.grid(),
                            psi.values().cwiseProduct(psitilde.values()));
}

/// v = -lambda ln Psi, pointwise.
template <typename Scalar>
BasicField<Scalar> recover_value(const BasicField<Scalar>& psi, double lambda) {
  if (!(psi.values().array() > Scalar(0)).all())
    throw InvariantViolation("recover_value: Psi must be positive everywhere");
  return BasicField<Scalar>(
      psi.grid(), (-static_cast<Scalar>(lambda) * psi.values().array().log())
                      .matrix());
}

/// a* = gain * grad v with gain = -R^-1 B^T and a periodic central-difference
/// gradient. Returns one field per control component.
template <typename Scalar>
std::vector<BasicField<Scalar>> recover_control(const BasicField<Scalar>& value,
                                                const Eigen::MatrixXd& gain) {
  const auto& g = value.grid();
  if (gain.cols() != g.dim())
    throw std::invalid_argument("recover_control: gain has wrong width");
  const int n = g.dim();
  const Index nodes = g.node_count();
  std::vector<BasicField<Scalar>> control(gain.rows(), BasicField<Scalar>(g));

  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> up(nodes, n),
      down(nodes, n);
  for (Index i = 0; i < nodes; ++i)
    for (int l = 0; l < n; ++l) {
      up(i, l) = g.neighbor(i, l, +1);
      down(i, l) = g.neighbor(i, l, -1);
    }

  Slice<Scalar> grad(n);
  for (int j = 0; j < g.time_levels(); ++j) {
    const auto v = value.slice(j);
    for (Index i = 0; i < nodes; ++i) {
      for (int l = 0; l < n; ++l)
        grad[l] = (v[up(i, l)] - v[down(i, l)]) /
                  static_cast<Scalar>(2.0 * g.dx(l));
      for (Index c = 0; c < gain.rows(); ++c) {
        Scalar a(0);
        for (int l = 0; l < n; ++l)
          a += static_cast<Scalar>(gain(c, l)) * grad[l];
        control[c](i, j) = a;
      }
    }
  }
  return control;
}

template <typename Scalar>
std::vector<BasicField<Scalar>> recover_control(const BasicField<Scalar>& value,
                                                const Problem& problem) {
  return recover_control(value, problem.feedback_gain());
}

}  // namespace lsmfg
