#pragma once

#include "lsmfg/errors.hpp"
#include "lsmfg/grid.hpp"
#include "lsmfg/problem.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

namespace lsmfg {

/// Coefficients of the two linear advection-diffusion-reaction equations on
/// one grid. The reaction is affine in the density for every supported cost
/// family: g(x_i, m) = base_cost_i + congestion * m.
struct AdrCoefficients {
  PeriodicGrid grid;
  Eigen::MatrixXd drift;  ///< nodes x n, f_l(x_i)
  Eigen::MatrixXd nu;     ///< n x n
  double lambda = 1.0;
  Eigen::VectorXd base_cost;  ///< g(x_i, 0)
  double congestion = 0.0;
  /// Mutation hook for the validation suite: upwind from the wrong side.
  bool flip_upwind = false;

  double reaction(Index node, double m) const {
    return base_cost[node] + congestion * m;
  }
};

AdrCoefficients make_coefficients(const Problem& problem,
                                  const PeriodicGrid& grid);

/// Constant-coefficient operator, mostly for oracle comparisons.
AdrCoefficients constant_coefficients(const PeriodicGrid& grid,
                                      const Eigen::VectorXd& drift,
                                      const Eigen::MatrixXd& nu, double lambda,
                                      double reaction);

double cfl_lhs(const AdrCoefficients& c);

/// Throws CflViolation unless the CFL left-hand side is < 1, and
/// std::invalid_argument when off-diagonal diffusion is not dominated by the
/// diagonal: dt * sum_{k != l} |nu_lk| / (dx_l dx_k) <= dt * nu_ll / dx_l^2.
void require_stable(const AdrCoefficients& c);

/// sgn with sgn(0) = +1; selects the upwind branch of the flux difference.
inline bool upwind_from_left(double f) { return f >= 0.0; }

// Difference quotients, evaluated literally. The sweeps use the equivalent
// precomputed stencil form; these stay as an independent route for tests.

/// Upwind advection quotient of the backward (non-conservative) equation.
template <typename Scalar>
Scalar apply_D(const AdrCoefficients& c, const BasicField<Scalar>& psi,
               Index node, int level) {
  const auto& g = c.grid;
  Scalar sum(0);
  for (int l = 0; l < g.dim(); ++l) {
    const Scalar f = static_cast<Scalar>(c.drift(node, l));
    const Scalar h = static_cast<Scalar>(g.dx(l));
    const Scalar self = psi(node, level);
    const Scalar up = psi(g.neighbor(node, l, +1), level);
    const Scalar down = psi(g.neighbor(node, l, -1), level);
    if (upwind_from_left(c.drift(node, l)))
      sum += f * (up - self) / h;
    else
      sum += f * (self - down) / h;
  }
  return sum;
}

/// Upwind flux-difference quotient of the forward (conservative) equation.
template <typename Scalar>
Scalar apply_Dtilde(const AdrCoefficients& c, const BasicField<Scalar>& u,
                    Index node, int level) {
  const auto& g = c.grid;
  Scalar sum(0);
  for (int l = 0; l < g.dim(); ++l) {
    const Index up = g.neighbor(node, l, +1);
    const Index down = g.neighbor(node, l, -1);
    const Scalar h = static_cast<Scalar>(g.dx(l));
    const Scalar flux = static_cast<Scalar>(c.drift(node, l)) * u(node, level);
    if (upwind_from_left(c.drift(node, l)))
      sum -= (flux - static_cast<Scalar>(c.drift(down, l)) * u(down, level)) / h;
    else
      sum -= (static_cast<Scalar>(c.drift(up, l)) * u(up, level) - flux) / h;
  }
  return sum;
}

/// Central second-difference quotient Tr(nu D^2). Mixed terms use the
/// four-point cross stencil divided by 4 dx_l dx_k.
template <typename Scalar>
Scalar apply_D2(const AdrCoefficients& c, const BasicField<Scalar>& u,
                Index node, int level) {
  const auto& g = c.grid;
  Scalar sum(0);
  for (int a = 0; a < g.dim(); ++a) {
    for (int b = 0; b < g.dim(); ++b) {
      const Scalar w = static_cast<Scalar>(c.nu(a, b));
      if (w == Scalar(0)) continue;
      const Scalar ha = static_cast<Scalar>(g.dx(a));
      const Scalar hb = static_cast<Scalar>(g.dx(b));
      if (a == b) {
        sum += w *
               (u(g.neighbor(node, a, +1), level) - Scalar(2) * u(node, level) +
                u(g.neighbor(node, a, -1), level)) /
               (ha * ha);
      } else {
        const Index pp = g.neighbor(g.neighbor(node, a, +1), b, +1);
        const Index pm = g.neighbor(g.neighbor(node, a, +1), b, -1);
        const Index mp = g.neighbor(g.neighbor(node, a, -1), b, +1);
        const Index mm = g.neighbor(g.neighbor(node, a, -1), b, -1);
        sum += w * (u(pp, level) - u(pm, level) - u(mp, level) + u(mm, level)) /
               (Scalar(4) * ha * hb);
      }
    }
  }
  return sum;
}

/// The diffusion operator is self-adjoint, so the forward equation reuses it.
template <typename Scalar>
Scalar apply_D2tilde(const AdrCoefficients& c, const BasicField<Scalar>& u,
                     Index node, int level) {
  return apply_D2(c, u, node, level);
}

/// Explicit one-step update weights at every node, before division by the
/// reaction divisor 1 + (dt / lambda) g(x_i, Mbar_ij).
template <typename Scalar>
struct StencilCoefficients {
  using Table = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using IndexTable = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>;

  struct CrossTerm {
    Scalar weight;  ///< multiplies (u_pp - u_pm - u_mp + u_mm)
    IndexTable corners;  ///< nodes x 4: pp, pm, mp, mm
  };

  Slice<Scalar> self_coeff;
  Table plus_coeff;   ///< nodes x n, weight of the +1 neighbor
  Table minus_coeff;  ///< nodes x n, weight of the -1 neighbor
  IndexTable plus_node;
  IndexTable minus_node;
  std::vector<CrossTerm> cross;

  Scalar weight_sum(Index node) const {
    return self_coeff[node] + plus_coeff.row(node).sum() +
           minus_coeff.row(node).sum();
  }
};

enum class Direction { forward, backward };

template <typename Scalar>
StencilCoefficients<Scalar> make_stencil(const AdrCoefficients& c,
                                         Direction direction) {
  const auto& g = c.grid;
  const Index nodes = g.node_count();
  const int n = g.dim();
  const double dt = g.dt();

  StencilCoefficients<Scalar> s;
  s.self_coeff.setOnes(nodes);
  s.plus_coeff.resize(nodes, n);
  s.minus_coeff.resize(nodes, n);
  s.plus_node.resize(nodes, n);
  s.minus_node.resize(nodes, n);

  for (int l = 0; l < n; ++l) {
    const double alpha = dt / g.dx(l);
    const double beta = dt / (g.dx(l) * g.dx(l));
    const double diffusion = beta * c.nu(l, l);
    for (Index i = 0; i < nodes; ++i) {
      const Index up = g.neighbor(i, l, +1);
      const Index down = g.neighbor(i, l, -1);
      s.plus_node(i, l) = up;
      s.minus_node(i, l) = down;
      const double f = c.drift(i, l);
      double plus = diffusion;
      double minus = diffusion;
      const bool positive = upwind_from_left(f) != c.flip_upwind;
      if (direction == Direction::backward) {
        (positive ? plus : minus) += alpha * std::abs(f);
      } else if (positive) {
        minus += alpha * c.drift(down, l);
      } else {
        plus -= alpha * c.drift(up, l);
      }
      s.plus_coeff(i, l) = static_cast<Scalar>(plus);
      s.minus_coeff(i, l) = static_cast<Scalar>(minus);
      s.self_coeff[i] -= static_cast<Scalar>(alpha * std::abs(f) + 2.0 * diffusion);
    }
  }

  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double w = c.nu(a, b) + c.nu(b, a);
      if (w == 0.0) continue;
      typename StencilCoefficients<Scalar>::CrossTerm term;
      term.weight = static_cast<Scalar>(dt * w / (4.0 * g.dx(a) * g.dx(b)));
      term.corners.resize(nodes, 4);
      for (Index i = 0; i < nodes; ++i) {
        term.corners(i, 0) = g.neighbor(g.neighbor(i, a, +1), b, +1);
        term.corners(i, 1) = g.neighbor(g.neighbor(i, a, +1), b, -1);
        term.corners(i, 2) = g.neighbor(g.neighbor(i, a, -1), b, +1);
        term.corners(i, 3) = g.neighbor(g.neighbor(i, a, -1), b, -1);
      }
      s.cross.push_back(std::move(term));
    }
  }
  return s;
}

template <typename Scalar>
struct SweepDiagnostics {
  Scalar min = std::numeric_limits<Scalar>::infinity();
  Scalar max = -std::numeric_limits<Scalar>::infinity();
  long clamp_count = 0;
};

/// Explicit upwind / central / nonstandard-reaction scheme for the pair of
/// linear equations on one grid. Construction validates stability; the
/// stencils are built once and reused by every sweep.
template <typename Scalar>
class AdrScheme {
 public:
  explicit AdrScheme(AdrCoefficients coefficients)
      : c_(std::move(coefficients)) {
    require_stable(c_);
    backward_ = make_stencil<Scalar>(c_, Direction::backward);
    forward_ = make_stencil<Scalar>(c_, Direction::forward);
  }

  const AdrCoefficients& coefficients() const { return c_; }
  const PeriodicGrid& grid() const { return c_.grid; }
  const StencilCoefficients<Scalar>& backward_stencil() const {
    return backward_;
  }
  const StencilCoefficients<Scalar>& forward_stencil() const {
    return forward_;
  }

  /// Fills psi from its terminal slice down to level 0. Values that
  /// underflow below the smallest normal number are clamped to it.
  void backward(const BasicField<Scalar>& m_bar, const Slice<Scalar>& terminal,
                BasicField<Scalar>& psi,
                SweepDiagnostics<Scalar>* diag = nullptr) const {
    check_inputs(m_bar, terminal, psi, "backward sweep");
    const int nt = grid().time_steps();
    psi.slice(nt) = terminal;
    long clamps = 0;
    for (int j = nt; j >= 1; --j) {
      clamps += step(backward_, m_bar, j, psi.values().col(j).data(),
                     psi.values().col(j - 1).data(), true);
      check_finite(psi, j - 1, "backward sweep");
    }
    summarize(psi, clamps, diag);
  }

  /// Fills psitilde from its initial slice up to level N_t.
  void forward(const BasicField<Scalar>& m_bar, const Slice<Scalar>& initial,
               BasicField<Scalar>& psitilde,
               SweepDiagnostics<Scalar>* diag = nullptr) const {
    check_inputs(m_bar, initial, psitilde, "forward sweep");
    if ((initial.array() < Scalar(0)).any())
      throw std::invalid_argument("forward sweep: initial data must be >= 0");
    psitilde.slice(0) = initial;
    const int nt = grid().time_steps();
    for (int j = 0; j < nt; ++j) {
      step(forward_, m_bar, j, psitilde.values().col(j).data(),
           psitilde.values().col(j + 1).data(), false);
      check_finite(psitilde, j + 1, "forward sweep");
    }
    summarize(psitilde, 0, diag);
  }

 private:
  // One explicit level update; the reaction uses Mbar at the old level j.
  long step(const StencilCoefficients<Scalar>& s,
            const BasicField<Scalar>& m_bar, int j, const Scalar* src,
            Scalar* dst, bool clamp) const {
    const Index nodes = grid().node_count();
    const int n = grid().dim();
    const Scalar rate = static_cast<Scalar>(grid().dt() / c_.lambda);
    const Scalar congestion = static_cast<Scalar>(c_.congestion);
    const Scalar* mbar = m_bar.values().col(j).data();
    const Scalar floor = std::numeric_limits<Scalar>::min();
    long clamps = 0;
#pragma omp parallel for reduction(+ : clamps) if (nodes > 16384)
    for (Index i = 0; i < nodes; ++i) {
      Scalar acc = s.self_coeff[i] * src[i];
      for (int l = 0; l < n; ++l)
        acc += s.plus_coeff(i, l) * src[s.plus_node(i, l)] +
               s.minus_coeff(i, l) * src[s.minus_node(i, l)];
      for (const auto& term : s.cross)
        acc += term.weight *
               (src[term.corners(i, 0)] - src[term.corners(i, 1)] -
                src[term.corners(i, 2)] + src[term.corners(i, 3)]);
      const Scalar g =
          static_cast<Scalar>(c_.base_cost[i]) + congestion * mbar[i];
      Scalar value = acc / (Scalar(1) + rate * g);
      if (clamp && value < floor) {
        value = floor;
        ++clamps;
      }
      dst[i] = value;
    }
    return clamps;
  }

  void check_inputs(const BasicField<Scalar>& m_bar, const Slice<Scalar>& edge,
                    const BasicField<Scalar>& out, const char* what) const {
    if (!(m_bar.grid() == grid()) || !(out.grid() == grid()))
      throw std::invalid_argument(std::string(what) + ": grid mismatch");
    if (edge.size() != grid().node_count())
      throw std::invalid_argument(std::string(what) +
                                  ": boundary slice has wrong size");
    if ((m_bar.values().array() < Scalar(0)).any())
      throw std::invalid_argument(std::string(what) +
                                  ": averaged density must be >= 0");
  }

  static void check_finite(const BasicField<Scalar>& u, int level,
                           const char* what) {
    const auto col = u.slice(level);
    if (col.allFinite()) return;
    for (Index i = 0; i < col.size(); ++i) {
      if (!std::isfinite(static_cast<double>(col[i]))) {
        std::ostringstream msg;
        msg << what << ": non-finite value at node " << i << ", level "
            << level;
        throw InvariantViolation(msg.str());
      }
    }
  }

  static void summarize(const BasicField<Scalar>& u, long clamps,
                        SweepDiagnostics<Scalar>* diag) {
    if (!diag) return;
    diag->min = u.values().minCoeff();
    diag->max = u.values().maxCoeff();
    diag->clamp_count = clamps;
  }

  AdrCoefficients c_;
  StencilCoefficients<Scalar> backward_;
  StencilCoefficients<Scalar> forward_;
};

template <typename Scalar>
BasicField<Scalar> backward_sweep(const AdrCoefficients& c,
                                  const BasicField<Scalar>& m_bar,
                                  const Slice<Scalar>& terminal,
                                  SweepDiagnostics<Scalar>* diag = nullptr) {
  AdrScheme<Scalar> scheme(c);
  BasicField<Scalar> psi(c.grid);
  scheme.backward(m_bar, terminal, psi, diag);
  return psi;
}

template <typename Scalar>
BasicField<Scalar> forward_sweep(const AdrCoefficients& c,
                                 const BasicField<Scalar>& m_bar,
                                 const Slice<Scalar>& initial,
                                 SweepDiagnostics<Scalar>* diag = nullptr) {
  AdrScheme<Scalar> scheme(c);
  BasicField<Scalar> psitilde(c.grid);
  scheme.forward(m_bar, initial, psitilde, diag);
  return psitilde;
}

}  // namespace lsmfg
