#include "lsmfg/problem.hpp"

#include "lsmfg/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace lsmfg {

namespace {

constexpr double kLambdaTolerance = 1e-10;
constexpr double kMassTolerance = 1e-6;

double bump_value(const GaussianBump& bump, const Eigen::VectorXd& x) {
  const Eigen::VectorXd d = x - bump.center;
  return bump.height * std::exp(-d.dot(bump.shape.ldlt().solve(d)));
}

void require_shape(const Eigen::MatrixXd& m, Index rows, Index cols,
                   const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream msg;
    msg << name << " must be " << rows << "x" << cols << ", got " << m.rows()
        << "x" << m.cols();
    throw std::invalid_argument(msg.str());
  }
}

bool is_symmetric(const Eigen::MatrixXd& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

void validate_state_cost(const StateCost& c, int n, const char* name) {
  const std::string prefix(name);
  if (c.q.size() != 0) {
    require_shape(c.q, n, n, (prefix + ".Q").c_str());
    if (!is_symmetric(c.q))
      throw std::invalid_argument(prefix + ".Q must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.q);
    if (eig.eigenvalues().minCoeff() < -1e-12)
      throw std::invalid_argument(prefix + ".Q must be positive semidefinite");
    if (c.target.size() != n)
      throw std::invalid_argument(prefix + ".target must have dimension n");
  }
  for (const auto& b : c.bumps) {
    if (b.center.size() != n)
      throw std::invalid_argument(prefix + " bump center has wrong dimension");
    require_shape(b.shape, n, n, (prefix + " bump shape").c_str());
    if (b.shape.llt().info() != Eigen::Success)
      throw std::invalid_argument(prefix + " bump shape must be SPD");
    if (b.height < 0.0)
      throw std::invalid_argument(prefix + " bump height must be >= 0");
  }
  if (c.offset < 0.0)
    throw std::invalid_argument(prefix + ".offset must be >= 0");
}

}  // namespace

double StateCost::operator()(const Eigen::VectorXd& x) const {
  double value = offset;
  if (q.size() != 0) {
    const Eigen::VectorXd d = x - target;
    value += d.dot(q * d);
  }
  for (const auto& b : bumps) value += bump_value(b, x);
  return value;
}

double CostSpec::operator()(const Eigen::VectorXd& x, double m) const {
  if (m < 0.0) throw std::invalid_argument("density argument must be >= 0");
  return state(x) + congestion * m;
}

double InitialDensity::operator()(const Eigen::VectorXd& x) const {
  switch (kind) {
    case Kind::uniform:
      return std::pow(0.5, static_cast<double>(x.size()));
    case Kind::gaussian: {
      const Eigen::VectorXd d = x - mean;
      const auto llt = covariance.llt();
      const double det = covariance.determinant();
      const double norm = std::pow(2.0 * std::numbers::pi,
                                   0.5 * static_cast<double>(x.size())) *
                          std::sqrt(det);
      return std::exp(-0.5 * d.dot(llt.solve(d))) / norm;
    }
    case Kind::bump: {
      const Eigen::VectorXd d = x - mean;
      return std::exp(-d.dot(covariance.llt().solve(d)));
    }
  }
  return 0.0;
}

Eigen::MatrixXd diffusion_matrix(const Eigen::MatrixXd& sigma) {
  return 0.5 * sigma.transpose() * sigma;
}

double derive_lambda(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& b,
                     const Eigen::MatrixXd& r) {
  if (sigma.rows() != sigma.cols())
    throw std::invalid_argument("sigma must be square");
  require_shape(b, sigma.rows(), b.cols(), "B");
  require_shape(r, b.cols(), b.cols(), "R");
  const auto lu = r.fullPivLu();
  if (!lu.isInvertible()) throw std::invalid_argument("R must be invertible");

  const Eigen::MatrixXd nu = diffusion_matrix(sigma);
  const Eigen::MatrixXd k = b * lu.solve(b.transpose());
  Index row = 0, col = 0;
  const double k_max = k.cwiseAbs().maxCoeff(&row, &col);
  if (k_max == 0.0)
    throw std::invalid_argument("B R^-1 B^T vanishes; no control authority");

  const double lambda = nu(row, col) / k(row, col);
  const double scale = nu.cwiseAbs().maxCoeff();
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw NotLinearizable("no positive lambda with lambda B R^-1 B^T = nu");
  const double mismatch = (lambda * k - nu).cwiseAbs().maxCoeff();
  if (mismatch > kLambdaTolerance * scale) {
    std::ostringstream msg;
    msg << "nu is not proportional to B R^-1 B^T (best lambda " << lambda
        << ", entrywise mismatch " << mismatch << ")";
    throw NotLinearizable(msg.str());
  }
  return lambda;
}

Problem::Problem(ProblemSpec spec) : spec_(std::move(spec)) {
  const int n = spec_.dim;
  if (n < 1) throw std::invalid_argument("dimension must be >= 1");
  if (!(spec_.horizon > 0.0))
    throw std::invalid_argument("horizon must be > 0");
  require_shape(spec_.sigma, n, n, "sigma");
  if (spec_.b.rows() != n || spec_.b.cols() < 1)
    throw std::invalid_argument("B must be n x m with m >= 1");
  const Index m = spec_.b.cols();
  require_shape(spec_.r, m, m, "R");
  if (!is_symmetric(spec_.r) || spec_.r.llt().info() != Eigen::Success)
    throw std::invalid_argument("R must be symmetric positive definite");

  if (const auto* lin = std::get_if<LinearDrift>(&spec_.drift))
    require_shape(lin->a, n, n, "drift A");
  if (const auto* tab = std::get_if<TabulatedDrift>(&spec_.drift))
    if (tab->values.cols() != n)
      throw std::invalid_argument("tabulated drift needs n columns");

  validate_state_cost(spec_.cost.state, n, "cost");
  if (spec_.cost.congestion < 0.0)
    throw std::invalid_argument("congestion coefficient must be >= 0");
  validate_state_cost(spec_.terminal_cost, n, "terminal_cost");

  const auto& m0 = spec_.initial_density;
  if (m0.kind != InitialDensity::Kind::uniform) {
    if (m0.mean.size() != n)
      throw std::invalid_argument("initial density mean has wrong dimension");
    require_shape(m0.covariance, n, n, "initial density covariance");
    if (m0.covariance.llt().info() != Eigen::Success)
      throw std::invalid_argument("initial density covariance must be SPD");
  }

  nu_ = diffusion_matrix(spec_.sigma);
  lambda_ = derive_lambda(spec_.sigma, spec_.b, spec_.r);
  gain_ = -spec_.r.llt().solve(spec_.b.transpose());
}

Eigen::VectorXd Problem::drift(const Eigen::VectorXd& x) const {
  return std::visit(
      [&](const auto& d) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ZeroDrift>) {
          return Eigen::VectorXd::Zero(x.size());
        } else if constexpr (std::is_same_v<T, LinearDrift>) {
          return d.a * x;
        } else {
          throw std::invalid_argument(
              "tabulated drift is only defined at grid nodes");
        }
      },
      spec_.drift);
}

Eigen::VectorXd Problem::drift_at(const PeriodicGrid& grid, Index node) const {
  if (const auto* tab = std::get_if<TabulatedDrift>(&spec_.drift)) {
    if (tab->values.rows() != grid.node_count())
      throw std::invalid_argument("tabulated drift does not cover the grid");
    return tab->values.row(node).transpose();
  }
  return drift(grid.position(node));
}

double Problem::cost(const Eigen::VectorXd& x, double m) const {
  return spec_.cost(x, m);
}

double Problem::terminal_cost(const Eigen::VectorXd& x) const {
  return spec_.terminal_cost(x);
}

double Problem::initial_density(const Eigen::VectorXd& x) const {
  return spec_.initial_density(x);
}

Eigen::VectorXd initial_density_slice(const Problem& problem,
                                      const PeriodicGrid& grid) {
  Eigen::VectorXd m0(grid.node_count());
  for (Index i = 0; i < grid.node_count(); ++i)
    m0[i] = problem.initial_density(grid.position(i));
  if ((m0.array() < 0.0).any())
    throw std::invalid_argument("initial density must be nonnegative");
  // Periodic trapezoidal rule: every node carries the full cell weight.
  const double mass = m0.sum() * grid.cell_volume();
  if (problem.spec().normalize_density) {
    if (!(mass > 0.0))
      throw std::invalid_argument("initial density has zero mass on grid");
    m0 /= mass;
  } else if (std::abs(mass - 1.0) > kMassTolerance) {
    std::ostringstream msg;
    msg << "initial density has mass " << mass << " on the grid, expected 1";
    throw std::invalid_argument(msg.str());
  }
  return m0;
}

Eigen::VectorXd terminal_cost_slice(const Problem& problem,
                                    const PeriodicGrid& grid) {
  Eigen::VectorXd v(grid.node_count());
  for (Index i = 0; i < grid.node_count(); ++i)
    v[i] = problem.terminal_cost(grid.position(i));
  return v;
}

Eigen::VectorXd drift_sup(const Problem& problem, const PeriodicGrid& grid) {
  Eigen::VectorXd sup = Eigen::VectorXd::Zero(grid.dim());
  for (Index i = 0; i < grid.node_count(); ++i)
    sup = sup.cwiseMax(problem.drift_at(grid, i).cwiseAbs());
  return sup;
}

double cfl_lhs(const Eigen::VectorXd& sup_drift, const Eigen::MatrixXd& nu,
               std::span<const double> dx, double dt) {
  double rate = 0.0;
  for (std::size_t l = 0; l < dx.size(); ++l)
    rate += sup_drift[static_cast<Index>(l)] / dx[l] +
            2.0 * nu(static_cast<Index>(l), static_cast<Index>(l)) /
                (dx[l] * dx[l]);
  return dt * rate;
}

CflReport check_cfl(const Problem& problem, const PeriodicGrid& grid) {
  std::vector<double> dx(grid.dim());
  for (int l = 0; l < grid.dim(); ++l) dx[l] = grid.dx(l);
  const double lhs =
      cfl_lhs(drift_sup(problem, grid), problem.nu(), dx, grid.dt());
  return {lhs, lhs < 1.0};
}

TimeStep max_dt_for_target(const Eigen::VectorXd& sup_drift,
                           const Eigen::MatrixXd& nu,
                           std::span<const double> dx, double horizon,
                           double target) {
  if (!(target > 0.0 && target < 1.0))
    throw std::invalid_argument("CFL target must lie in (0, 1)");
  const double rate = cfl_lhs(sup_drift, nu, dx, 1.0);
  if (!(rate > 0.0))
    throw std::invalid_argument(
        "no drift and no diffusion: CFL does not constrain dt, supply nt");
  const double dt_max = target / rate;
  // Round the step count up, forgiving representation error in the ratio.
  const double ratio = horizon / dt_max;
  int steps = static_cast<int>(std::ceil(ratio * (1.0 - 1e-12)));
  if (steps < 1) steps = 1;
  return {horizon / steps, steps};
}

TimeStep max_dt_for_target(const Problem& problem,
                           const std::vector<int>& partitions, double target) {
  const PeriodicGrid geometry(partitions, 1, problem.horizon());
  std::vector<double> dx(geometry.dim());
  for (int l = 0; l < geometry.dim(); ++l) dx[l] = geometry.dx(l);
  return max_dt_for_target(drift_sup(problem, geometry), problem.nu(), dx,
                           problem.horizon(), target);
}

}  // namespace lsmfg
