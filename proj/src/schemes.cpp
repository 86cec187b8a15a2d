#include "lsmfg/schemes.hpp"

namespace lsmfg {

AdrCoefficients make_coefficients(const Problem& problem,
                                  const PeriodicGrid& grid) {
  if (grid.dim() != problem.dim())
    throw std::invalid_argument("grid and problem dimensions differ");
  AdrCoefficients c{grid,
                    Eigen::MatrixXd(grid.node_count(), grid.dim()),
                    problem.nu(),
                    problem.lambda(),
                    Eigen::VectorXd(grid.node_count()),
                    problem.spec().cost.congestion};
  for (Index i = 0; i < grid.node_count(); ++i) {
    const Eigen::VectorXd x = grid.position(i);
    c.drift.row(i) = problem.drift_at(grid, i).transpose();
    c.base_cost[i] = problem.cost(x, 0.0);
  }
  return c;
}

AdrCoefficients constant_coefficients(const PeriodicGrid& grid,
                                      const Eigen::VectorXd& drift,
                                      const Eigen::MatrixXd& nu, double lambda,
                                      double reaction) {
  if (drift.size() != grid.dim() || nu.rows() != grid.dim() ||
      nu.cols() != grid.dim())
    throw std::invalid_argument("coefficient dimensions do not match grid");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (reaction < 0.0) throw std::invalid_argument("reaction must be >= 0");
  return AdrCoefficients{
      grid,
      drift.transpose().replicate(grid.node_count(), 1),
      nu,
      lambda,
      Eigen::VectorXd::Constant(grid.node_count(), reaction),
      0.0};
}

double cfl_lhs(const AdrCoefficients& c) {
  std::vector<double> dx(c.grid.dim());
  for (int l = 0; l < c.grid.dim(); ++l) dx[l] = c.grid.dx(l);
  const Eigen::VectorXd sup = c.drift.cwiseAbs().colwise().maxCoeff();
  return cfl_lhs(sup, c.nu, dx, c.grid.dt());
}

void require_stable(const AdrCoefficients& c) {
  const double lhs = cfl_lhs(c);
  if (!(lhs < 1.0)) {
    std::ostringstream msg;
    msg << "CFL condition violated: left-hand side " << lhs << " >= 1";
    throw CflViolation(msg.str(), lhs);
  }
  const auto& g = c.grid;
  for (int a = 0; a < g.dim(); ++a) {
    if (c.nu(a, a) < 0.0)
      throw std::invalid_argument("diffusion matrix has a negative diagonal");
    double off = 0.0;
    for (int b = 0; b < g.dim(); ++b)
      if (b != a) off += std::abs(c.nu(a, b)) / (g.dx(a) * g.dx(b));
    if (off > c.nu(a, a) / (g.dx(a) * g.dx(a)) * (1.0 + 1e-12))
      throw std::invalid_argument(
          "off-diagonal diffusion is not dominated by the diagonal");
  }
}

}  // namespace lsmfg
