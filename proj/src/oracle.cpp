#include "lsmfg/oracle.hpp"

#include <unsupported/Eigen/FFT>

#include <chrono>
#include <cmath>
#include <complex>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>

namespace lsmfg {

namespace {

using Complex = std::complex<double>;

// In-place DFT along one axis; the inverse carries the 1/M factor.
void dft_axis(std::vector<Complex>& a, const PeriodicGrid& grid, int axis,
              bool inverse) {
  const int m = grid.nodes_per_dim(axis);
  Index stride = 1;
  for (int l = grid.dim() - 1; l > axis; --l) stride *= grid.nodes_per_dim(l);

  Eigen::FFT<double> fft;
  std::vector<Complex> line(m), out(m);
  for (Index base = 0; base < grid.node_count(); ++base) {
    if ((base / stride) % m != 0) continue;
    for (int q = 0; q < m; ++q) line[q] = a[base + q * stride];
    if (inverse)
      fft.inv(out, line);
    else
      fft.fwd(out, line);
    for (int q = 0; q < m; ++q) a[base + q * stride] = out[q];
  }
}

bool nearly_integer(double v, double& rounded) {
  rounded = std::round(v);
  return std::abs(v - rounded) < 1e-9;
}

double sup_error(const Field& a, const Field& b) { return residual(a, b); }

}  // namespace

Eigen::VectorXd fourier_adr_solution(const PeriodicGrid& grid,
                                     const Eigen::VectorXd& drift,
                                     const Eigen::VectorXd& nu_diagonal,
                                     double reaction, double lambda,
                                     const Eigen::VectorXd& data, double tau,
                                     Direction direction) {
  const int n = grid.dim();
  if (drift.size() != n || nu_diagonal.size() != n)
    throw std::invalid_argument("fourier oracle: coefficient dimension");
  if (data.size() != grid.node_count())
    throw std::invalid_argument("fourier oracle: data size");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (tau < 0.0) throw std::invalid_argument("elapsed time must be >= 0");

  std::vector<Complex> a(data.data(), data.data() + data.size());
  for (int l = 0; l < n; ++l) dft_axis(a, grid, l, false);

  const double pi = std::numbers::pi;
  const double phase_sign = direction == Direction::forward ? -1.0 : 1.0;
  for (Index node = 0; node < grid.node_count(); ++node) {
    const std::vector<int> q = grid.multi_index(node);
    double phase = 0.0, decay = reaction / lambda;
    for (int l = 0; l < n; ++l) {
      const int m = grid.nodes_per_dim(l);
      const double k = q[l] < m / 2 ? q[l] : q[l] - m;
      phase += pi * k * drift[l];
      decay += nu_diagonal[l] * pi * pi * k * k;
    }
    a[node] *= std::exp(Complex(-decay * tau, phase_sign * phase * tau));
  }

  for (int l = 0; l < n; ++l) dft_axis(a, grid, l, true);
  Eigen::VectorXd out(grid.node_count());
  for (Index i = 0; i < out.size(); ++i) out[i] = a[i].real();
  return out;
}

Eigen::VectorXd fourier_adr_solution(const AdrCoefficients& c,
                                     const Eigen::VectorXd& data, double tau,
                                     Direction direction) {
  const Eigen::RowVectorXd f = c.drift.row(0);
  if ((c.drift.rowwise() - f).cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("fourier oracle needs a uniform drift");
  Eigen::MatrixXd off = c.nu;
  off.diagonal().setZero();
  if (off.cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("fourier oracle needs a diagonal nu");
  if (c.base_cost.maxCoeff() != c.base_cost.minCoeff() || c.congestion != 0.0)
    throw std::invalid_argument("fourier oracle needs a constant reaction");
  return fourier_adr_solution(c.grid, f.transpose(), c.nu.diagonal(),
                              c.base_cost[0], c.lambda, data, tau, direction);
}

Field downsample(const Field& fine, const PeriodicGrid& coarse) {
  const PeriodicGrid& g = fine.grid();
  if (g.dim() != coarse.dim() || g.horizon() != coarse.horizon())
    throw std::invalid_argument("downsample: grids are not nested");
  std::vector<int> ratio(g.dim());
  for (int l = 0; l < g.dim(); ++l) {
    if (g.partitions(l) % coarse.partitions(l) != 0)
      throw std::invalid_argument("downsample: spatial grids are not nested");
    ratio[l] = g.partitions(l) / coarse.partitions(l);
  }
  if (g.time_steps() % coarse.time_steps() != 0)
    throw std::invalid_argument("downsample: time grids are not nested");
  const int time_ratio = g.time_steps() / coarse.time_steps();

  Field out(coarse);
  std::vector<int> k(g.dim());
  for (Index node = 0; node < coarse.node_count(); ++node) {
    const std::vector<int> kc = coarse.multi_index(node);
    for (int l = 0; l < g.dim(); ++l) k[l] = kc[l] * ratio[l];
    const Index fine_node = g.flat_index(k);
    for (int j = 0; j < coarse.time_levels(); ++j)
      out(node, j) = fine(fine_node, j * time_ratio);
  }
  return out;
}

Field resample(const Field& field, const PeriodicGrid& target) {
  const PeriodicGrid& g = field.grid();
  if (g.dim() != target.dim())
    throw std::invalid_argument("resample: dimension mismatch");
  if (std::abs(g.horizon() - target.horizon()) > 1e-12 * g.horizon())
    throw std::invalid_argument("resample: horizons differ");
  const int n = g.dim();

  struct Axis {
    int lo;
    double w;
  };
  auto locate = [](double u, int period) {
    double r;
    if (nearly_integer(u, r)) return Axis{static_cast<int>(r), 0.0};
    const double fl = std::floor(u);
    Axis ax{static_cast<int>(fl), u - fl};
    if (period > 0) ax.lo = ((ax.lo % period) + period) % period;
    return ax;
  };

  std::vector<Axis> time_axis(target.time_levels());
  for (int j = 0; j < target.time_levels(); ++j) {
    Axis ax = locate(target.time(j) / g.dt(), 0);
    if (ax.lo >= g.time_steps()) ax = {g.time_steps(), 0.0};
    time_axis[j] = ax;
  }

  Field out(target);
  std::vector<Axis> space(n);
  std::vector<int> corner(n);
  const int corners = 1 << n;
  for (Index node = 0; node < target.node_count(); ++node) {
    for (int l = 0; l < n; ++l)
      space[l] = locate((target.coordinate(node, l) + 1.0) / g.dx(l),
                        g.nodes_per_dim(l));
    // Spatial weights and fine nodes of the 2^n surrounding corners.
    std::vector<std::pair<Index, double>> stencil;
    for (int c = 0; c < corners; ++c) {
      double w = 1.0;
      for (int l = 0; l < n; ++l) {
        const bool upper = (c >> l) & 1;
        w *= upper ? space[l].w : 1.0 - space[l].w;
        corner[l] = space[l].lo + (upper ? 1 : 0);
      }
      if (w != 0.0) stencil.emplace_back(g.flat_index(corner), w);
    }
    for (int j = 0; j < target.time_levels(); ++j) {
      const Axis& t = time_axis[j];
      double v = 0.0;
      for (const auto& [fine_node, w] : stencil) {
        v += w * (1.0 - t.w) * field(fine_node, t.lo);
        if (t.w != 0.0) v += w * t.w * field(fine_node, t.lo + 1);
      }
      out(node, j) = v;
    }
  }
  return out;
}

namespace {

// Row p holds the weights of the band-limited interpolant at target node p:
// D(s) = (1 + 2 sum_{k<N} cos(pi k s) + cos(pi N s)) / 2N with s = x_p - x_q.
Eigen::MatrixXd trig_weights(int source_half, int target_half) {
  const int m = 2 * source_half, p = 2 * target_half;
  const double pi = std::numbers::pi;
  Eigen::MatrixXd w(p, m);
  for (int a = 0; a < p; ++a) {
    const double xa = -1.0 + static_cast<double>(a) / target_half;
    for (int q = 0; q < m; ++q) {
      const double xq = -1.0 + static_cast<double>(q) / source_half;
      const double s = xa - xq;
      double v = 1.0 + std::cos(pi * source_half * s);
      for (int k = 1; k < source_half; ++k) v += 2.0 * std::cos(pi * k * s);
      w(a, q) = v / m;
    }
  }
  // Exact copies where nodes coincide.
  for (int a = 0; a < p; ++a) {
    double r;
    if (nearly_integer(static_cast<double>(a) * source_half / target_half, r)) {
      w.row(a).setZero();
      w(a, static_cast<int>(r) % m) = 1.0;
    }
  }
  return w;
}

}  // namespace

Field resample_spectral(const Field& field, const PeriodicGrid& target) {
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const PeriodicGrid& g = field.grid();
  if (g.dim() != target.dim())
    throw std::invalid_argument("resample: dimension mismatch");
  if (std::abs(g.horizon() - target.horizon()) > 1e-12 * g.horizon())
    throw std::invalid_argument("resample: horizons differ");
  const int n = g.dim();

  std::vector<Eigen::MatrixXd> weights;
  for (int l = 0; l < n; ++l)
    weights.push_back(trig_weights(g.partitions(l), target.partitions(l)));

  Field out(target);
  Eigen::VectorXd slice(g.node_count()), next;
  for (int j = 0; j < target.time_levels(); ++j) {
    // Cubic Lagrange through the four nearest source levels.
    const double u = target.time(j) / g.dt();
    double r;
    if (nearly_integer(u, r)) {
      slice = field.slice(std::clamp(static_cast<int>(r), 0, g.time_steps()));
    } else {
      const int last = g.time_steps();
      int lo = static_cast<int>(std::floor(u)) - 1;
      lo = std::clamp(lo, 0, std::max(0, last - 3));
      const int count = std::min(4, last + 1);
      slice = Eigen::VectorXd::Zero(g.node_count());
      for (int a = 0; a < count; ++a) {
        double w = 1.0;
        for (int b = 0; b < count; ++b)
          if (b != a) w *= (u - (lo + b)) / static_cast<double>(a - b);
        slice += w * field.slice(lo + a);
      }
    }

    // Contract one axis at a time; the first axis varies slowest.
    std::vector<Index> shape(n);
    for (int l = 0; l < n; ++l) shape[l] = g.nodes_per_dim(l);
    for (int l = 0; l < n; ++l) {
      Index outer = 1, inner = 1;
      for (int a = 0; a < l; ++a) outer *= shape[a];
      for (int a = l + 1; a < n; ++a) inner *= shape[a];
      const Index m = shape[l], p = weights[l].rows();
      next.resize(outer * p * inner);
      for (Index o = 0; o < outer; ++o) {
        Eigen::Map<const RowMajor> src(slice.data() + o * m * inner, m, inner);
        Eigen::Map<RowMajor> dst(next.data() + o * p * inner, p, inner);
        dst.noalias() = weights[l] * src;
      }
      shape[l] = p;
      slice.swap(next);
    }
    out.slice(j) = slice;
  }
  return out;
}

PeriodicGrid make_grid(const Problem& problem, const std::vector<int>& partitions,
                       const TimeRule& rule) {
  if (rule.time_steps)
    return build_grid(problem.dim(), partitions, *rule.time_steps,
                      problem.horizon());
  const TimeStep step = max_dt_for_target(problem, partitions, rule.cfl_target);
  return build_grid(problem.dim(), partitions, step.time_steps,
                    problem.horizon());
}

Field reference_solution(const Problem& problem, const PeriodicGrid& fine,
                         int iterations, InitialGuess guess) {
  SolveOptions<double> options;
  options.tolerance = 0.0;
  options.max_iterations = iterations;
  options.initial_guess = guess;
  options.check_bounds = false;
  return run(problem, fine, options).density;
}

OrderFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line needs at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

OrderFit estimate_order(const std::vector<LadderPoint>& points) {
  if (points.size() < 3)
    throw std::invalid_argument("order estimate needs at least 3 points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.error > 0.0) || !std::isfinite(p.error))
      throw std::invalid_argument("order estimate needs positive errors");
    if (!(p.dx > 0.0))
      throw std::invalid_argument("order estimate needs positive dx");
    if (i > 0 && !(p.dx < points[i - 1].dx))
      throw std::invalid_argument("ladder dx must be strictly decreasing");
    lx.push_back(std::log(p.dx));
    ly.push_back(std::log(p.error));
  }
  return fit_line(lx, ly);
}

RefinementLadder sweep_dx(const Problem& problem, const DxStudySpec& spec) {
  using clock = std::chrono::steady_clock;
  if (spec.ladder.size() < 3)
    throw std::invalid_argument("dx sweep needs at least 3 ladder points");
  if (static_cast<int>(spec.reference_partitions.size()) != problem.dim())
    throw std::invalid_argument("reference partitions have wrong dimension");
  for (std::size_t i = 0; i < spec.ladder.size(); ++i) {
    const auto& p = spec.ladder[i];
    if (static_cast<int>(p.size()) != problem.dim())
      throw std::invalid_argument("ladder point has wrong dimension");
    for (int l = 0; l < problem.dim(); ++l)
      if (!(p[l] < spec.reference_partitions[l]))
        throw std::invalid_argument(
            "ladder point is not strictly coarser than the reference");
    if (i > 0 && !(p[0] > spec.ladder[i - 1][0]))
      throw std::invalid_argument("ladder must refine monotonically");
  }

  const PeriodicGrid ref_grid =
      make_grid(problem, spec.reference_partitions, spec.time_rule);
  const Field reference = reference_solution(
      problem, ref_grid, spec.reference_iterations, spec.guess);

  RefinementLadder ladder;
  for (const auto& partitions : spec.ladder) {
    const PeriodicGrid grid = make_grid(problem, partitions, spec.time_rule);
    const auto t0 = clock::now();
    const Field m = reference_solution(problem, grid, spec.iterations, spec.guess);
    const double runtime =
        std::chrono::duration<double>(clock::now() - t0).count();
    ladder.points.push_back(
        {grid.dx(0), grid.dt(), sup_error(resample_spectral(reference, grid), m),
         runtime});
  }
  ladder.fit = estimate_order(ladder.points);
  return ladder;
}

std::vector<KStudyPoint> sweep_k(const Problem& problem, const KStudySpec& spec) {
  if (spec.k_list.empty()) throw std::invalid_argument("k list is empty");
  for (std::size_t i = 0; i < spec.k_list.size(); ++i) {
    if (spec.k_list[i] < 1) throw std::invalid_argument("k must be >= 1");
    if (i > 0 && !(spec.k_list[i] > spec.k_list[i - 1]))
      throw std::invalid_argument("k list must be strictly increasing");
  }
  const int k_max = spec.k_list.back();
  const PeriodicGrid grid = make_grid(problem, spec.partitions, spec.time_rule);
  const PeriodicGrid ref_grid =
      make_grid(problem, spec.reference_partitions, spec.time_rule);
  const bool shared = ref_grid == grid && spec.reference_iterations >= k_max;

  std::map<int, Field> snapshots;
  SolveOptions<double> options;
  options.tolerance = 0.0;
  options.max_iterations = shared ? spec.reference_iterations : k_max;
  options.initial_guess = spec.guess;
  options.check_bounds = false;
  options.on_density = [&](int k, const Field& m) {
    if (std::binary_search(spec.k_list.begin(), spec.k_list.end(), k))
      snapshots.emplace(k, m);
  };
  const Field final_density = run(problem, grid, options).density;
  const Field reference =
      shared ? final_density
             : resample_spectral(reference_solution(problem, ref_grid,
                                           spec.reference_iterations, spec.guess),
                        grid);

  std::vector<KStudyPoint> out;
  for (int k : spec.k_list) {
    // A run that reached an exact fixed point early stays there.
    const auto it = snapshots.find(k);
    const Field& m = it != snapshots.end() ? it->second : final_density;
    out.push_back({k, sup_error(reference, m)});
  }
  return out;
}

void write_ladder_csv(std::ostream& out, const RefinementLadder& ladder) {
  const auto old = out.precision();
  out << std::setprecision(17) << "dx,dt,error,runtime\n";
  for (const auto& p : ladder.points)
    out << p.dx << ',' << p.dt << ',' << p.error << ',' << p.runtime << '\n';
  out.precision(old);
}

void write_k_study_csv(std::ostream& out, const std::vector<KStudyPoint>& pts) {
  const auto old = out.precision();
  out << std::setprecision(17) << "k,error\n";
  for (const auto& p : pts) out << p.k << ',' << p.error << '\n';
  out.precision(old);
}

}  // namespace lsmfg
