#include "lsmfg/grid.hpp"

#include <iomanip>
#include <limits>
#include <ostream>

namespace lsmfg {

PeriodicGrid::PeriodicGrid(std::vector<int> partitions, int time_steps,
                           double horizon)
    : partitions_(std::move(partitions)),
      time_steps_(time_steps),
      horizon_(horizon) {
  if (partitions_.empty())
    throw std::invalid_argument("grid needs at least one dimension");
  for (int p : partitions_)
    if (p < 1) throw std::invalid_argument("partition count must be >= 1");
  if (time_steps_ < 1)
    throw std::invalid_argument("time step count must be >= 1");
  if (!(horizon_ > 0.0)) throw std::invalid_argument("horizon must be > 0");

  const int n = dim();
  dx_.resize(n);
  strides_.assign(n, 1);
  for (int l = 0; l < n; ++l) dx_[l] = 1.0 / partitions_[l];
  for (int l = n - 2; l >= 0; --l)
    strides_[l] = strides_[l + 1] * 2 * partitions_[l + 1];
  node_count_ = strides_[0] * 2 * partitions_[0];
  dt_ = horizon_ / time_steps_;
}

double PeriodicGrid::cell_volume() const {
  double v = 1.0;
  for (double h : dx_) v *= h;
  return v;
}

std::vector<int> PeriodicGrid::multi_index(Index node) const {
  std::vector<int> k(dim());
  for (int l = 0; l < dim(); ++l)
    k[l] = static_cast<int>((node / strides_[l]) % (2 * partitions_[l]));
  return k;
}

Index PeriodicGrid::flat_index(std::span<const int> multi) const {
  if (static_cast<int>(multi.size()) != dim())
    throw std::invalid_argument("multi-index has wrong dimension");
  Index node = 0;
  for (int l = 0; l < dim(); ++l) {
    const int n = 2 * partitions_[l];
    int k = multi[l] % n;
    if (k < 0) k += n;
    node += k * strides_[l];
  }
  return node;
}

double PeriodicGrid::coordinate(Index node, int l) const {
  const Index k = (node / strides_[l]) % (2 * partitions_[l]);
  return -1.0 + static_cast<double>(k) * dx_[l];
}

Eigen::VectorXd PeriodicGrid::position(Index node) const {
  Eigen::VectorXd x(dim());
  for (int l = 0; l < dim(); ++l) x[l] = coordinate(node, l);
  return x;
}

PeriodicGrid build_grid(int dim, std::vector<int> partitions, int time_steps,
                        double horizon) {
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  if (static_cast<int>(partitions.size()) != dim)
    throw std::invalid_argument("need one partition count per dimension");
  return PeriodicGrid(std::move(partitions), time_steps, horizon);
}

namespace {

void write_header(std::ostream& out, int dim,
                  std::span<const std::string> names) {
  for (int l = 0; l < dim; ++l) out << 'x' << (l + 1) << ',';
  out << 't';
  for (const auto& name : names) out << ',' << name;
  out << '\n';
}

}  // namespace

void write_fields_csv(std::ostream& out, std::span<const Field> components,
                      std::span<const int> levels,
                      std::span<const std::string> names) {
  if (components.empty() || components.size() != names.size())
    throw std::invalid_argument("need one column name per component");
  const PeriodicGrid& grid = components.front().grid();
  for (const auto& c : components)
    if (!(c.grid() == grid))
      throw std::invalid_argument("components live on different grids");

  const auto old_precision = out.precision();
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  write_header(out, grid.dim(), names);
  for (int level : levels) {
    if (level < 0 || level >= grid.time_levels())
      throw std::out_of_range("export level out of range");
    const double t = grid.time(level);
    for (Index node = 0; node < grid.node_count(); ++node) {
      for (int l = 0; l < grid.dim(); ++l)
        out << grid.coordinate(node, l) << ',';
      out << t;
      for (const auto& c : components) out << ',' << c(node, level);
      out << '\n';
    }
  }
  out.precision(old_precision);
}

void write_field_csv(std::ostream& out, const Field& field,
                     std::span<const int> levels,
                     const std::string& value_name) {
  const std::string names[] = {value_name};
  write_fields_csv(out, std::span<const Field>(&field, 1), levels, names);
}

std::vector<int> export_levels(const PeriodicGrid& grid, int stride) {
  if (stride < 1) stride = 1;
  std::vector<int> levels;
  for (int j = 0; j < grid.time_levels(); j += stride) levels.push_back(j);
  if (levels.back() != grid.time_steps()) levels.push_back(grid.time_steps());
  return levels;
}

}  // namespace lsmfg
