#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsmfg {

using Index = Eigen::Index;

/// Tensor-product periodic grid on [-1,1)^n (x = -1 identified with x = +1)
/// together with a uniform time grid on [0, T].
///
/// Dimension l carries 2 * N_l nodes at x = -1 + k * dx_l, k = 0 .. 2 N_l - 1,
/// with dx_l = 1 / N_l. Nodes are numbered lexicographically by their
/// multi-index (k_0, ..., k_{n-1}), the first dimension varying slowest.
class PeriodicGrid {
 public:
  PeriodicGrid(std::vector<int> partitions, int time_steps, double horizon);

  int dim() const { return static_cast<int>(partitions_.size()); }
  int partitions(int l) const { return partitions_.at(l); }
  const std::vector<int>& partitions() const { return partitions_; }
  int nodes_per_dim(int l) const { return 2 * partitions_.at(l); }
  double dx(int l) const { return dx_.at(l); }
  int time_steps() const { return time_steps_; }
  int time_levels() const { return time_steps_ + 1; }
  double dt() const { return dt_; }
  double horizon() const { return horizon_; }
  Index node_count() const { return node_count_; }
  /// Product of the spatial spacings; the quadrature weight of one node.
  double cell_volume() const;

  /// Node index shifted by `offset` (+1 or -1, any integer works) along
  /// dimension l, wrapping periodically.
  Index neighbor(Index node, int l, int offset) const {
    const Index n = 2 * partitions_[l];
    const Index s = strides_[l];
    const Index k = (node / s) % n;
    Index shifted = (k + offset) % n;
    if (shifted < 0) shifted += n;
    return node + (shifted - k) * s;
  }

  std::vector<int> multi_index(Index node) const;
  Index flat_index(std::span<const int> multi) const;
  double coordinate(Index node, int l) const;
  Eigen::VectorXd position(Index node) const;
  double time(int level) const { return level * dt_; }

  friend bool operator==(const PeriodicGrid& a, const PeriodicGrid& b) {
    return a.partitions_ == b.partitions_ && a.time_steps_ == b.time_steps_ &&
           a.horizon_ == b.horizon_;
  }

 private:
  std::vector<int> partitions_;
  std::vector<double> dx_;
  std::vector<Index> strides_;
  int time_steps_;
  double dt_;
  double horizon_;
  Index node_count_;
};

PeriodicGrid build_grid(int dim, std::vector<int> partitions, int time_steps,
                        double horizon);

template <typename Scalar>
using Slice = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Dense field over (grid nodes) x (time levels). Column j is the spatial
/// slice at t_j and is contiguous in memory.
template <typename Scalar>
class BasicField {
 public:
  using Storage = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  explicit BasicField(PeriodicGrid grid, Scalar fill = Scalar(0))
      : grid_(std::move(grid)),
        values_(Storage::Constant(grid_.node_count(), grid_.time_levels(),
                                  fill)) {}

  BasicField(PeriodicGrid grid, Storage values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.rows() != grid_.node_count() ||
        values_.cols() != grid_.time_levels())
      throw std::invalid_argument("field storage does not match grid");
  }

  const PeriodicGrid& grid() const { return grid_; }

  Scalar& operator()(Index node, int level) { return values_(node, level); }
  Scalar operator()(Index node, int level) const {
    return values_(node, level);
  }

  auto slice(int level) { return values_.col(level); }
  auto slice(int level) const { return values_.col(level); }

  Storage& values() { return values_; }
  const Storage& values() const { return values_; }

  bool all_finite() const { return values_.allFinite(); }

 private:
  PeriodicGrid grid_;
  Storage values_;
};

using Field = BasicField<double>;

template <typename Scalar>
void require_same_grid(const BasicField<Scalar>& a, const BasicField<Scalar>& b,
                       const char* what) {
  if (!(a.grid() == b.grid()))
    throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

/// Writes one row per node per selected level: x_1..x_n, t, value.
/// Rows are ordered by level, then lexicographic node index; values carry
/// 17 significant digits.
void write_field_csv(std::ostream& out, const Field& field,
                     std::span<const int> levels,
                     const std::string& value_name = "value");

/// Multi-column variant used for vector fields (one column per component).
void write_fields_csv(std::ostream& out, std::span<const Field> components,
                      std::span<const int> levels,
                      std::span<const std::string> names);

/// Levels 0, stride, 2*stride, ... plus the final level.
std::vector<int> export_levels(const PeriodicGrid& grid, int stride);

}  // namespace lsmfg
