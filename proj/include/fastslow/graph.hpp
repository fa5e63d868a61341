#pragma once

#include "fastslow/types.hpp"

#include <vector>

namespace fastslow {

struct UniformAxis {
  double lo = 0.0;
  double hi = 1.0;
  int count = 2;

  double step() const { return count > 1 ? (hi - lo) / (count - 1) : 0.0; }
  double node(int i) const { return i == count - 1 ? hi : lo + i * step(); }
};

/// Cubic spline on a uniform grid with not-a-knot ends; linear for fewer than
/// four nodes. Values are vector valued (one column per component). Outside
/// the grid the end cell's polynomial is continued.
class CubicSpline1D {
 public:
  CubicSpline1D() = default;
  CubicSpline1D(UniformAxis axis, Matrix values);

  Vector value(double x) const;
  Vector derivative(double x) const;
  const UniformAxis& axis() const { return axis_; }

 private:
  int cell(double x) const;

  UniformAxis axis_;
  Matrix values_;  // count x m
  Matrix second_;  // count x m, empty for linear interpolation
};

/// How a point z in R^n splits into graph coordinates: x (k entries, the
/// domain of the graph) and y (n-k entries, the graph values).
struct Chart {
  std::vector<int> x_idx;
  std::vector<int> y_idx;

  static Chart leading(int n, int k);  // x = first k coordinates
  int dim() const { return static_cast<int>(x_idx.size() + y_idx.size()); }
  Vector compose(const Vector& x, const Vector& y) const;
  Vector x_of(const Vector& z) const;
  Vector y_of(const Vector& z) const;
  Matrix select(const Matrix& m, bool rows_x, bool cols_x) const;
};

/// k-dimensional manifold stored as a graph y = phi(x) on a uniform
/// tensor-product grid (last axis varies fastest) with per-axis cubic splines.
class GraphManifold {
 public:
  GraphManifold(Chart chart, std::vector<UniformAxis> axes, Matrix values, double eps);

  const Chart& chart() const { return chart_; }
  const std::vector<UniformAxis>& axes() const { return axes_; }
  const Matrix& values() const { return values_; }  // node_count x (n-k)
  double eps() const { return eps_; }
  int slow_dim() const { return static_cast<int>(axes_.size()); }
  int value_dim() const { return static_cast<int>(values_.cols()); }
  int node_count() const { return static_cast<int>(values_.rows()); }

  Vector node(int idx) const;
  std::vector<int> node_multi_index(int idx) const;
  Vector point_at_node(int idx) const;

  Vector value(const Vector& x) const;
  /// D phi(x), (n-k) x k.
  Matrix derivative(const Vector& x) const;
  Vector point(const Vector& x) const;

  bool inside(const Vector& x, double slack = 0.0) const;
  /// True when the node has at least `layers` nodes on every side.
  bool is_interior(int idx, int layers) const;

  GraphManifold with_values(Matrix values, double eps) const;

 private:
  Vector interp(int level, std::size_t offset, const Vector& x, int deriv_axis) const;

  Chart chart_;
  std::vector<UniformAxis> axes_;
  Matrix values_;
  double eps_;
  std::vector<CubicSpline1D> lines_;  // innermost-axis splines, one per prefix
};

}  // namespace fastslow
