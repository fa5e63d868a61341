#include "fastslow/graph.hpp"

#include <algorithm>
#include <cmath>

namespace fastslow {

CubicSpline1D::CubicSpline1D(UniformAxis axis, Matrix values)
    : axis_(axis), values_(std::move(values)) {
  const int n = axis_.count;
  if (n < 1 || values_.rows() != n) {
    throw NumericalError(ErrorKind::InvalidArgument, "spline node count does not match values");
  }
  if (n < 4) return;

  // Not-a-knot on a uniform grid: M0 - 2M1 + M2 = 0 collapses the first
  // interior equation to 6 M1 = r1 (same at the other end), leaving a
  // constant tridiagonal (1,4,1) system for M2..M_{n-3}.
  const double h = axis_.step();
  const Eigen::Index m = values_.cols();
  Matrix r = Matrix::Zero(n, m);
  for (int i = 1; i + 1 < n; ++i) {
    r.row(i) = 6.0 * (values_.row(i - 1) - 2.0 * values_.row(i) + values_.row(i + 1)) / (h * h);
  }
  second_ = Matrix::Zero(n, m);
  second_.row(1) = r.row(1) / 6.0;
  second_.row(n - 2) = r.row(n - 2) / 6.0;

  const int inner = n - 4;  // unknowns M2..M_{n-3}
  if (inner > 0) {
    std::vector<double> c(static_cast<std::size_t>(inner));
    Matrix d(inner, m);
    for (int j = 0; j < inner; ++j) {
      const int i = j + 2;
      d.row(j) = r.row(i);
      if (j == 0) d.row(j) -= second_.row(1);
      if (j == inner - 1) d.row(j) -= second_.row(n - 2);
    }
    // Thomas algorithm with diagonal 4, off-diagonals 1.
    double denom = 4.0;
    c[0] = 1.0 / denom;
    d.row(0) /= denom;
    for (int j = 1; j < inner; ++j) {
      denom = 4.0 - c[static_cast<std::size_t>(j - 1)];
      c[static_cast<std::size_t>(j)] = 1.0 / denom;
      d.row(j) = (d.row(j) - d.row(j - 1)) / denom;
    }
    for (int j = inner - 2; j >= 0; --j) {
      d.row(j) -= c[static_cast<std::size_t>(j)] * d.row(j + 1);
    }
    second_.middleRows(2, inner) = d;
  }
  second_.row(0) = 2.0 * second_.row(1) - second_.row(2);
  second_.row(n - 1) = 2.0 * second_.row(n - 2) - second_.row(n - 3);
}

int CubicSpline1D::cell(double x) const {
  const int n = axis_.count;
  if (n < 2) return 0;
  const double s = (x - axis_.lo) / axis_.step();
  int i = static_cast<int>(std::floor(s));
  return std::clamp(i, 0, n - 2);
}

Vector CubicSpline1D::value(double x) const {
  const int n = axis_.count;
  if (n == 1) return values_.row(0).transpose();
  const int i = cell(x);
  const double h = axis_.step();
  const double a = (axis_.node(i + 1) - x);
  const double b = (x - axis_.node(i));
  if (second_.size() == 0) {
    return ((a * values_.row(i) + b * values_.row(i + 1)) / h).transpose();
  }
  const auto yi = values_.row(i);
  const auto yj = values_.row(i + 1);
  const auto mi = second_.row(i);
  const auto mj = second_.row(i + 1);
  return (mi * (a * a * a) / (6.0 * h) + mj * (b * b * b) / (6.0 * h) +
          (yi / h - mi * h / 6.0) * a + (yj / h - mj * h / 6.0) * b)
      .transpose();
}

Vector CubicSpline1D::derivative(double x) const {
  const int n = axis_.count;
  if (n == 1) return Vector::Zero(values_.cols());
  const int i = cell(x);
  const double h = axis_.step();
  const double a = (axis_.node(i + 1) - x);
  const double b = (x - axis_.node(i));
  if (second_.size() == 0) return ((values_.row(i + 1) - values_.row(i)) / h).transpose();
  const auto yi = values_.row(i);
  const auto yj = values_.row(i + 1);
  const auto mi = second_.row(i);
  const auto mj = second_.row(i + 1);
  return (-mi * (a * a) / (2.0 * h) + mj * (b * b) / (2.0 * h) - (yi / h - mi * h / 6.0) +
          (yj / h - mj * h / 6.0))
      .transpose();
}

Chart Chart::leading(int n, int k) {
  Chart c;
  for (int i = 0; i < n; ++i) (i < k ? c.x_idx : c.y_idx).push_back(i);
  return c;
}

Vector Chart::compose(const Vector& x, const Vector& y) const {
  Vector z(dim());
  for (std::size_t i = 0; i < x_idx.size(); ++i) z[x_idx[i]] = x[static_cast<Eigen::Index>(i)];
  for (std::size_t i = 0; i < y_idx.size(); ++i) z[y_idx[i]] = y[static_cast<Eigen::Index>(i)];
  return z;
}

Vector Chart::x_of(const Vector& z) const {
  Vector x(static_cast<Eigen::Index>(x_idx.size()));
  for (std::size_t i = 0; i < x_idx.size(); ++i) x[static_cast<Eigen::Index>(i)] = z[x_idx[i]];
  return x;
}

Vector Chart::y_of(const Vector& z) const {
  Vector y(static_cast<Eigen::Index>(y_idx.size()));
  for (std::size_t i = 0; i < y_idx.size(); ++i) y[static_cast<Eigen::Index>(i)] = z[y_idx[i]];
  return y;
}

Matrix Chart::select(const Matrix& m, bool rows_x, bool cols_x) const {
  const auto& ri = rows_x ? x_idx : y_idx;
  const auto& ci = cols_x ? x_idx : y_idx;
  Matrix out(static_cast<Eigen::Index>(ri.size()), static_cast<Eigen::Index>(ci.size()));
  for (std::size_t i = 0; i < ri.size(); ++i) {
    for (std::size_t j = 0; j < ci.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(ri[i], ci[j]);
    }
  }
  return out;
}

GraphManifold::GraphManifold(Chart chart, std::vector<UniformAxis> axes, Matrix values, double eps)
    : chart_(std::move(chart)), axes_(std::move(axes)), values_(std::move(values)), eps_(eps) {
  if (axes_.empty() || axes_.size() != chart_.x_idx.size()) {
    throw NumericalError(ErrorKind::InvalidArgument, "grid dimension does not match the chart");
  }
  std::size_t total = 1;
  for (const auto& a : axes_) {
    if (a.count < 1 || !(a.hi >= a.lo)) {
      throw NumericalError(ErrorKind::InvalidArgument, "invalid grid axis");
    }
    total *= static_cast<std::size_t>(a.count);
  }
  if (static_cast<std::size_t>(values_.rows()) != total ||
      values_.cols() != static_cast<Eigen::Index>(chart_.y_idx.size())) {
    throw NumericalError(ErrorKind::InvalidArgument, "value table has the wrong shape");
  }
  const UniformAxis& last = axes_.back();
  const std::size_t lines = total / static_cast<std::size_t>(last.count);
  lines_.reserve(lines);
  for (std::size_t l = 0; l < lines; ++l) {
    lines_.emplace_back(last, values_.middleRows(static_cast<Eigen::Index>(l) * last.count, last.count));
  }
}

std::vector<int> GraphManifold::node_multi_index(int idx) const {
  std::vector<int> mi(axes_.size());
  for (int a = static_cast<int>(axes_.size()) - 1; a >= 0; --a) {
    const int c = axes_[static_cast<std::size_t>(a)].count;
    mi[static_cast<std::size_t>(a)] = idx % c;
    idx /= c;
  }
  return mi;
}

Vector GraphManifold::node(int idx) const {
  const auto mi = node_multi_index(idx);
  Vector x(slow_dim());
  for (std::size_t a = 0; a < axes_.size(); ++a) x[static_cast<Eigen::Index>(a)] = axes_[a].node(mi[a]);
  return x;
}

Vector GraphManifold::point_at_node(int idx) const {
  return chart_.compose(node(idx), values_.row(idx).transpose());
}

Vector GraphManifold::interp(int level, std::size_t offset, const Vector& x, int deriv_axis) const {
  const int k = slow_dim();
  if (level == k - 1) {
    const auto& line = lines_[offset];
    return deriv_axis == level ? line.derivative(x[level]) : line.value(x[level]);
  }
  const UniformAxis& axis = axes_[static_cast<std::size_t>(level)];
  Matrix collapsed(axis.count, value_dim());
  for (int i = 0; i < axis.count; ++i) {
    const std::size_t child = offset * static_cast<std::size_t>(axis.count) + static_cast<std::size_t>(i);
    collapsed.row(i) = interp(level + 1, child, x, deriv_axis).transpose();
  }
  const CubicSpline1D spline(axis, std::move(collapsed));
  return deriv_axis == level ? spline.derivative(x[level]) : spline.value(x[level]);
}

Vector GraphManifold::value(const Vector& x) const { return interp(0, 0, x, -1); }

Matrix GraphManifold::derivative(const Vector& x) const {
  Matrix d(value_dim(), slow_dim());
  for (int a = 0; a < slow_dim(); ++a) d.col(a) = interp(0, 0, x, a);
  return d;
}

Vector GraphManifold::point(const Vector& x) const { return chart_.compose(x, value(x)); }

bool GraphManifold::inside(const Vector& x, double slack) const {
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    const double v = x[static_cast<Eigen::Index>(a)];
    if (!(v >= axes_[a].lo - slack && v <= axes_[a].hi + slack)) return false;
  }
  return true;
}

bool GraphManifold::is_interior(int idx, int layers) const {
  const auto mi = node_multi_index(idx);
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    if (mi[a] < layers || mi[a] > axes_[a].count - 1 - layers) return false;
  }
  return true;
}

GraphManifold GraphManifold::with_values(Matrix values, double eps) const {
  return GraphManifold(chart_, axes_, std::move(values), eps);
}

}  // namespace fastslow
