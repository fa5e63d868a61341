#include "fastslow/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace fastslow {

namespace {

Matrix columns(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
  return out;
}

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

std::string describe(const Vector& x) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << format_number(x[i]);
  os << ")";
  return os.str();
}

}  // namespace

Vector solve_on_critical(const FastSlowMap& map, const Chart& chart, const Vector& x,
                         const Vector& y_seed, const NewtonOptions& opts) {
  const double eps_mach = std::numeric_limits<double>::epsilon();
  Vector y = y_seed;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= opts.max_iter; ++it) {
    const Vector z = chart.compose(x, y);
    const Vector F = map.f(z);
    if (!F.allFinite()) break;
    residual = max_abs(F);
    if (residual <= opts.tol) return y;
    if (it == opts.max_iter) break;
    const Matrix J = columns(map.Df(z), chart.y_idx);
    const Eigen::PartialPivLU<Matrix> lu(J);
    const double det = lu.determinant();
    if (!(std::abs(det) >= opts.det_floor)) {
      throw NumericalError(ErrorKind::SingularJacobian,
                           "|det D_y f| = " + format_number(std::abs(det)) + " at x = " + describe(x));
    }
    const Vector dy = lu.solve(-F);
    y += dy;
    if (max_abs(dy) <= 4.0 * eps_mach * (1.0 + max_abs(y)) && residual <= opts.floor_tol) return y;
  }
  throw NumericalError(ErrorKind::NewtonDiverged, "critical-point Newton failed at x = " +
                                                      describe(x) + ", residual " +
                                                      format_number(residual));
}

GraphManifold solve_critical_graph(const FastSlowMap& map, const Chart& chart,
                                   std::vector<UniformAxis> axes, const Vector& y_seed,
                                   const NewtonOptions& opts) {
  if (chart.dim() != map.dim() || static_cast<int>(chart.x_idx.size()) != map.slow_dim()) {
    throw NumericalError(ErrorKind::InvalidArgument, "chart does not match the map dimensions");
  }
  if (axes.size() != chart.x_idx.size()) {
    throw NumericalError(ErrorKind::InvalidArgument, "grid dimension does not match the chart");
  }
  int total = 1;
  for (const auto& a : axes) total *= a.count;
  const int line = axes.back().count;
  const int m = map.fast_dim();

  // Throwaway graph only used for node coordinates.
  const GraphManifold layout(chart, axes, Matrix::Zero(total, m), 0.0);
  Matrix values(total, m);
  std::vector<double> dets(static_cast<std::size_t>(total), 0.0);

  auto det_at = [&](const Vector& x, const Vector& y) {
    return columns(map.Df(chart.compose(x, y)), chart.y_idx).determinant();
  };

  for (int idx = 0; idx < total; ++idx) {
    const int p = idx % line;
    const Vector x = layout.node(idx);
    Vector pred;
    if (idx == 0) {
      pred = y_seed;
    } else if (p == 0) {
      pred = values.row(idx - line).transpose();
    } else if (p == 1) {
      pred = values.row(idx - 1).transpose();
    } else {
      pred = (2.0 * values.row(idx - 1) - values.row(idx - 2)).transpose();
    }

    const double det_start = p > 0 ? std::abs(dets[static_cast<std::size_t>(idx - p)]) : 0.0;
    const double det_prev = p > 0 ? dets[static_cast<std::size_t>(idx - 1)] : 0.0;
    auto fail_near_fold = [&]() {
      return p > 0 && std::abs(det_prev) < 0.1 * det_start;
    };

    Vector y;
    try {
      y = solve_on_critical(map, chart, x, pred, opts);
    } catch (const NumericalError& e) {
      if (e.kind() == ErrorKind::NewtonDiverged && fail_near_fold()) {
        throw NumericalError(ErrorKind::SingularJacobian,
                             "branch folds before x = " + describe(x) + " (|det D_y f| fell to " +
                                 format_number(std::abs(det_prev)) + ")");
      }
      throw;
    }

    const double det = det_at(x, y);
    bool jumped = false;
    if (p >= 2) {
      // The secant predictor errs by about one second difference.
      double scale = 2.0 * max_abs((values.row(idx - 1) - values.row(idx - 2)).transpose());
      if (p >= 3) {
        scale += 4.0 * max_abs((values.row(idx - 1) - 2.0 * values.row(idx - 2) + values.row(idx - 3))
                                   .transpose());
      }
      jumped = max_abs(y - pred) > scale + 1e-10 * (1.0 + max_abs(y));
    }
    if (p > 0 && ((det < 0.0) != (det_prev < 0.0) || (jumped && fail_near_fold()))) {
      throw NumericalError(ErrorKind::SingularJacobian,
                           "branch folds before x = " + describe(x) + " (|det D_y f| fell to " +
                               format_number(std::abs(det_prev)) + ")");
    }
    if (jumped) {
      throw NumericalError(ErrorKind::NewtonDiverged,
                           "continuation jumped to another branch at x = " + describe(x));
    }
    values.row(idx) = y.transpose();
    dets[static_cast<std::size_t>(idx)] = det;
  }
  return GraphManifold(chart, std::move(axes), std::move(values), 0.0);
}

CurveOnS critical_curve(const FastSlowMap& map, const Chart& chart, UniformAxis axis,
                        const Vector& y_seed, const NewtonOptions& opts) {
  const GraphManifold graph = solve_critical_graph(map, chart, {axis}, y_seed, opts);
  CurveOnS curve;
  for (int i = 0; i < axis.count; ++i) curve.params.push_back(axis.node(i));
  curve.point = [map, chart, graph, axis, opts](double s) {
    const double h = axis.step();
    int i = h > 0 ? static_cast<int>(std::lround((s - axis.lo) / h)) : 0;
    i = std::clamp(i, 0, axis.count - 1);
    Vector x(1);
    x[0] = s;
    const Vector y = solve_on_critical(map, chart, x, graph.values().row(i).transpose(), opts);
    return chart.compose(x, y);
  };
  return curve;
}

Matrix projection(const FastSlowMap& map, const Vector& z, double fold_tol) {
  const Matrix N = map.N(z);
  const Matrix Df = map.Df(z);
  const Matrix DfN = Df * N;
  const Eigen::Index m = DfN.rows();
  double smallest = std::abs(DfN(0, 0));
  if (m > 1) {
    const Eigen::EigenSolver<Matrix> es(DfN, false);
    smallest = es.eigenvalues().cwiseAbs().minCoeff();
  }
  if (!(smallest >= fold_tol)) {
    throw NumericalError(ErrorKind::FoldSingularity,
                         "Df N has an eigenvalue of modulus " + format_number(smallest) +
                             " at z = " + describe(z));
  }
  return Matrix::Identity(map.dim(), map.dim()) - N * DfN.partialPivLu().solve(Df);
}

GraphManifold slow_manifold_first_order(const FastSlowMap& map, const GraphManifold& critical,
                                        double eps) {
  Matrix values = critical.values();
  if (eps == 0.0) return critical.with_values(std::move(values), 0.0);
  const Chart& chart = critical.chart();
  for (int j = 0; j < critical.node_count(); ++j) {
    const Vector z = critical.point_at_node(j);
    const Matrix Df = map.Df(z);
    const Matrix DfN = Df * map.N(z);
    // Fold check shares the projection's criterion.
    (void)projection(map, z);
    const Vector rhs = DfN.partialPivLu().solve(Df * map.G(z, 0.0));
    const Vector corr = columns(Df, chart.y_idx).partialPivLu().solve(rhs);
    values.row(j) -= eps * corr.transpose();
  }
  return critical.with_values(std::move(values), eps);
}

namespace {

struct NodeSolve {
  bool inside = false;
  Vector y;
};

// Converged when the Newton step falls below this relative size; one more
// evaluation then fixes the value to quadratic accuracy.
constexpr double kStepTol = 1e-11;

NodeSolve forward_node(const FastSlowMap& map, const GraphManifold& g, const Vector& xj,
                       double eps, int max_iter) {
  const Chart& chart = g.chart();
  Vector z = g.point(xj);
  Vector Hz = map.evaluate(z, eps);
  Vector x = xj - (chart.x_of(Hz) - xj);
  for (int it = 0; it < max_iter; ++it) {
    z = g.point(x);
    Hz = map.evaluate(z, eps);
    const Vector r = chart.x_of(Hz) - xj;
    const Matrix DH = map.jacobian(z, eps);
    const Matrix J = chart.select(DH, true, true) + chart.select(DH, true, false) * g.derivative(x);
    const Vector dx = J.partialPivLu().solve(-r);
    if (!dx.allFinite()) break;
    x += dx;
    if (max_abs(dx) <= kStepTol * (1.0 + max_abs(x))) {
      Hz = map.evaluate(g.point(x), eps);
      const double slack = 1e-12 * (1.0 + max_abs(x));
      return {g.inside(x, slack), chart.y_of(Hz)};
    }
  }
  throw NumericalError(ErrorKind::NewtonDiverged,
                       "graph-transform pre-image did not converge at x = " + describe(xj));
}

NodeSolve backward_node(const FastSlowMap& map, const GraphManifold& g, const Vector& xj,
                        const Vector& seed, double eps, int max_iter) {
  const Chart& chart = g.chart();
  Vector y = seed;
  for (int it = 0; it < max_iter; ++it) {
    const Vector z = chart.compose(xj, y);
    const Vector Hz = map.evaluate(z, eps);
    const Vector xi = chart.x_of(Hz);
    const Vector F = chart.y_of(Hz) - g.value(xi);
    const Matrix DH = map.jacobian(z, eps);
    const Matrix J = chart.select(DH, false, false) - g.derivative(xi) * chart.select(DH, true, false);
    const Vector dy = J.partialPivLu().solve(-F);
    if (!dy.allFinite()) break;
    y += dy;
    if (max_abs(dy) <= kStepTol * (1.0 + max_abs(y))) {
      const Vector image = chart.x_of(map.evaluate(chart.compose(xj, y), eps));
      const double slack = 1e-12 * (1.0 + max_abs(image));
      return {g.inside(image, slack), y};
    }
  }
  throw NumericalError(ErrorKind::NewtonDiverged,
                       "graph-transform inverse solve did not converge at x = " + describe(xj));
}

std::vector<int> axis_strides(const GraphManifold& g) {
  const auto& axes = g.axes();
  std::vector<int> strides(axes.size(), 1);
  for (int a = static_cast<int>(axes.size()) - 2; a >= 0; --a) {
    strides[static_cast<std::size_t>(a)] =
        strides[static_cast<std::size_t>(a + 1)] * axes[static_cast<std::size_t>(a + 1)].count;
  }
  return strides;
}

// Nearest solved node of every node, by breadth-first search over the grid.
std::vector<int> nearest_solved(const GraphManifold& g, const std::vector<char>& solved) {
  const int total = g.node_count();
  const auto& axes = g.axes();
  const auto strides = axis_strides(g);
  std::vector<int> source(static_cast<std::size_t>(total), -1);
  std::deque<int> queue;
  for (int j = 0; j < total; ++j) {
    if (solved[static_cast<std::size_t>(j)]) {
      source[static_cast<std::size_t>(j)] = j;
      queue.push_back(j);
    }
  }
  if (queue.empty()) {
    throw NumericalError(ErrorKind::DomainExit, "every node's transform image left the grid");
  }
  while (!queue.empty()) {
    const int j = queue.front();
    queue.pop_front();
    const auto mi = g.node_multi_index(j);
    for (std::size_t a = 0; a < axes.size(); ++a) {
      for (int step : {-1, 1}) {
        const int q = mi[a] + step;
        if (q < 0 || q >= axes[a].count) continue;
        const int nb = j + step * strides[a];
        if (source[static_cast<std::size_t>(nb)] >= 0) continue;
        source[static_cast<std::size_t>(nb)] = source[static_cast<std::size_t>(j)];
        queue.push_back(nb);
      }
    }
  }
  return source;
}

// Unsolved nodes take the correction (value minus start value) of their
// nearest solved node after this sweep's update, so the graph stays
// continuous across the edge of the solved region.
void fill_updates(const GraphManifold& current, const GraphManifold& start,
                  const std::vector<char>& solved, Matrix& update) {
  const auto source = nearest_solved(current, solved);
  for (int j = 0; j < current.node_count(); ++j) {
    if (solved[static_cast<std::size_t>(j)]) continue;
    const int s = source[static_cast<std::size_t>(j)];
    update.row(j) = current.values().row(s) + update.row(s) - start.values().row(s) +
                    start.values().row(j) - current.values().row(j);
  }
}

}  // namespace

SlowManifoldResult slow_manifold_numeric(const FastSlowMap& map, const GraphManifold& critical,
                                         double eps, Direction direction,
                                         const GraphTransformOptions& opts) {
  const GraphManifold start = slow_manifold_first_order(map, critical, eps);
  GraphManifold current = start;
  const int total = current.node_count();
  double prev_update = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    Matrix update = Matrix::Zero(total, current.value_dim());
    std::vector<char> solved(static_cast<std::size_t>(total), 0);
    for (int j = 0; j < total; ++j) {
      const Vector xj = current.node(j);
      const Vector old = current.values().row(j).transpose();
      const NodeSolve s = direction == Direction::Forward
                              ? forward_node(map, current, xj, eps, opts.newton_max_iter)
                              : backward_node(map, current, xj, old, eps, opts.newton_max_iter);
      if (s.inside) {
        solved[static_cast<std::size_t>(j)] = 1;
        update.row(j) = (s.y - old).transpose();
      }
    }
    fill_updates(current, start, solved, update);
    const double norm = update.size() ? update.cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(norm)) {
      throw NumericalError(ErrorKind::NonFinite, "graph-transform update is not finite");
    }
    current = current.with_values(current.values() + update, eps);
    if (norm < opts.tol) {
      SlowManifoldResult out{current, sweep, norm, {}};
      out.extrapolated.reserve(solved.size());
      for (char s : solved) out.extrapolated.push_back(!s);
      return out;
    }
    growth = norm > prev_update ? growth + 1 : 0;
    if (growth >= opts.growth_limit) {
      throw NumericalError(ErrorKind::NotContracting,
                           "graph-transform update grew for " + std::to_string(growth) +
                               " consecutive sweeps (last " + format_number(norm) + ")");
    }
    prev_update = norm;
  }
  throw NumericalError(ErrorKind::MaxIterations,
                       "graph transform did not converge in " + std::to_string(opts.max_sweeps) +
                           " sweeps");
}

Vector invariance_residuals(const FastSlowMap& map, const GraphManifold& graph, double eps) {
  const Chart& chart = graph.chart();
  Vector out(graph.node_count());
  for (int j = 0; j < graph.node_count(); ++j) {
    const Vector Hz = map.evaluate(graph.point_at_node(j), eps);
    const Vector xi = chart.x_of(Hz);
    if (!graph.inside(xi)) {
      out[j] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    out[j] = max_abs(chart.y_of(Hz) - graph.value(xi));
  }
  return out;
}

double graph_distance(const GraphManifold& graph, const Vector& z) {
  const Chart& chart = graph.chart();
  return max_abs(chart.y_of(z) - graph.value(chart.x_of(z)));
}

}  // namespace fastslow
