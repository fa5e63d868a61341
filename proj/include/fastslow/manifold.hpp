#pragma once

#include "fastslow/graph.hpp"
#include "fastslow/map.hpp"
#include "fastslow/spectral.hpp"

#include <vector>

namespace fastslow {

struct NewtonOptions {
  int max_iter = 50;
  double tol = 1e-13;        // max-norm residual accepted outright
  double floor_tol = 1e-12;  // residual accepted once steps stall at round-off
  double det_floor = 1e-12;  // |det D_y f| below this is a chart fold
};

/// Newton solve of f(chart(x, y)) = 0 for y at fixed x. Returns y.
Vector solve_on_critical(const FastSlowMap& map, const Chart& chart, const Vector& x,
                         const Vector& y_seed, const NewtonOptions& opts = {});

/// Critical manifold as a graph over a uniform grid of chart x-coordinates.
/// Nodes are solved in storage order; each seeds (with a secant predictor along
/// the innermost axis) the next.
GraphManifold solve_critical_graph(const FastSlowMap& map, const Chart& chart,
                                   std::vector<UniformAxis> axes, const Vector& y_seed,
                                   const NewtonOptions& opts = {});

/// One-parameter sampling of S through a 1-D critical graph; point(s) re-solves
/// at s from the nearest node so that the result sits on S to solver accuracy.
CurveOnS critical_curve(const FastSlowMap& map, const Chart& chart, UniformAxis axis,
                        const Vector& y_seed, const NewtonOptions& opts = {});

/// I - N (Df N)^{-1} Df at z. Throws FoldSingularity when Df N has an
/// eigenvalue of modulus below fold_tol.
Matrix projection(const FastSlowMap& map, const Vector& z, double fold_tol = 1e-10);

/// phi_0 - eps (D_y f)^{-1} (Df N)^{-1} Df G(., 0) at every node.
GraphManifold slow_manifold_first_order(const FastSlowMap& map, const GraphManifold& critical,
                                        double eps);

enum class Direction { Forward, Backward };

struct GraphTransformOptions {
  double tol = 1e-12;
  int max_sweeps = 10000;
  int growth_limit = 5;  // consecutive increasing updates before NotContracting
  int newton_max_iter = 50;
};

struct SlowManifoldResult {
  GraphManifold graph;
  int sweeps = 0;
  double last_update = 0.0;
  /// Nodes whose pre-image (forward) or image (backward) left the grid on the
  /// final sweep; they carry the correction of the nearest solved node.
  std::vector<bool> extrapolated;
};

/// Invariant graph by fixed-point iteration of the graph transform, started
/// from the first-order formula. Forward pulls the graph through the map
/// (attracting branches); backward through its inverse (repelling branches).
SlowManifoldResult slow_manifold_numeric(const FastSlowMap& map, const GraphManifold& critical,
                                         double eps, Direction direction,
                                         const GraphTransformOptions& opts = {});

/// |H^y(z) - phi(H^x(z))| at every node z = (x, phi(x)); NaN where the image
/// leaves the grid.
Vector invariance_residuals(const FastSlowMap& map, const GraphManifold& graph, double eps);

/// Distance of z from the graph, measured in the y-coordinates at fixed x.
double graph_distance(const GraphManifold& graph, const Vector& z);

}  // namespace fastslow
