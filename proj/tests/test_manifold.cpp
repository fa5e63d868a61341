#include "fastslow/manifold.hpp"
#include "fastslow/models.hpp"

#include <doctest.h>

#include <cmath>

using namespace fastslow;

namespace {

struct LinearCase {
  Matrix A{2, 1};
  Matrix D{2, 2};
  Vector g{3};
  LinearCase() {
    A << 1.5, -0.5;
    D << -0.6, 0.1, 0.0, -1.3;
    g << 1.0, 0.4, -0.2;
  }
  // Invariant graph y = A x + c with D c = eps (A g_x - g_y).
  Vector offset(double eps) const {
    return D.partialPivLu().solve(eps * (A * g.head(1) - g.tail(2)));
  }
};

bool throws_kind(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const NumericalError& e) {
    return e.kind() == kind;
  }
  return false;
}

}  // namespace

TEST_CASE("critical graph of a linear map is y = A x") {
  const LinearCase lc;
  const auto map = linear_test_map(lc.A, lc.D, lc.g);
  const auto S = solve_critical_graph(map, Chart::leading(3, 1), {UniformAxis{-1, 1, 21}}, Vector::Zero(2));
  for (int j = 0; j < S.node_count(); ++j) {
    const double x = S.node(j)[0];
    CHECK((S.values().row(j).transpose() - lc.A.col(0) * x).norm() < 1e-13);
  }
}

TEST_CASE("first-order and numeric slow manifolds of a linear map are exact") {
  const LinearCase lc;
  const auto map = linear_test_map(lc.A, lc.D, lc.g);
  const auto S = solve_critical_graph(map, Chart::leading(3, 1), {UniformAxis{-1, 1, 41}}, Vector::Zero(2));
  const double eps = 0.02;
  const auto first = slow_manifold_first_order(map, S, eps);
  const auto num = slow_manifold_numeric(map, S, eps, Direction::Forward);
  const Vector c = lc.offset(eps);
  for (int j = 0; j < S.node_count(); ++j) {
    const Vector exact = lc.A.col(0) * S.node(j)[0] + c;
    CHECK((first.values().row(j).transpose() - exact).lpNorm<Eigen::Infinity>() < 1e-13);
    CHECK((num.graph.values().row(j).transpose() - exact).lpNorm<Eigen::Infinity>() < 1e-11);
  }
  const Vector r = invariance_residuals(map, num.graph, eps);
  for (Eigen::Index j = 0; j < r.size(); ++j)
    if (std::isfinite(r[j])) CHECK(r[j] < 1e-10);
  Vector z(3);
  z << 0.1, 0.0, 0.0;
  CHECK(graph_distance(num.graph, z) == doctest::Approx((lc.A.col(0) * 0.1 + c).lpNorm<Eigen::Infinity>()).epsilon(1e-9));
}

TEST_CASE("Euler map slow manifold matches its closed form") {
  const LinearSlowOdeParams p;
  const double h = 0.1, eps = 5e-3;
  const auto map = euler_discretize(linear_slow_ode(p), h);
  const Chart chart{{0}, {1, 2}};
  const auto S = solve_critical_graph(map, chart, {UniformAxis{-1, 1, 201}}, linear_slow_ode_manifold(p, -1, 0));
  const auto num = slow_manifold_numeric(map, S, eps, Direction::Forward);
  double worst = 0.0;
  for (int j = 0; j < S.node_count(); ++j) {
    const Vector exact = linear_slow_ode_euler_manifold(p, S.node(j)[0], eps, h);
    worst = std::max(worst, (num.graph.values().row(j).transpose() - exact).lpNorm<Eigen::Infinity>());
  }
  CHECK(worst < 1e-10);
  const Vector r = invariance_residuals(map, num.graph, eps);
  for (Eigen::Index j = 0; j < r.size(); ++j)
    if (std::isfinite(r[j])) CHECK(r[j] < 1e-10);
}

TEST_CASE("backward graph transform on the repelling Chialvo branch is invariant") {
  const ChialvoParams p;
  const auto map = chialvo(p);
  Vector seed(1);
  seed << chialvo_exact::phi0(p, 3.2);
  const auto S = solve_critical_graph(map, chialvo_chart(), {UniformAxis{3.2, 4.5, 200}}, seed);
  const double eps = 1e-3;
  const auto num = slow_manifold_numeric(map, S, eps, Direction::Backward);
  const Vector r = invariance_residuals(map, num.graph, eps);
  for (int j = 0; j < S.node_count(); ++j)
    if (std::isfinite(r[j]) && !num.extrapolated[static_cast<std::size_t>(j)]) CHECK(r[j] < 1e-10);
  // Matches the first-order formula to O(eps^2).
  for (int j = 0; j < S.node_count(); j += 20) {
    const double v = S.node(j)[0];
    CHECK(std::abs(num.graph.values()(j, 0) - chialvo_exact::first_order_w(p, v, eps)) < 1e-4);
  }
}

TEST_CASE("forward transform on a repelling branch does not converge") {
  const ChialvoParams p;
  const auto map = chialvo(p);
  Vector seed(1);
  seed << chialvo_exact::phi0(p, 3.2);
  const auto S = solve_critical_graph(map, chialvo_chart(), {UniformAxis{3.2, 4.5, 100}}, seed);
  GraphTransformOptions opts;
  opts.max_sweeps = 300;
  CHECK_THROWS_AS(slow_manifold_numeric(map, S, 1e-3, Direction::Forward, opts), NumericalError);
}

TEST_CASE("first-order Chialvo manifold matches the closed form") {
  const ChialvoParams p;
  const auto map = chialvo(p);
  Vector seed(1);
  seed << chialvo_exact::phi0(p, 1.2);
  const auto S = solve_critical_graph(map, chialvo_chart(), {UniformAxis{1.2, 2.8, 50}}, seed);
  const auto first = slow_manifold_first_order(map, S, 1e-3);
  for (int j = 0; j < S.node_count(); ++j) {
    const double v = S.node(j)[0];
    CHECK(S.values()(j, 0) == doctest::Approx(chialvo_exact::phi0(p, v)).epsilon(1e-13));
    CHECK(first.values()(j, 0) == doctest::Approx(chialvo_exact::first_order_w(p, v, 1e-3)).epsilon(1e-11));
  }
}

TEST_CASE("projection is the oblique projector along N onto ker Df") {
  const ChialvoParams p;
  const auto map = chialvo(p);
  for (double v : {0.05, 0.5, 1.5, 2.5, 4.0}) {
    Vector z(2);
    z << chialvo_exact::phi0(p, v), v;
    const Matrix P = projection(map, z);
    CHECK((P - chialvo_exact::projection(p, v)).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((P * P - P).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((P * map.N(z)).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((map.Df(z) * P).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  for (double v : {chialvo_exact::v_minus(p), chialvo_exact::v_plus(p)}) {
    Vector z(2);
    z << chialvo_exact::phi0(p, v), v;
    CHECK(throws_kind(ErrorKind::FoldSingularity, [&] { projection(map, z); }));
  }
}
