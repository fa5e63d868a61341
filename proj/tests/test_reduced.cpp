#include "fastslow/manifold.hpp"
#include "fastslow/models.hpp"
#include "fastslow/reduced.hpp"

#include <doctest.h>

#include <cmath>

using namespace fastslow;
namespace cx = chialvo_exact;

namespace {

Vector on_s(const ChialvoParams& p, double v) { return (Vector(2) << cx::phi0(p, v), v).finished(); }

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const NumericalError& e) {
    return e.kind();
  }
  FAIL("no exception");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("reduced step matches the closed form on Chialvo") {
  const ChialvoParams p;
  const auto map = chialvo(p);
  for (double v : {0.5, 1.5, 2.5, 4.0})
    for (double eps : {1e-3, 1e-2}) {
      const Vector r = reduced_step(map, on_s(p, v), eps);
      CHECK(r[1] == doctest::Approx(cx::reduced_v(p, v, eps)).epsilon(1e-13));
    }
}

TEST_CASE("reduced step of a linear map stays on S") {
  Matrix A(1, 1), D(1, 1);
  A << 2.0;
  D << -0.5;
  const auto map = linear_test_map(A, D, (Vector(2) << 1.0, 0.3).finished());
  const Vector z = (Vector(2) << 0.4, 0.8).finished();
  const Vector r = reduced_step(map, z, 0.05);
  CHECK(std::abs(map.f(r)[0]) < 1e-15);
  CHECK(r[0] == doctest::Approx(0.45));
  const Vector m = mth_iterate_reduced(map, z, 0.05, 4);
  CHECK(m[0] == doctest::Approx(0.6));
  CHECK(kind_of([&] { mth_iterate_reduced(map, z, 0.05, 40); }) == ErrorKind::ParamOutOfRange);
  const auto orbit = reduced_orbit(map, Chart::leading(2, 1), z, 0.05, 4);
  CHECK(orbit.back()[0] == doctest::Approx(0.6));
  CHECK(orbit.back()[1] == doctest::Approx(1.2));
}

TEST_CASE("fixed points and their stability") {
  ChialvoParams p;
  p.c = 7.0;
  p.k = 0.07;
  const auto map = chialvo(p);
  const double v0 = chialvo_equilibrium_v(p);
  const auto fp = find_fixed_point(map, on_s(p, v0), 1e-3);
  CHECK(fp.stability == FixedPointReport::Stability::Stable);
  CHECK(fp.residual < 1e-12);
  CHECK((map.evaluate(fp.z, 1e-3) - fp.z).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(std::abs(fp.z[1] - v0) < 1e-2);

  const auto degenerate = find_fixed_point(map, on_s(p, 2.0) + Vector::Constant(2, 1e-3), 0.0);
  CHECK(degenerate.degenerate);
  CHECK(std::abs(map.f(degenerate.z)[0]) < 1e-12);
}

TEST_CASE("equilibria of the drift") {
  ChialvoParams p;
  p.c = 3.5;
  p.k = 0.02;
  CHECK(kind_of([&] { chialvo_equilibrium_v(p); }) == ErrorKind::AssumptionViolated);
  const auto roots = chialvo_equilibria(p);
  REQUIRE(roots.size() == 1);
  CHECK(std::abs(cx::drift(p, roots[0])) < 1e-10);
}

TEST_CASE("inverse step undoes the map") {
  const ChialvoParams p;
  const auto map = chialvo(p);
  const Vector z = (Vector(2) << 1.3, 3.6).finished();
  const Vector img = map.evaluate(z, 1e-3);
  // The map is not injective; seed near the wanted preimage.
  const Vector back = inverse_step(map, img, 1e-3, z + Vector::Constant(2, 0.05));
  CHECK((back - z).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("fiber probes contract at the fast multiplier of a linear map") {
  Matrix A(1, 1), D(1, 1);
  A << 1.0;
  D << -0.6;
  const auto map = linear_test_map(A, D, (Vector(2) << 1.0, 0.0).finished());
  const auto S = solve_critical_graph(map, Chart::leading(2, 1), {UniformAxis{-1, 3, 81}}, Vector::Zero(1));
  const double eps = 1e-2;
  const auto slow = slow_manifold_numeric(map, S, eps, Direction::Forward);
  const Vector base = slow.graph.point(Vector::Constant(1, 0.0));
  const auto r = fiber_rate_probe(map, slow.graph, base, (Vector(2) << 0.0, 1e-3).finished(), 15, false, eps);
  REQUIRE(r.ratios.size() > 5);
  for (double q : r.ratios) CHECK(q == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(r.chi == doctest::Approx(0.4).epsilon(1e-6));
}
