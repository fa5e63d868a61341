#include "fastslow/map.hpp"
#include "fastslow/models.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace fastslow;

namespace {

FastSlowMap small_linear() {
  Matrix A(1, 1), D(1, 1);
  A << 2.0;
  D << -0.5;
  Vector g(2);
  g << 1.0, -3.0;
  return linear_test_map(A, D, g);
}

}  // namespace

TEST_CASE("evaluate is z + N f + eps G") {
  const auto map = small_linear();
  Vector z(2);
  z << 0.3, 1.1;
  const double eps = 0.01;
  const Vector h = map.evaluate(z, eps);
  // y - A x = 0.5, so y moves by D * 0.5.
  CHECK(h[0] == doctest::Approx(0.3 + eps * 1.0).epsilon(1e-15));
  CHECK(h[1] == doctest::Approx(1.1 - 0.25 - eps * 3.0).epsilon(1e-15));
}

TEST_CASE("analytic jacobian agrees with finite differences") {
  const auto map = chialvo(ChialvoParams{});
  for (double v : {0.5, 1.7, 3.4}) {
    Vector z(2);
    z << 1.2, v;
    const Matrix J = map.jacobian(z, 1e-2);
    const Matrix Jfd = map.jacobian_fd(z, 1e-2);
    CHECK((J - Jfd).lpNorm<Eigen::Infinity>() < 1e-7);
  }
}

TEST_CASE("iterate stops at the first iterate outside the domain") {
  const auto map = small_linear().with_domain(Box{Vector::Constant(2, -1.0), Vector::Constant(2, 1.0)});
  // From the origin on S, x drifts by eps per step.
  const auto traj = iterate(map, Vector(Vector::Constant(2, 0.0)), 0.5, 100);
  REQUIRE(traj.exit_index.has_value());
  CHECK(traj.size() == *traj.exit_index + 1);
  CHECK(traj.points.back().flags == point_flags::kDomainExit);
  CHECK(traj.points.front().flags == 0u);
  CHECK_FALSE(map.domain().contains(traj.points.back().z));
}

TEST_CASE("non-finite evaluation throws") {
  MapFunctions fns;
  fns.N = [](const Vector&) { return (Matrix(2, 1) << 0.0, 1.0).finished(); };
  fns.f = [](const Vector& z) { return Vector::Constant(1, std::log(z[1])); };
  fns.G = [](const Vector& z, double) { return Vector::Zero(z.size()); };
  const FastSlowMap map("log", 2, 1, fns, Box::unbounded(2));
  try {
    map.evaluate(Vector::Constant(2, -1.0), 0.0);
    FAIL("expected NonFinite");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == ErrorKind::NonFinite);
  }
}

TEST_CASE("trajectory CSV carries the schema comment and header") {
  const auto traj = iterate(small_linear(), Vector::Zero(2), 0.1, 2);
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# schema: 1", 0) == 0);
  std::getline(in, line);
  CHECK(line == "step,z_0,z_1,dist_to_S_eps,flags");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("numbers print with 17 significant digits") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(2.0) == "2");
  CHECK(std::stod(format_number(M_PI)) == M_PI);
}
