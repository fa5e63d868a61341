#include "fastslow/models.hpp"
#include "fastslow/spectral.hpp"

#include <doctest.h>

#include <cmath>

using namespace fastslow;
namespace cx = chialvo_exact;

namespace {

Vector wv(double w, double v) { return (Vector(2) << w, v).finished(); }

}  // namespace

TEST_CASE("Chialvo update") {
  const ChialvoParams p;
  const auto map = chialvo(p);
  const double w = 0.8, v = 1.7, eps = 0.01;
  const Vector h = map.evaluate(wv(w, v), eps);
  CHECK(h[0] == doctest::Approx(w + eps * (p.c - p.b * v - p.a * w)).epsilon(1e-15));
  CHECK(h[1] == doctest::Approx(v * v * std::exp(w - v) + p.k).epsilon(1e-15));
}

TEST_CASE("Chialvo closed forms are consistent") {
  for (double k : {0.0, 0.01, 0.035, 0.1}) {
    ChialvoParams p;
    p.k = k;
    const auto map = chialvo(p);
    for (double v : {0.5, 1.3, 2.2, 3.7}) {
      if (v <= k) continue;
      const Vector z = wv(cx::phi0(p, v), v);
      CHECK(std::abs(map.f(z)[0]) < 1e-14);
      const auto mu = nontrivial_multipliers(map, z);
      CHECK(mu[0].real() == doctest::Approx(cx::multiplier(p, v)).epsilon(1e-12));
    }
    CHECK(cx::multiplier(p, cx::v_plus(p)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cx::multiplier(p, cx::v_flip(p)) == doctest::Approx(-1.0).epsilon(1e-12));
    if (k > 0) CHECK(cx::multiplier(p, cx::v_minus(p)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("parameter validation") {
  ChialvoParams p;
  p.k = chialvo_k_limit();
  CHECK_THROWS_AS(validate(p), NumericalError);
  p.k = -0.01;
  CHECK_THROWS_AS(validate(p), NumericalError);
  p = ChialvoParams{};
  p.a = -1.0;
  CHECK_THROWS_AS(chialvo(p), NumericalError);
  CHECK(chialvo_k_limit() == doctest::Approx(3.0 - 2.0 * std::sqrt(2.0)));
}

TEST_CASE("standard-form Chialvo reproduces the general form") {
  const ChialvoParams p;
  const auto general = chialvo(p);
  const auto standard = from_standard_form("standard:chialvo", chialvo_standard_form(p));
  for (double eps : {0.0, 1e-3, 1e-2})
    for (double v : {0.4, 1.8, 3.3}) {
      const Vector z = wv(1.1, v);
      CHECK((general.evaluate(z, eps) - standard.evaluate(z, eps)).lpNorm<Eigen::Infinity>() < 1e-12);
      CHECK((general.jacobian(z, eps) - standard.jacobian(z, eps)).lpNorm<Eigen::Infinity>() < 1e-6);
    }
}

TEST_CASE("Euler discretization") {
  const LinearSlowOdeParams p;
  const auto ode = linear_slow_ode(p);
  const double h = 0.2, eps = 0.01;
  const auto map = euler_discretize(ode, h);
  Vector z(3);
  z << 0.3, 0.2, -0.1;
  const Vector field = ode.field.N(z) * ode.field.f(z) + eps * ode.field.G(z, eps);
  CHECK((map.evaluate(z, eps) - (z + h * field)).lpNorm<Eigen::Infinity>() < 1e-15);
  CHECK_THROWS_AS(euler_discretize(ode, 0.0), NumericalError);

  // The closed-form Euler manifold is invariant.
  for (double x : {-0.7, 0.0, 0.4}) {
    Vector on(3);
    on << x, linear_slow_ode_euler_manifold(p, x, eps, h);
    const Vector img = map.evaluate(on, eps);
    CHECK((img.tail(2) - linear_slow_ode_euler_manifold(p, img[0], eps, h)).lpNorm<Eigen::Infinity>() < 1e-14);
  }
}

TEST_CASE("Euler hyperbolicity boundary") {
  CHECK(*euler_hyperbolicity_boundary(Complex(-1.0, 0.0)) == doctest::Approx(2.0));
  CHECK(*euler_hyperbolicity_boundary(Complex(-2.0, 0.0)) == doctest::Approx(1.0));
  CHECK(*euler_hyperbolicity_boundary(Complex(-1.0, 1.0)) == doctest::Approx(1.0));
  CHECK_FALSE(euler_hyperbolicity_boundary(Complex(0.5, 1.0)).has_value());
  CHECK_THROWS_AS(euler_hyperbolicity_boundary(Complex(0.0, 0.0)), NumericalError);
}

TEST_CASE("equilibrium uniqueness test") {
  ChialvoParams p;
  p.c = 3.5;
  for (double k : {0.07, 0.035}) {
    p.k = k;
    CHECK(check_unique_equilibrium(p).unique);
  }
  p.k = 0.02;
  const auto check = check_unique_equilibrium(p);
  CHECK_FALSE(check.unique);
  CHECK(check.roots.size() == 2);
}

TEST_CASE("linear test map geometry") {
  Matrix A(1, 1), D(1, 1);
  A << 3.0;
  D << -0.25;
  const auto map = linear_test_map(A, D, Vector::Ones(2));
  CHECK(map.slow_dim() == 1);
  CHECK(map.fast_dim() == 1);
  CHECK(std::abs(map.f(wv(1.0, 3.0))[0]) == 0.0);
  CHECK_THROWS_AS(linear_test_map(A, Matrix::Identity(2, 2), Vector::Ones(2)), NumericalError);
}
