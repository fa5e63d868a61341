#include "fastslow/poincare.hpp"
#include "fastslow/spectral.hpp"

#include <doctest.h>

#include <cmath>

using namespace fastslow;

namespace {

Vector p_of(double x, double alpha) { return (Vector(2) << x, alpha).finished(); }

}  // namespace

TEST_CASE("layer cycles of the Hopf oscillator keep their radius") {
  const auto ode = hopf_oscillator({});
  const double a = 0.4;
  Vector s(3);
  s << std::sqrt(a), 0.0, a;
  const auto path = integrate(ode, s, 0.0, 2.0 * M_PI);
  for (const auto& st : path.states) CHECK(std::hypot(st[0], st[1]) == doctest::Approx(std::sqrt(a)).epsilon(1e-9));
  CHECK(path.t.back() == doctest::Approx(2.0 * M_PI));
}

TEST_CASE("return map on the section") {
  const auto ode = hopf_oscillator({});
  const auto sec = hopf_section();
  const auto rec = return_map(ode, sec, p_of(std::sqrt(0.5), 0.5), 0.0);
  CHECK(rec.time == doctest::Approx(2.0 * M_PI).epsilon(1e-9));
  CHECK((rec.landing - rec.start).lpNorm<Eigen::Infinity>() < 1e-9);
  CHECK(std::abs(rec.section_residual) < 1e-12);

  // Off the cycle the radius relaxes towards sqrt(alpha); the derivative matches differences.
  const auto r0 = return_map(ode, sec, p_of(0.9, 0.5), 0.0);
  CHECK(r0.landing[0] < 0.9);
  CHECK(r0.landing[0] > std::sqrt(0.5));
  const double h = 1e-6;
  const auto rp = return_map(ode, sec, p_of(0.9 + h, 0.5), 0.0);
  const auto rm = return_map(ode, sec, p_of(0.9 - h, 0.5), 0.0);
  CHECK(r0.derivative(0, 0) == doctest::Approx((rp.landing[0] - rm.landing[0]) / (2 * h)).epsilon(1e-5));

  const Vector full = lift_to_section(sec, p_of(0.7, 0.3));
  CHECK(full.size() == 3);
  CHECK(full[1] == 0.0);
  CHECK(section_coordinates(sec, full) == p_of(0.7, 0.3));
}

TEST_CASE("critical curve, multiplier and averaged drift") {
  const HopfParams hp;
  const auto ode = hopf_oscillator(hp);
  const auto sec = hopf_section();
  const auto map = build_poincare_map(ode, sec);
  for (double a : {0.3, 0.55, 0.7}) {
    const Vector pt = poincare_critical_point(map, a, Vector::Constant(1, 0.6));
    CHECK(pt[0] == doctest::Approx(std::sqrt(a)).epsilon(1e-9));
    CHECK(pt[1] == a);
    const auto mu = nontrivial_multipliers(map, pt);
    CHECK(mu[0].real() == doctest::Approx(std::exp(-4.0 * M_PI * a)).epsilon(1e-8));
    const double g = averaged_g(ode, sec, map, a, Vector::Constant(1, 0.6));
    CHECK(g == doctest::Approx(2.0 * M_PI * (hp.a_g - a)).epsilon(1e-9));
  }
}

TEST_CASE("alternative drifts") {
  const auto sec = hopf_section();
  HopfParams hp;
  hp.drift = "one";
  const auto ode = hopf_oscillator(hp);
  const auto map = build_poincare_map(ode, sec);
  CHECK(averaged_g(ode, sec, map, 0.5, Vector::Constant(1, 0.7)) == doctest::Approx(2.0 * M_PI).epsilon(1e-9));
  // The first-order slow drift of the return map equals the averaged drift.
  const Vector pt = poincare_critical_point(map, 0.5, Vector::Constant(1, 0.7));
  CHECK(map.G(pt, 0.0)[1] == doctest::Approx(2.0 * M_PI).epsilon(1e-4));
  hp.drift = "x";
  const auto odex = hopf_oscillator(hp);
  CHECK(std::abs(averaged_g(odex, sec, build_poincare_map(odex, sec), 0.5, Vector::Constant(1, 0.7))) < 1e-9);
  hp.drift = "cubic";
  CHECK_THROWS_AS(hopf_oscillator(hp), NumericalError);
}

TEST_CASE("limit-cycle root of the averaged drift") {
  const HopfParams hp;
  const auto ode = hopf_oscillator(hp);
  const auto sec = hopf_section();
  const auto map = build_poincare_map(ode, sec);
  const auto roots = limit_cycle_condition(ode, sec, map, 0.3, 0.7, 9, Vector::Constant(1, 0.6));
  REQUIRE(roots.size() == 1);
  CHECK(roots[0].alpha == doctest::Approx(hp.a_g).epsilon(1e-9));
  CHECK(roots[0].derivative == doctest::Approx(-2.0 * M_PI).epsilon(1e-5));
  CHECK(roots[0].hyperbolic);
  CHECK_THROWS_AS(limit_cycle_condition(ode, sec, map, 0.7, 0.3, 9, Vector::Constant(1, 0.6)), NumericalError);
}
