#pragma once

#include "fastslow/graph.hpp"
#include "fastslow/map.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fastslow {

/// Fast oscillator with one slowly drifting parameter:
///   u'     = F(u, alpha)
///   alpha' = eps g(u, alpha)
/// The full state is s = (u, alpha).
struct OscillatorOde {
  std::string name;
  int fast_dim = 2;
  std::function<Vector(const Vector& u, double alpha)> field;
  std::function<double(const Vector& u, double alpha)> drift;
  /// d F / d(u, alpha), fast_dim x (fast_dim + 1). Finite differences when absent.
  std::function<Matrix(const Vector& u, double alpha)> field_jacobian;
  /// d g / d(u, alpha), fast_dim + 1 entries. Finite differences when absent.
  std::function<Vector(const Vector& u, double alpha)> drift_gradient;
  double period_hint = 1.0;  // rough period of the layer cycles
};

/// Section u[index] = Y(u without index, alpha), crossed with the residual
/// u[index] - Y increasing (direction = +1) or decreasing (-1). Section
/// coordinates are p = (u without index, alpha).
struct SectionSpec {
  int index = 1;
  std::function<double(const Vector& rest, double alpha)> Y = [](const Vector&, double) { return 0.0; };
  /// dY / d(rest, alpha). Zero when absent.
  std::function<Vector(const Vector& rest, double alpha)> Y_gradient;
  int direction = 1;
  Box box;  // working box for the section coordinates (V_x x V_alpha)
};

struct IntegratorOptions {
  double tol = 1e-10;  // absolute and relative
  double t_cap = 0.0;  // 0: 10 x period hint
};

struct Path {
  std::vector<double> t;
  std::vector<Vector> states;
};

/// Adaptive Dormand-Prince 5(4) integration of the full state from s0 over
/// [0, t_end] (t_end may be negative). Records every accepted step.
Path integrate(const OscillatorOde& ode, const Vector& s0, double eps, double t_end,
               double tol = 1e-10);

struct ReturnRecord {
  Vector start;    // section coordinates
  Vector landing;  // section coordinates
  Vector landing_state;
  double time = 0.0;
  double eps = 0.0;
  double tol = 0.0;
  double section_residual = 0.0;  // at landing
  Matrix derivative;              // d landing / d start (section coordinates)
  double quadrature = 0.0;        // integral of the drift g along the path
};

/// Full state on the section from section coordinates.
Vector lift_to_section(const SectionSpec& section, const Vector& p);
/// Section coordinates of a full state.
Vector section_coordinates(const SectionSpec& section, const Vector& s);

/// First directional return to the section from p. Event located on dense
/// output, then refined by secant iteration on a single exact Runge-Kutta
/// step. The derivative comes from the variational equations.
ReturnRecord return_map(const OscillatorOde& ode, const SectionSpec& section, const Vector& p,
                        double eps, const IntegratorOptions& opts = {});

/// Return map as a fast-slow map on p = (x, alpha) with k = 1 (alpha slow):
/// N = (I; 0), f = x-displacement at eps = 0, G = eps-difference quotient of
/// the return (one-sided step 1e-5 at eps = 0).
FastSlowMap build_poincare_map(const OscillatorOde& ode, const SectionSpec& section,
                               const IntegratorOptions& opts = {});

/// Chart of the built map: graph x = phi(alpha).
Chart poincare_chart(const SectionSpec& section, int fast_dim);

/// Point of the critical curve (layer cycle) at alpha, seeded by x_seed.
Vector poincare_critical_point(const FastSlowMap& map, double alpha, const Vector& x_seed);

/// Integral of the drift over one layer cycle through the critical point at alpha.
double averaged_g(const OscillatorOde& ode, const SectionSpec& section, const FastSlowMap& map,
                  double alpha, const Vector& x_seed, const IntegratorOptions& opts = {});

struct LimitCycleRoot {
  double alpha = 0.0;
  double derivative = 0.0;  // D_alpha of the averaged drift
  bool hyperbolic = false;
};

/// Roots of averaged_g on a uniform alpha grid, refined by bracketed secant.
std::vector<LimitCycleRoot> limit_cycle_condition(const OscillatorOde& ode,
                                                  const SectionSpec& section,
                                                  const FastSlowMap& map, double alpha_lo,
                                                  double alpha_hi, int grid,
                                                  const Vector& x_seed,
                                                  const IntegratorOptions& opts = {});

/// Hopf normal form with drift kinds "quadratic" (a_g - x^2 - y^2), "one" and "x".
struct HopfParams {
  std::string drift = "quadratic";
  double a_g = 0.5;
};
OscillatorOde hopf_oscillator(const HopfParams& p = {});
/// Section y = 0 crossed upward (x > 0), box x in [0.2, 1.5], alpha in [0.2, 0.8].
SectionSpec hopf_section();

}  // namespace fastslow
