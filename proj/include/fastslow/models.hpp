#pragma once

#include "fastslow/graph.hpp"
#include "fastslow/map.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fastslow {

// ---------------------------------------------------------------------------
// Chialvo neuron map, z = (w, v): w slow recovery, v fast activation.
//
//   w -> w + eps (c - b v - a w)
//   v -> v^2 exp(w - v) + k

struct ChialvoParams {
  double a = 1.0;
  double b = 5.0;
  double c = 3.5;
  double k = 0.035;
};

/// Upper bound on k for the S-shaped critical manifold.
double chialvo_k_limit();

/// Throws ParamOutOfRange unless a, b, c > 0 and 0 <= k < 3 - 2 sqrt(2).
void validate(const ChialvoParams& p);

/// Optional O(eps) tail added to the slow update: g = c - b v - a w + eps * tail(w, v).
using ChialvoTail = std::function<double(double w, double v)>;

FastSlowMap chialvo(const ChialvoParams& p, ChialvoTail tail = {});

/// Chart used for the Chialvo critical manifold: graph w = phi(v).
Chart chialvo_chart();

/// Closed forms for the Chialvo map.
namespace chialvo_exact {
double phi0(const ChialvoParams& p, double v);
double multiplier(const ChialvoParams& p, double v);
double v_minus(const ChialvoParams& p);
double v_plus(const ChialvoParams& p);
double v_flip(const ChialvoParams& p);
/// Slow drift restricted to S: c - (b + a) v - a ln((v - k) / v^2).
double drift(const ChialvoParams& p, double v);
/// phi0 - eps drift / (mu - 1).
double first_order_w(const ChialvoParams& p, double v, double eps);
/// v - eps (v - k) / (mu - 1) drift.
double reduced_v(const ChialvoParams& p, double v, double eps);
/// Projection matrix at (phi0(v), v) in (w, v) ordering.
Matrix projection(const ChialvoParams& p, double v);
}  // namespace chialvo_exact

struct EquilibriumCheck {
  bool unique = false;  // quadratic negative on (k, inf)
  double leading = 0.0;
  double discriminant = 0.0;
  std::vector<double> roots;  // real roots of the quadratic, ascending
};

/// Sign test of -2ka + (a + ak + bk) v - (a + b) v^2 on v > k.
EquilibriumCheck check_unique_equilibrium(const ChialvoParams& p);

// ---------------------------------------------------------------------------
// Continuous-time fast-slow systems z' = N(z) f(z) + eps G(z, eps).

struct SlowOde {
  std::string name;
  int n = 0;
  int k = 0;
  MapFunctions field;  // N, f, G (+ optional derivatives) of the vector field
  Box domain;
};

/// z -> z + h N f + eps h G. The discretized map shares f (and Df) with the ODE.
FastSlowMap euler_discretize(const SlowOde& ode, double h);

/// h at which 1 + h lambda crosses the unit circle: -2 Re(lambda) / |lambda|^2
/// for Re(lambda) < 0, none otherwise. Throws ZeroEigenvalue for lambda = 0.
std::optional<double> euler_hyperbolicity_boundary(Complex lambda);

/// Linear test ODE on z = (x, y_1, y_2):
///   x'   = eps
///   y_j' = lambda_j (y_j - a_j x^2 / 2) + eps (a_j x + beta_j)
/// Df N = diag(lambda). Its slow manifold y_j = a_j x^2/2 - eps beta_j/lambda_j
/// is exact at first order.
struct LinearSlowOdeParams {
  double lambda1 = -1.0;
  double lambda2 = -2.0;
  double a1 = 1.0;
  double a2 = 0.5;
  double beta1 = 0.3;
  double beta2 = -0.2;
};

SlowOde linear_slow_ode(const LinearSlowOdeParams& p = {});

/// Exact ODE slow manifold of linear_slow_ode at x, fast components only.
Vector linear_slow_ode_manifold(const LinearSlowOdeParams& p, double x, double eps);

/// Exact slow manifold of the Euler map of linear_slow_ode with step h.
Vector linear_slow_ode_euler_manifold(const LinearSlowOdeParams& p, double x, double eps, double h);

// ---------------------------------------------------------------------------
// Standard form: x -> x + eps g(x, y, eps), y -> y + f(x, y, eps).

struct StandardFormMap {
  int n = 0;
  int k = 0;
  std::function<Vector(const Vector& x, const Vector& y, double eps)> slow;  // g, k entries
  std::function<Vector(const Vector& x, const Vector& y, double eps)> fast;  // f, n-k entries
  double eps_max = 1.0;
  Box domain;
};

/// General form with N = (0; I), f(z) = f(x, y, 0) and G = (g, f_rem), f_rem
/// the eps-difference quotient of the fast update (forward difference with
/// step 1e-6 max(1, eps_max) at eps = 0).
FastSlowMap from_standard_form(std::string name, const StandardFormMap& sf);

/// Chialvo written in standard form (used to cross-check the adapter).
StandardFormMap chialvo_standard_form(const ChialvoParams& p);

// ---------------------------------------------------------------------------
// Linear test map on z = (x, y): N = (0; D), f = y - A x, G = g constant.
// Critical manifold y = A x, Df N = D.

FastSlowMap linear_test_map(const Matrix& A, const Matrix& D, const Vector& g);

}  // namespace fastslow
