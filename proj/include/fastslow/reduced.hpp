#pragma once

#include "fastslow/graph.hpp"
#include "fastslow/map.hpp"
#include "fastslow/models.hpp"
#include "fastslow/spectral.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fastslow {

/// z + eps Pi(z) G(z, 0).
Vector reduced_step(const FastSlowMap& map, const Vector& z, double eps);

/// z + eps m Pi(z) G(z, 0). Throws ParamOutOfRange when eps m exceeds the cap.
Vector mth_iterate_reduced(const FastSlowMap& map, const Vector& z, double eps, long m,
                           double eps_m_cap = 1.0);

/// Reduced step followed by a return to S at the new chart x-coordinate, so
/// that steps can be composed.
Vector reduced_step_on(const FastSlowMap& map, const Chart& chart, const Vector& z, double eps);

/// Runs `steps` reduced steps from z (each re-solved onto S).
std::vector<Vector> reduced_orbit(const FastSlowMap& map, const Chart& chart, const Vector& z,
                                  double eps, long steps);

struct FixedPointReport {
  enum class Stability { Stable, Unstable, Saddle, NonHyperbolic };

  Vector z;
  double eps = 0.0;
  ComplexVector multipliers;  // full map, modulus descending
  Stability stability = Stability::NonHyperbolic;
  double residual = 0.0;
  int iterations = 0;
  /// eps = 0: every point of S is fixed; z is the projection of the guess
  /// onto S and stability refers to the non-trivial multipliers.
  bool degenerate = false;
};

const char* to_string(FixedPointReport::Stability s);

/// Newton on H(z, eps) - z = 0. `residual_tol` is the accepted |H(z) - z|;
/// raise it for maps evaluated by numerical integration.
FixedPointReport find_fixed_point(const FastSlowMap& map, const Vector& guess, double eps,
                                  double tol = kDefaultHyperbolicityTol,
                                  double residual_tol = 1e-12);

/// Root of the Chialvo drift on S, c - (b+a) v - a ln((v-k)/v^2) = 0, by
/// bracketing and bisection. Throws AssumptionViolated when the uniqueness
/// check fails.
double chialvo_equilibrium_v(const ChialvoParams& p);

/// Every sign change of the drift on (k, v_max], each refined by bisection.
/// Does not rely on the uniqueness assumption.
std::vector<double> chialvo_equilibria(const ChialvoParams& p, double v_max = 100.0);

struct FiberRateReport {
  Vector base;
  Vector offset;  // after alignment with the fiber through base
  bool inverse = false;
  std::vector<double> distances;  // d_0 .. d_steps
  std::vector<double> ratios;     // d_j / d_{j-1}, only while above the noise floor
  int transient = 3;
  double chi = std::numeric_limits<double>::quiet_NaN();  // geometric mean after the transient
  double bound = std::numeric_limits<double>::quiet_NaN();  // filled by callers
};

struct FiberProbeOptions {
  int transient = 3;
  /// Shift the probe along the slow manifold so that it sits on the fiber of
  /// the base point; otherwise the raw offset is used.
  bool align = true;
  /// Distances below floor_rel * (1 + |base|) are treated as round-off.
  double floor_rel = 1e-12;
};

/// Iterates base and base + offset forward (or backward through Newton
/// inversion) and records per-step distance ratios. `slow` is the slow manifold
/// the base lies on; it supplies the tangent used for alignment.
FiberRateReport fiber_rate_probe(const FastSlowMap& map, const GraphManifold& slow,
                                 const Vector& base, const Vector& offset, int steps, bool inverse,
                                 double eps, const FiberProbeOptions& opts = {});

/// Solves H(z, eps) = target by damped Newton (step halving, 50 iterations).
Vector inverse_step(const FastSlowMap& map, const Vector& target, double eps,
                    const Vector& seed);

}  // namespace fastslow
