#pragma once

#include "fastslow/map.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fastslow {

inline constexpr double kDefaultHyperbolicityTol = 1e-8;
inline constexpr double kOnManifoldTol = 1e-10;

enum class SingularityKind { Fold, Flip, NeimarkSacker };
const char* to_string(SingularityKind kind);

struct Classification {
  enum class Type { Attracting, Repelling, Saddle, NonHyperbolic };
  Type type = Type::NonHyperbolic;
  int n_attracting = 0;
  int n_repelling = 0;
  SingularityKind kind = SingularityKind::Fold;  // meaningful for NonHyperbolic only

  bool hyperbolic() const { return type != Type::NonHyperbolic; }
  std::string label() const;
  friend bool operator==(const Classification& a, const Classification& b);
};

struct SpectrumReport {
  Vector z;
  ComplexVector multipliers;  // mu_j, modulus descending, argument tiebreak
  ComplexVector eigenvalues;  // lambda_j = mu_j - 1
  Classification classification;
  double tol = kDefaultHyperbolicityTol;
};

struct SingularityHit {
  double coord = 0.0;  // curve parameter at the crossing
  Vector z;
  SingularityKind kind = SingularityKind::Fold;
  Complex mu;
};

struct SpectralBounds {
  double nu_A = 0.0;  // 0 when no stable multipliers were sampled
  double nu_R = std::numeric_limits<double>::infinity();  // +inf when no unstable ones
  bool has_stable = false;
  bool has_unstable = false;
  std::size_t samples = 0;
};

/// Sorts in place by modulus descending, ties broken by argument ascending.
void sort_multipliers(ComplexVector& mu);

/// Eigenvalues of I_{n-k} + Df(z) N(z). Throws NotOnManifold when |f(z)| > on_tol.
ComplexVector nontrivial_multipliers(const FastSlowMap& map, const Vector& z,
                                     double on_tol = kOnManifoldTol);

/// Classification from multipliers; ||mu|-1| <= tol is NonHyperbolic.
Classification classify_multipliers(const ComplexVector& mu, double tol = kDefaultHyperbolicityTol);

Classification classify_point(const FastSlowMap& map, const Vector& z,
                              double tol = kDefaultHyperbolicityTol);

SpectrumReport spectrum_report(const FastSlowMap& map, const Vector& z,
                               double tol = kDefaultHyperbolicityTol);

/// Same classification expressed through lambda = mu - 1 using the sign of
/// 2 Re(lambda) + |lambda|^2; the band is mapped so results agree with
/// classify_multipliers exactly.
Classification classify_by_eigenvalues(const ComplexVector& lambda,
                                       double tol = kDefaultHyperbolicityTol);

/// One-parameter family of points on S.
struct CurveOnS {
  std::function<Vector(double)> point;
  std::vector<double> params;  // increasing sample parameters
};

/// Sign changes of |mu_j| - 1 along the curve, refined by bisection. Multiplier
/// paths are tracked by nearest-neighbour matching between adjacent samples;
/// the sampling must be fine enough for at most one crossing per segment.
std::vector<SingularityHit> locate_singularities(const FastSlowMap& map, const CurveOnS& curve,
                                                 double tol = kDefaultHyperbolicityTol);

/// nu_A = max stable multiplier modulus, nu_R = min unstable modulus over the
/// samples. Throws NonHyperbolicSample on the first sample inside the band.
SpectralBounds spectral_bounds(const FastSlowMap& map, const std::vector<Vector>& samples,
                               double tol = kDefaultHyperbolicityTol);

}  // namespace fastslow
