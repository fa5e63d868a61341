#pragma once

#include "fastslow/types.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fastslow {

/// Evaluators defining a fast-slow map in general form
///
///     H(z, eps) = z + N(z) f(z) + eps G(z, eps),   z in R^n,
///
/// with N an n x (n-k) matrix field, f : R^n -> R^(n-k) and G : R^n x R -> R^n.
/// Optional analytic derivatives replace finite differences piece by piece.
/// `direct` may override H for maps whose decomposition is only known
/// implicitly (return maps); N f + eps G must still reproduce it.
struct MapFunctions {
  std::function<Matrix(const Vector&)> N;
  std::function<Vector(const Vector&)> f;
  std::function<Vector(const Vector&, double)> G;

  std::function<Matrix(const Vector&)> Df;                // (n-k) x n
  std::function<std::vector<Matrix>(const Vector&)> DN;   // n entries, dN/dz_i
  std::function<Matrix(const Vector&, double)> DG;        // n x n

  std::function<Vector(const Vector&, double)> direct;
  std::function<Matrix(const Vector&, double)> direct_jacobian;  // DH of `direct`
};

/// Immutable fast-slow map. All members are pure; safe for concurrent use.
class FastSlowMap {
 public:
  FastSlowMap(std::string name, int n, int k, MapFunctions fns, Box domain);

  const std::string& name() const { return name_; }
  int dim() const { return n_; }
  int slow_dim() const { return k_; }
  int fast_dim() const { return n_ - k_; }
  const Box& domain() const { return domain_; }

  Matrix N(const Vector& z) const;
  Vector f(const Vector& z) const;
  Vector G(const Vector& z, double eps) const;

  /// Df, analytic when registered, central differences otherwise.
  Matrix Df(const Vector& z) const;
  /// DG with respect to z at fixed eps.
  Matrix DG(const Vector& z, double eps) const;
  /// D_z [N(z) c] for a fixed coefficient vector c.
  Matrix DN_times(const Vector& z, const Vector& c) const;

  bool has_analytic_Df() const { return static_cast<bool>(fns_->Df); }

  /// z + N(z) f(z) + eps G(z, eps). Throws NonFinite.
  Vector evaluate(const Vector& z, double eps) const;

  /// DH(z, eps) = I + N Df + D_z[N c]|_{c=f(z)} + eps DG.
  Matrix jacobian(const Vector& z, double eps) const;

  /// Central-difference Jacobian of evaluate, independent of registered derivatives.
  Matrix jacobian_fd(const Vector& z, double eps) const;

  /// Copy with a different domain box.
  FastSlowMap with_domain(Box domain) const;

 private:
  std::string name_;
  int n_;
  int k_;
  std::shared_ptr<const MapFunctions> fns_;
  Box domain_;
};

/// Central-difference Jacobian with per-coordinate step sqrt(eps_mach) max(1, |z_i|).
Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& fn,
                                  const Vector& z);

struct TrajectoryPoint {
  Vector z;
  double dist_to_slow = std::numeric_limits<double>::quiet_NaN();
  unsigned flags = 0;
};

namespace point_flags {
inline constexpr unsigned kDomainExit = 1u;
}

struct Trajectory {
  std::string model;
  double eps = 0.0;
  std::vector<TrajectoryPoint> points;
  /// Index of the first iterate outside the domain, if any.
  std::optional<std::size_t> exit_index;

  std::size_t size() const { return points.size(); }
  const Vector& operator[](std::size_t i) const { return points[i].z; }
};

/// Applies evaluate `steps` times; stops at the first iterate leaving the domain
/// (that iterate is kept and flagged).
Trajectory iterate(const FastSlowMap& map, const Vector& z0, double eps, long steps);

/// CSV: `step,z_0,...,z_{n-1},dist_to_S_eps,flags` preceded by a schema comment.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// 17-significant-digit formatting used by every CSV/JSON writer.
std::string format_number(double x);

}  // namespace fastslow
