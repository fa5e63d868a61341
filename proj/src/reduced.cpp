#include "fastslow/reduced.hpp"

#include "fastslow/manifold.hpp"

#include <cmath>
#include <limits>

namespace fastslow {

namespace {

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

Vector reduced_step(const FastSlowMap& map, const Vector& z, double eps) {
  if (eps == 0.0) return z;
  return z + eps * (projection(map, z) * map.G(z, 0.0));
}

Vector mth_iterate_reduced(const FastSlowMap& map, const Vector& z, double eps, long m,
                           double eps_m_cap) {
  if (m < 1) throw NumericalError(ErrorKind::InvalidArgument, "m must be positive");
  if (eps * static_cast<double>(m) > eps_m_cap) {
    throw NumericalError(ErrorKind::ParamOutOfRange,
                         "eps m = " + format_number(eps * static_cast<double>(m)) +
                             " exceeds the cap " + format_number(eps_m_cap));
  }
  if (eps == 0.0) return z;
  return z + eps * static_cast<double>(m) * (projection(map, z) * map.G(z, 0.0));
}

Vector reduced_step_on(const FastSlowMap& map, const Chart& chart, const Vector& z, double eps) {
  const Vector next = reduced_step(map, z, eps);
  const Vector y = solve_on_critical(map, chart, chart.x_of(next), chart.y_of(next));
  return chart.compose(chart.x_of(next), y);
}

std::vector<Vector> reduced_orbit(const FastSlowMap& map, const Chart& chart, const Vector& z,
                                  double eps, long steps) {
  std::vector<Vector> orbit{z};
  orbit.reserve(static_cast<std::size_t>(steps) + 1);
  for (long i = 0; i < steps; ++i) orbit.push_back(reduced_step_on(map, chart, orbit.back(), eps));
  return orbit;
}

const char* to_string(FixedPointReport::Stability s) {
  switch (s) {
    case FixedPointReport::Stability::Stable: return "Stable";
    case FixedPointReport::Stability::Unstable: return "Unstable";
    case FixedPointReport::Stability::Saddle: return "Saddle";
    case FixedPointReport::Stability::NonHyperbolic: return "NonHyperbolic";
  }
  return "Unknown";
}

namespace {

FixedPointReport::Stability stability_of(const ComplexVector& mu, double tol) {
  int inside = 0, outside = 0;
  for (const auto& m : mu) {
    const double level = std::abs(m) - 1.0;
    if (std::abs(level) <= tol) return FixedPointReport::Stability::NonHyperbolic;
    (level < 0.0 ? inside : outside)++;
  }
  if (outside == 0) return FixedPointReport::Stability::Stable;
  if (inside == 0) return FixedPointReport::Stability::Unstable;
  return FixedPointReport::Stability::Saddle;
}

ComplexVector full_multipliers(const FastSlowMap& map, const Vector& z, double eps) {
  const Eigen::EigenSolver<Matrix> es(map.jacobian(z, eps), false);
  ComplexVector mu;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) mu.push_back(es.eigenvalues()[i]);
  sort_multipliers(mu);
  return mu;
}

}  // namespace

FixedPointReport find_fixed_point(const FastSlowMap& map, const Vector& guess, double eps,
                                  double tol, double residual_tol) {
  const double eps_mach = std::numeric_limits<double>::epsilon();
  FixedPointReport rep;
  rep.eps = eps;
  Vector z = guess;

  if (eps == 0.0) {
    // Minimum-norm Gauss-Newton onto {f = 0}.
    for (int it = 0; it < 50; ++it) {
      const Vector F = map.f(z);
      rep.iterations = it;
      if (max_abs(F) <= 1e-14) break;
      const Matrix Df = map.Df(z);
      const Vector dz = Df.transpose() * (Df * Df.transpose()).partialPivLu().solve(F);
      z -= dz;
      if (max_abs(dz) <= 4.0 * eps_mach * (1.0 + max_abs(z)) && max_abs(map.f(z)) <= 1e-12) break;
    }
    rep.z = z;
    rep.degenerate = true;
    rep.residual = max_abs(map.evaluate(z, 0.0) - z);
    if (!(max_abs(map.f(z)) <= 1e-12)) {
      throw NumericalError(ErrorKind::NewtonDiverged, "projection onto S failed to converge");
    }
    rep.multipliers = full_multipliers(map, z, 0.0);
    rep.stability = stability_of(nontrivial_multipliers(map, z), tol);
    return rep;
  }

  bool converged = false;
  double last_step = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 50 && !converged; ++it) {
    const Vector F = map.evaluate(z, eps) - z;
    rep.iterations = it;
    const double r = max_abs(F);
    if (r <= 1e-14 * (1.0 + max_abs(z)) || (r <= residual_tol && last_step <= 1e3 * residual_tol)) {
      converged = true;
      break;
    }
    const Matrix J = map.jacobian(z, eps) - Matrix::Identity(map.dim(), map.dim());
    const Vector dz = J.partialPivLu().solve(-F);
    if (!dz.allFinite()) break;
    z += dz;
    last_step = max_abs(dz);
    if (last_step <= 16.0 * eps_mach * (1.0 + max_abs(z))) {
      converged = max_abs(map.evaluate(z, eps) - z) <= residual_tol;
      break;
    }
  }
  rep.z = z;
  rep.residual = max_abs(map.evaluate(z, eps) - z);
  if (!converged && !(rep.residual <= residual_tol)) {
    throw NumericalError(ErrorKind::NewtonDiverged,
                         "fixed-point Newton did not converge (residual " +
                             format_number(rep.residual) + ")");
  }
  rep.multipliers = full_multipliers(map, z, eps);
  rep.stability = stability_of(rep.multipliers, tol);
  return rep;
}

namespace {

double bisect_drift(const ChialvoParams& p, double lo, double hi) {
  double glo = chialvo_exact::drift(p, lo);
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    const double gm = chialvo_exact::drift(p, mid);
    if (gm == 0.0) return mid;
    if ((gm > 0.0) == (glo > 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return std::abs(chialvo_exact::drift(p, lo)) <= std::abs(chialvo_exact::drift(p, hi)) ? lo : hi;
}

}  // namespace

double chialvo_equilibrium_v(const ChialvoParams& p) {
  validate(p);
  const EquilibriumCheck check = check_unique_equilibrium(p);
  if (!check.unique) {
    throw NumericalError(ErrorKind::AssumptionViolated,
                         "uniqueness quadratic is not negative on v > k (discriminant " +
                             format_number(check.discriminant) + ")");
  }
  // drift -> +inf as v -> k+, -> -inf as v -> inf.
  double lo = p.k + 1e-3 * std::max(p.k, 1e-3);
  while (!(chialvo_exact::drift(p, lo) > 0.0)) lo = p.k + 0.5 * (lo - p.k);
  double hi = std::max(2.0 * lo, 1.0);
  while (!(chialvo_exact::drift(p, hi) < 0.0)) hi *= 2.0;
  return bisect_drift(p, lo, hi);
}

std::vector<double> chialvo_equilibria(const ChialvoParams& p, double v_max) {
  validate(p);
  std::vector<double> roots;
  // Geometric grid in v - k resolves the logarithmic behaviour near v = k.
  const double d0 = 1e-9;
  const int n = 20000;
  const double ratio = std::pow((v_max - p.k) / d0, 1.0 / n);
  double prev_v = p.k + d0;
  double prev_g = chialvo_exact::drift(p, prev_v);
  for (int i = 1; i <= n; ++i) {
    const double v = p.k + d0 * std::pow(ratio, i);
    const double g = chialvo_exact::drift(p, v);
    if (g == 0.0) {
      roots.push_back(v);
    } else if ((g > 0.0) != (prev_g > 0.0) && prev_g != 0.0) {
      roots.push_back(bisect_drift(p, prev_v, v));
    }
    prev_v = v;
    prev_g = g;
  }
  return roots;
}

Vector inverse_step(const FastSlowMap& map, const Vector& target, double eps, const Vector& seed) {
  const double eps_mach = std::numeric_limits<double>::epsilon();
  const double scale = 1.0 + max_abs(target);
  Vector z = seed;
  auto residual = [&](const Vector& p) {
    try {
      return max_abs(map.evaluate(p, eps) - target);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  double r = residual(z);
  for (int it = 0; it < 50; ++it) {
    if (r <= 1e-15 * scale) return z;
    const Vector F = map.evaluate(z, eps) - target;
    const Vector dz = map.jacobian(z, eps).partialPivLu().solve(-F);
    if (!dz.allFinite()) break;
    double lambda = 1.0;
    Vector trial = z + dz;
    double rt = residual(trial);
    while (!(rt < r) && lambda > 1.0 / 1024.0) {
      lambda *= 0.5;
      trial = z + lambda * dz;
      rt = residual(trial);
    }
    if (!(rt < r)) {
      if (r <= 1e-13 * scale) return z;
      break;
    }
    z = trial;
    r = rt;
    if (max_abs(lambda * dz) <= 4.0 * eps_mach * (1.0 + max_abs(z)) && r <= 1e-13 * scale) return z;
  }
  throw NumericalError(ErrorKind::NewtonDiverged,
                       "inverse step did not converge (residual " + format_number(r) + ")");
}

FiberRateReport fiber_rate_probe(const FastSlowMap& map, const GraphManifold& slow,
                                 const Vector& base, const Vector& offset, int steps, bool inverse,
                                 double eps, const FiberProbeOptions& opts) {
  if (steps < 1) throw NumericalError(ErrorKind::InvalidArgument, "steps must be positive");
  const Chart& chart = slow.chart();

  auto advance = [&](const Vector& z) {
    Vector next = inverse ? inverse_step(map, z, eps, z) : map.evaluate(z, eps);
    if (!map.domain().contains(next)) {
      throw NumericalError(ErrorKind::DomainExit, "probe orbit left the domain");
    }
    return next;
  };
  auto orbit = [&](const Vector& z0, int count) {
    std::vector<Vector> out{z0};
    for (int j = 0; j < count; ++j) out.push_back(advance(out.back()));
    return out;
  };

  const std::vector<Vector> base_orbit = orbit(base, steps);
  Vector probe_offset = offset;
  const double size = offset.norm();

  if (opts.align && size > 0.0) {
    const int k = slow.slow_dim();
    const Vector x0 = chart.x_of(base);
    const Matrix dphi = slow.derivative(x0);
    Matrix tangents(map.dim(), k);
    for (int i = 0; i < k; ++i) {
      Vector ex = Vector::Zero(k);
      ex[i] = 1.0;
      tangents.col(i) = chart.compose(ex, dphi.col(i));
    }
    const Vector& end = base_orbit.back();
    const Matrix P = projection(map, end);
    auto slow_gap = [&](const Vector& s) {
      const Vector probe_end = orbit(base + offset + tangents * s, steps).back();
      return Vector(chart.x_of(P * (probe_end - end)));
    };
    Vector s = Vector::Zero(k);
    for (int round = 0; round < 3; ++round) {
      const Vector g0 = slow_gap(s);
      Matrix J(k, k);
      for (int i = 0; i < k; ++i) {
        Vector si = s;
        si[i] += size;
        J.col(i) = (slow_gap(si) - g0) / size;
      }
      const Vector ds = J.partialPivLu().solve(-g0);
      if (!ds.allFinite()) break;
      s += ds;
      if (ds.norm() <= 1e-3 * size) break;
    }
    probe_offset = offset + tangents * s;
  }

  FiberRateReport rep;
  rep.base = base;
  rep.offset = probe_offset;
  rep.inverse = inverse;
  rep.transient = opts.transient;
  const std::vector<Vector> probe_orbit = orbit(base + probe_offset, steps);
  const double floor = opts.floor_rel * (1.0 + base.norm());
  bool recording = true;
  double log_sum = 0.0;
  int used = 0;
  for (int j = 0; j <= steps; ++j) {
    rep.distances.push_back((probe_orbit[static_cast<std::size_t>(j)] - base_orbit[static_cast<std::size_t>(j)]).norm());
    if (j == 0) continue;
    const double prev = rep.distances[static_cast<std::size_t>(j - 1)];
    const double cur = rep.distances.back();
    if (!recording || !(prev > floor) || !(cur > floor)) {
      recording = false;
      continue;
    }
    const double r = cur / prev;
    rep.ratios.push_back(r);
    if (j > opts.transient) {
      log_sum += std::log(r);
      ++used;
    }
  }
  if (used > 0) rep.chi = std::exp(log_sum / used);
  return rep;
}

}  // namespace fastslow
