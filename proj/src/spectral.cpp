#include "fastslow/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fastslow {

const char* to_string(SingularityKind kind) {
  switch (kind) {
    case SingularityKind::Fold: return "Fold";
    case SingularityKind::Flip: return "Flip";
    case SingularityKind::NeimarkSacker: return "NeimarkSacker";
  }
  return "Unknown";
}

std::string Classification::label() const {
  switch (type) {
    case Type::Attracting: return "Attracting";
    case Type::Repelling: return "Repelling";
    case Type::Saddle:
      return "Saddle(" + std::to_string(n_attracting) + "," + std::to_string(n_repelling) + ")";
    case Type::NonHyperbolic: return std::string("NonHyperbolic(") + to_string(kind) + ")";
  }
  return "Unknown";
}

bool operator==(const Classification& a, const Classification& b) {
  if (a.type != b.type) return false;
  switch (a.type) {
    case Classification::Type::Saddle:
      return a.n_attracting == b.n_attracting && a.n_repelling == b.n_repelling;
    case Classification::Type::NonHyperbolic: return a.kind == b.kind;
    default: return true;
  }
}

void sort_multipliers(ComplexVector& mu) {
  std::stable_sort(mu.begin(), mu.end(), [](const Complex& a, const Complex& b) {
    const double ma = std::abs(a);
    const double mb = std::abs(b);
    const double scale = std::max({1.0, ma, mb});
    if (std::abs(ma - mb) > 1e-12 * scale) return ma > mb;
    return std::arg(a) < std::arg(b);
  });
}

namespace {

ComplexVector eigenvalues_of(const Matrix& m) {
  ComplexVector out;
  if (m.rows() == 1) {
    out.emplace_back(m(0, 0), 0.0);
    return out;
  }
  Eigen::EigenSolver<Matrix> solver(m, false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError(ErrorKind::NonFinite, "eigenvalue iteration failed");
  }
  const auto ev = solver.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) out.push_back(ev[i]);
  return out;
}

SingularityKind archetype(const Complex& mu, double tol) {
  if (std::abs(mu.imag()) > tol) return SingularityKind::NeimarkSacker;
  return mu.real() >= 0.0 ? SingularityKind::Fold : SingularityKind::Flip;
}

Classification from_levels(const ComplexVector& mu, const std::vector<int>& side, double tol) {
  // side: -1 inside the unit circle, +1 outside, 0 inside the tolerance band.
  Classification c;
  for (std::size_t j = 0; j < side.size(); ++j) {
    if (side[j] == 0) {
      c.type = Classification::Type::NonHyperbolic;
      c.kind = archetype(mu[j], tol);
      c.n_attracting = c.n_repelling = 0;
      return c;
    }
    (side[j] < 0 ? c.n_attracting : c.n_repelling)++;
  }
  if (c.n_repelling == 0) {
    c.type = Classification::Type::Attracting;
  } else if (c.n_attracting == 0) {
    c.type = Classification::Type::Repelling;
  } else {
    c.type = Classification::Type::Saddle;
  }
  return c;
}

}  // namespace

ComplexVector nontrivial_multipliers(const FastSlowMap& map, const Vector& z, double on_tol) {
  const double residual = map.f(z).cwiseAbs().maxCoeff();
  if (!(residual <= on_tol)) {
    std::ostringstream msg;
    msg << "|f(z)| = " << residual << " exceeds " << on_tol;
    throw NumericalError(ErrorKind::NotOnManifold, msg.str());
  }
  const int m = map.fast_dim();
  const Matrix reduced = Matrix::Identity(m, m) + map.Df(z) * map.N(z);
  ComplexVector mu = eigenvalues_of(reduced);
  sort_multipliers(mu);
  return mu;
}

Classification classify_multipliers(const ComplexVector& mu, double tol) {
  std::vector<int> side;
  side.reserve(mu.size());
  for (const auto& m : mu) {
    const double level = std::abs(m) - 1.0;
    side.push_back(std::abs(level) <= tol ? 0 : (level < 0 ? -1 : 1));
  }
  return from_levels(mu, side, tol);
}

Classification classify_point(const FastSlowMap& map, const Vector& z, double tol) {
  return classify_multipliers(nontrivial_multipliers(map, z), tol);
}

SpectrumReport spectrum_report(const FastSlowMap& map, const Vector& z, double tol) {
  SpectrumReport r;
  r.z = z;
  r.tol = tol;
  r.multipliers = nontrivial_multipliers(map, z);
  for (const auto& m : r.multipliers) r.eigenvalues.push_back(m - 1.0);
  r.classification = classify_multipliers(r.multipliers, tol);
  return r;
}

Classification classify_by_eigenvalues(const ComplexVector& lambda, double tol) {
  // |1 + lambda|^2 = 1 + q with q = 2 Re(lambda) + |lambda|^2.
  const double q_lo = (1.0 - tol) * (1.0 - tol) - 1.0;
  const double q_hi = (1.0 + tol) * (1.0 + tol) - 1.0;
  std::vector<int> side;
  ComplexVector mu;
  for (const auto& l : lambda) {
    const double q = 2.0 * l.real() + std::norm(l);
    side.push_back(q < q_lo ? -1 : (q > q_hi ? 1 : 0));
    mu.push_back(1.0 + l);
  }
  return from_levels(mu, side, tol);
}

namespace {

// Reorders `next` so that next[j] is the nearest unused match for prev[j].
ComplexVector match_to(const ComplexVector& prev, ComplexVector next) {
  ComplexVector out(prev.size());
  std::vector<bool> used(next.size(), false);
  for (std::size_t j = 0; j < prev.size(); ++j) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < next.size(); ++i) {
      if (used[i]) continue;
      const double d = std::abs(next[i] - prev[j]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    used[best] = true;
    out[j] = next[best];
  }
  return out;
}

}  // namespace

std::vector<SingularityHit> locate_singularities(const FastSlowMap& map, const CurveOnS& curve,
                                                 double tol) {
  std::vector<SingularityHit> hits;
  if (curve.params.size() < 2) return hits;

  auto multipliers_at = [&](double s) { return nontrivial_multipliers(map, curve.point(s)); };

  ComplexVector prev = multipliers_at(curve.params.front());
  for (std::size_t i = 1; i < curve.params.size(); ++i) {
    const double s0 = curve.params[i - 1];
    const double s1 = curve.params[i];
    const ComplexVector next = match_to(prev, multipliers_at(s1));
    for (std::size_t j = 0; j < prev.size(); ++j) {
      const double l0 = std::abs(prev[j]) - 1.0;
      const double l1 = std::abs(next[j]) - 1.0;
      if ((l0 < 0.0) == (l1 < 0.0)) continue;

      // Bisection on the tracked path down to machine resolution of s.
      double a = s0;
      double b = s1;
      Complex mu_a = prev[j];
      Complex mu_b = next[j];
      const bool a_inside = l0 < 0.0;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if (!(m > a && m < b)) break;
        const Complex mm = match_to(ComplexVector{mu_a}, multipliers_at(m))[0];
        if ((std::abs(mm) - 1.0 < 0.0) == a_inside) {
          a = m;
          mu_a = mm;
        } else {
          b = m;
          mu_b = mm;
        }
      }
      const bool take_a = std::abs(std::abs(mu_a) - 1.0) <= std::abs(std::abs(mu_b) - 1.0);
      const double s_mid = take_a ? a : b;
      const Complex mu_mid = take_a ? mu_a : mu_b;
      if (std::abs(std::abs(mu_mid) - 1.0) > tol) {
        throw NumericalError(ErrorKind::MaxIterations,
                             "bisection could not reach the tolerance band near s = " +
                                 format_number(s_mid));
      }
      SingularityHit hit;
      hit.coord = s_mid;
      hit.z = curve.point(s_mid);
      hit.mu = mu_mid;
      hit.kind = archetype(mu_mid, tol);
      hits.push_back(std::move(hit));
    }
    prev = next;
  }
  return hits;
}

SpectralBounds spectral_bounds(const FastSlowMap& map, const std::vector<Vector>& samples,
                               double tol) {
  SpectralBounds bounds;
  bounds.samples = samples.size();
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const ComplexVector mu = nontrivial_multipliers(map, samples[s]);
    for (const auto& m : mu) {
      const double mod = std::abs(m);
      if (std::abs(mod - 1.0) <= tol) {
        throw NumericalError(ErrorKind::NonHyperbolicSample,
                             "sample " + std::to_string(s) + " has |mu| = " + format_number(mod));
      }
      if (mod < 1.0) {
        bounds.has_stable = true;
        bounds.nu_A = std::max(bounds.nu_A, mod);
      } else {
        bounds.has_unstable = true;
        bounds.nu_R = std::min(bounds.nu_R, mod);
      }
    }
  }
  return bounds;
}

}  // namespace fastslow
