#include "fastslow/map.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace fastslow {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::StepUnderflow: return "StepUnderflow";
    case ErrorKind::NotOnManifold: return "NotOnManifold";
    case ErrorKind::NewtonDiverged: return "NewtonDiverged";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::FoldSingularity: return "FoldSingularity";
    case ErrorKind::NotContracting: return "NotContracting";
    case ErrorKind::MaxIterations: return "MaxIterations";
    case ErrorKind::NonHyperbolicSample: return "NonHyperbolicSample";
    case ErrorKind::AssumptionViolated: return "AssumptionViolated";
    case ErrorKind::ParamOutOfRange: return "ParamOutOfRange";
    case ErrorKind::ZeroEigenvalue: return "ZeroEigenvalue";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::NoReturn: return "NoReturn";
    case ErrorKind::TangentialCrossing: return "TangentialCrossing";
    case ErrorKind::DomainExit: return "DomainExit";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Box Box::unbounded(int n) {
  const double inf = std::numeric_limits<double>::infinity();
  return Box{Vector::Constant(n, -inf), Vector::Constant(n, inf)};
}

bool Box::contains(const Vector& z) const {
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (!(z[i] >= lo[i] && z[i] <= hi[i])) return false;
  }
  return true;
}

bool all_finite(const Vector& v) { return v.allFinite(); }

Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& fn,
                                  const Vector& z) {
  const double eps_mach = std::numeric_limits<double>::epsilon();
  const double root_eps = std::sqrt(eps_mach);
  Matrix jac;
  Vector zp = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double h = root_eps * std::max(1.0, std::abs(z[i]));
    const volatile double up = z[i] + h;
    const volatile double dn = z[i] - h;
    const double width = up - dn;
    if (!std::isfinite(width) || width < 32.0 * eps_mach * std::abs(z[i])) {
      throw NumericalError(ErrorKind::StepUnderflow,
                           "finite-difference step collapsed at coordinate " + std::to_string(i));
    }
    zp[i] = up;
    const Vector fp = fn(zp);
    zp[i] = dn;
    const Vector fm = fn(zp);
    zp[i] = z[i];
    if (jac.size() == 0) jac.resize(fp.size(), z.size());
    jac.col(i) = (fp - fm) / width;
  }
  return jac;
}

FastSlowMap::FastSlowMap(std::string name, int n, int k, MapFunctions fns, Box domain)
    : name_(std::move(name)),
      n_(n),
      k_(k),
      fns_(std::make_shared<const MapFunctions>(std::move(fns))),
      domain_(std::move(domain)) {
  if (n <= 0 || k <= 0 || k >= n) {
    throw NumericalError(ErrorKind::InvalidArgument,
                         "dimensions require 0 < k < n (n=" + std::to_string(n) +
                             ", k=" + std::to_string(k) + ")");
  }
  if (!fns_->N || !fns_->f || !fns_->G) {
    throw NumericalError(ErrorKind::InvalidArgument, "N, f and G evaluators are required");
  }
  if (domain_.dim() != n) domain_ = Box::unbounded(n);
}

Matrix FastSlowMap::N(const Vector& z) const { return fns_->N(z); }
Vector FastSlowMap::f(const Vector& z) const { return fns_->f(z); }
Vector FastSlowMap::G(const Vector& z, double eps) const { return fns_->G(z, eps); }

Matrix FastSlowMap::Df(const Vector& z) const {
  if (fns_->Df) return fns_->Df(z);
  return finite_difference_jacobian([this](const Vector& p) { return fns_->f(p); }, z);
}

Matrix FastSlowMap::DG(const Vector& z, double eps) const {
  if (fns_->DG) return fns_->DG(z, eps);
  return finite_difference_jacobian([this, eps](const Vector& p) { return fns_->G(p, eps); }, z);
}

Matrix FastSlowMap::DN_times(const Vector& z, const Vector& c) const {
  if (fns_->DN) {
    const std::vector<Matrix> dn = fns_->DN(z);
    Matrix out(n_, n_);
    for (int i = 0; i < n_; ++i) out.col(i) = dn[static_cast<std::size_t>(i)] * c;
    return out;
  }
  return finite_difference_jacobian([this, &c](const Vector& p) -> Vector { return fns_->N(p) * c; },
                                    z);
}

Vector FastSlowMap::evaluate(const Vector& z, double eps) const {
  Vector out;
  if (fns_->direct) {
    out = fns_->direct(z, eps);
  } else {
    out = z + fns_->N(z) * fns_->f(z);
    if (eps != 0.0) out += eps * fns_->G(z, eps);
  }
  if (!out.allFinite()) {
    throw NumericalError(ErrorKind::NonFinite, "map '" + name_ + "' produced a non-finite iterate");
  }
  return out;
}

Matrix FastSlowMap::jacobian(const Vector& z, double eps) const {
  if (fns_->direct_jacobian) return fns_->direct_jacobian(z, eps);
  const Vector fz = fns_->f(z);
  Matrix jac = Matrix::Identity(n_, n_) + fns_->N(z) * Df(z);
  if (fz.cwiseAbs().maxCoeff() != 0.0) jac += DN_times(z, fz);
  if (eps != 0.0) jac += eps * DG(z, eps);
  return jac;
}

Matrix FastSlowMap::jacobian_fd(const Vector& z, double eps) const {
  return finite_difference_jacobian([this, eps](const Vector& p) { return evaluate(p, eps); }, z);
}

FastSlowMap FastSlowMap::with_domain(Box domain) const {
  FastSlowMap copy = *this;
  copy.domain_ = std::move(domain);
  return copy;
}

Trajectory iterate(const FastSlowMap& map, const Vector& z0, double eps, long steps) {
  if (steps < 0) throw NumericalError(ErrorKind::InvalidArgument, "steps must be non-negative");
  Trajectory traj;
  traj.model = map.name();
  traj.eps = eps;
  traj.points.reserve(static_cast<std::size_t>(steps) + 1);
  traj.points.push_back({z0});
  if (!map.domain().contains(z0)) {
    traj.points.back().flags |= point_flags::kDomainExit;
    traj.exit_index = 0;
    return traj;
  }
  Vector z = z0;
  for (long i = 0; i < steps; ++i) {
    z = map.evaluate(z, eps);
    traj.points.push_back({z});
    if (!map.domain().contains(z)) {
      traj.points.back().flags |= point_flags::kDomainExit;
      traj.exit_index = traj.points.size() - 1;
      break;
    }
  }
  return traj;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const Eigen::Index n = traj.points.empty() ? 0 : traj.points.front().z.size();
  os << "# schema: 1, model: " << traj.model << ", eps: " << format_number(traj.eps) << "\n";
  os << "step";
  for (Eigen::Index i = 0; i < n; ++i) os << ",z_" << i;
  os << ",dist_to_S_eps,flags\n";
  for (std::size_t s = 0; s < traj.points.size(); ++s) {
    const auto& p = traj.points[s];
    os << s;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_number(p.z[i]);
    os << ',' << format_number(p.dist_to_slow) << ',' << p.flags << '\n';
  }
}

}  // namespace fastslow
