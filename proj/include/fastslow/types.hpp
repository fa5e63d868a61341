#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace fastslow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

enum class ErrorKind {
  NonFinite,
  StepUnderflow,
  NotOnManifold,
  NewtonDiverged,
  SingularJacobian,
  FoldSingularity,
  NotContracting,
  MaxIterations,
  NonHyperbolicSample,
  AssumptionViolated,
  ParamOutOfRange,
  ZeroEigenvalue,
  StepFailure,
  NoReturn,
  TangentialCrossing,
  DomainExit,
  InvalidArgument,
};

const char* to_string(ErrorKind kind);

/// Numerical failure raised by any toolkit operation. The kind is the
/// machine-readable part; the message carries location details.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed configuration or command-line usage.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box in R^n; the working neighbourhood of a map.
struct Box {
  Vector lo;
  Vector hi;

  static Box unbounded(int n);
  bool contains(const Vector& z) const;
  int dim() const { return static_cast<int>(lo.size()); }
};

bool all_finite(const Vector& v);

}  // namespace fastslow
