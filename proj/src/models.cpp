#include "fastslow/models.hpp"

#include <cmath>

namespace fastslow {

double chialvo_k_limit() { return 3.0 - 2.0 * std::sqrt(2.0); }

void validate(const ChialvoParams& p) {
  auto bad = [](const std::string& what) { throw NumericalError(ErrorKind::ParamOutOfRange, what); };
  if (!(p.a > 0.0)) bad("chialvo: a must be positive");
  if (!(p.b > 0.0)) bad("chialvo: b must be positive");
  if (!(p.c > 0.0)) bad("chialvo: c must be positive");
  if (!(p.k >= 0.0 && p.k < chialvo_k_limit())) {
    bad("chialvo: k = " + format_number(p.k) + " outside [0, 3 - 2 sqrt 2)");
  }
}

FastSlowMap chialvo(const ChialvoParams& p, ChialvoTail tail) {
  validate(p);
  MapFunctions fns;
  fns.N = [](const Vector&) {
    Matrix n(2, 1);
    n << 0.0, 1.0;
    return n;
  };
  fns.f = [p](const Vector& z) {
    const double w = z[0], v = z[1];
    Vector out(1);
    out[0] = -v + v * v * std::exp(w - v) + p.k;
    return out;
  };
  fns.G = [p, tail](const Vector& z, double eps) {
    const double w = z[0], v = z[1];
    Vector out(2);
    out[0] = p.c - p.b * v - p.a * w;
    if (tail && eps != 0.0) out[0] += eps * tail(w, v);
    out[1] = 0.0;
    return out;
  };
  fns.Df = [](const Vector& z) {
    const double w = z[0], v = z[1];
    const double e = std::exp(w - v);
    Matrix d(1, 2);
    d << v * v * e, -1.0 + (2.0 * v - v * v) * e;
    return d;
  };
  fns.DN = [](const Vector&) { return std::vector<Matrix>(2, Matrix::Zero(2, 1)); };
  if (!tail) {
    fns.DG = [p](const Vector&, double) {
      Matrix d(2, 2);
      d << -p.a, -p.b, 0.0, 0.0;
      return d;
    };
  }
  Box domain{Vector(2), Vector(2)};
  domain.lo << -10.0, -10.0;
  domain.hi << 10.0, 100.0;
  return FastSlowMap("chialvo", 2, 1, std::move(fns), std::move(domain));
}

Chart chialvo_chart() { return Chart{{1}, {0}}; }

namespace chialvo_exact {

double phi0(const ChialvoParams& p, double v) { return v + std::log((v - p.k) / (v * v)); }

double multiplier(const ChialvoParams& p, double v) { return (v - p.k) * (2.0 - v) / v; }

double v_minus(const ChialvoParams& p) {
  return 0.5 * (1.0 + p.k - std::sqrt(p.k * p.k - 6.0 * p.k + 1.0));
}

double v_plus(const ChialvoParams& p) {
  return 0.5 * (1.0 + p.k + std::sqrt(p.k * p.k - 6.0 * p.k + 1.0));
}

double v_flip(const ChialvoParams& p) {
  return 0.5 * (3.0 + p.k + std::sqrt(p.k * p.k - 2.0 * p.k + 9.0));
}

double drift(const ChialvoParams& p, double v) {
  return p.c - (p.b + p.a) * v - p.a * std::log((v - p.k) / (v * v));
}

double first_order_w(const ChialvoParams& p, double v, double eps) {
  return phi0(p, v) - eps * drift(p, v) / (multiplier(p, v) - 1.0);
}

double reduced_v(const ChialvoParams& p, double v, double eps) {
  return v - eps * ((v - p.k) / (multiplier(p, v) - 1.0)) * drift(p, v);
}

Matrix projection(const ChialvoParams& p, double v) {
  Matrix m(2, 2);
  m << 1.0, 0.0, -(v - p.k) / (multiplier(p, v) - 1.0), 0.0;
  return m;
}

}  // namespace chialvo_exact

EquilibriumCheck check_unique_equilibrium(const ChialvoParams& p) {
  // q(v) = c0 + c1 v + c2 v^2
  const double c0 = -2.0 * p.k * p.a;
  const double c1 = p.a + p.a * p.k + p.b * p.k;
  const double c2 = -(p.a + p.b);
  EquilibriumCheck out;
  out.leading = c2;
  out.discriminant = c1 * c1 - 4.0 * c2 * c0;
  if (out.discriminant >= 0.0 && c2 != 0.0) {
    const double s = std::sqrt(out.discriminant);
    // Cancellation-free pair.
    const double q = -0.5 * (c1 + std::copysign(s, c1));
    double r1 = q / c2;
    double r2 = q != 0.0 ? c0 / q : r1;
    if (r1 > r2) std::swap(r1, r2);
    out.roots = {r1, r2};
  } else if (c2 == 0.0 && c1 != 0.0) {
    out.roots = {-c0 / c1};
  }
  if (c2 < 0.0) {
    out.unique = out.discriminant < 0.0 || out.roots.back() <= p.k;
  } else if (c2 == 0.0) {
    // Linear: negative on (k, inf) iff slope <= 0 and q(k) <= 0.
    out.unique = c1 <= 0.0 && c0 + c1 * p.k <= 0.0;
  }
  return out;
}

FastSlowMap euler_discretize(const SlowOde& ode, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw NumericalError(ErrorKind::InvalidArgument, "Euler step must be positive");
  }
  const MapFunctions& src = ode.field;
  MapFunctions fns;
  fns.N = [N = src.N, h](const Vector& z) -> Matrix { return h * N(z); };
  fns.f = src.f;
  fns.Df = src.Df;
  fns.G = [G = src.G, h](const Vector& z, double eps) -> Vector { return h * G(z, eps); };
  if (src.DN) {
    fns.DN = [DN = src.DN, h](const Vector& z) {
      std::vector<Matrix> d = DN(z);
      for (auto& m : d) m *= h;
      return d;
    };
  }
  if (src.DG) {
    fns.DG = [DG = src.DG, h](const Vector& z, double eps) -> Matrix { return h * DG(z, eps); };
  }
  return FastSlowMap("euler:" + ode.name, ode.n, ode.k, std::move(fns), ode.domain);
}

std::optional<double> euler_hyperbolicity_boundary(Complex lambda) {
  if (lambda == Complex(0.0, 0.0)) {
    throw NumericalError(ErrorKind::ZeroEigenvalue,
                         "lambda = 0 sits on the unit circle for every step size");
  }
  if (lambda.real() >= 0.0) return std::nullopt;
  return -2.0 * lambda.real() / std::norm(lambda);
}

SlowOde linear_slow_ode(const LinearSlowOdeParams& p) {
  SlowOde ode;
  ode.name = "linear";
  ode.n = 3;
  ode.k = 1;
  const double lam[2] = {p.lambda1, p.lambda2};
  const double a[2] = {p.a1, p.a2};
  const double beta[2] = {p.beta1, p.beta2};
  ode.field.N = [](const Vector&) {
    Matrix n = Matrix::Zero(3, 2);
    n(1, 0) = 1.0;
    n(2, 1) = 1.0;
    return n;
  };
  ode.field.f = [=](const Vector& z) {
    Vector out(2);
    for (int j = 0; j < 2; ++j) out[j] = lam[j] * (z[1 + j] - 0.5 * a[j] * z[0] * z[0]);
    return out;
  };
  ode.field.Df = [=](const Vector& z) {
    Matrix d = Matrix::Zero(2, 3);
    for (int j = 0; j < 2; ++j) {
      d(j, 0) = -lam[j] * a[j] * z[0];
      d(j, 1 + j) = lam[j];
    }
    return d;
  };
  ode.field.DN = [](const Vector&) { return std::vector<Matrix>(3, Matrix::Zero(3, 2)); };
  ode.field.G = [=](const Vector& z, double) {
    Vector out(3);
    out[0] = 1.0;
    for (int j = 0; j < 2; ++j) out[1 + j] = a[j] * z[0] + beta[j];
    return out;
  };
  ode.field.DG = [=](const Vector&, double) {
    Matrix d = Matrix::Zero(3, 3);
    d(1, 0) = a[0];
    d(2, 0) = a[1];
    return d;
  };
  ode.domain = Box{Vector::Constant(3, -10.0), Vector::Constant(3, 10.0)};
  return ode;
}

Vector linear_slow_ode_manifold(const LinearSlowOdeParams& p, double x, double eps) {
  Vector y(2);
  y[0] = 0.5 * p.a1 * x * x - eps * p.beta1 / p.lambda1;
  y[1] = 0.5 * p.a2 * x * x - eps * p.beta2 / p.lambda2;
  return y;
}

Vector linear_slow_ode_euler_manifold(const LinearSlowOdeParams& p, double x, double eps,
                                      double h) {
  Vector y(2);
  y[0] = 0.5 * p.a1 * x * x + (0.5 * p.a1 * eps * h - p.beta1) * eps / p.lambda1;
  y[1] = 0.5 * p.a2 * x * x + (0.5 * p.a2 * eps * h - p.beta2) * eps / p.lambda2;
  return y;
}

FastSlowMap from_standard_form(std::string name, const StandardFormMap& sf) {
  const int n = sf.n;
  const int k = sf.k;
  const int m = n - k;
  const double step = 1e-6 * std::max(1.0, sf.eps_max);
  auto split = [k, m](const Vector& z) {
    return std::pair<Vector, Vector>{z.head(k), z.tail(m)};
  };
  MapFunctions fns;
  fns.N = [n, k, m](const Vector&) {
    Matrix out = Matrix::Zero(n, m);
    out.bottomRows(m) = Matrix::Identity(m, m);
    (void)k;
    return out;
  };
  fns.f = [sf, split](const Vector& z) {
    const auto [x, y] = split(z);
    return sf.fast(x, y, 0.0);
  };
  fns.G = [sf, split, n, k, step](const Vector& z, double eps) {
    const auto [x, y] = split(z);
    Vector out(n);
    out.head(k) = sf.slow(x, y, eps);
    const double e = eps != 0.0 ? eps : step;
    out.tail(n - k) = (sf.fast(x, y, e) - sf.fast(x, y, 0.0)) / e;
    return out;
  };
  fns.direct = [sf, split, n, k](const Vector& z, double eps) {
    const auto [x, y] = split(z);
    Vector out(n);
    out.head(k) = x;
    if (eps != 0.0) out.head(k) += eps * sf.slow(x, y, eps);
    out.tail(n - k) = y + sf.fast(x, y, eps);
    return out;
  };
  return FastSlowMap(std::move(name), n, k, std::move(fns), sf.domain);
}

StandardFormMap chialvo_standard_form(const ChialvoParams& p) {
  validate(p);
  StandardFormMap sf;
  sf.n = 2;
  sf.k = 1;
  sf.slow = [p](const Vector& x, const Vector& y, double) {
    Vector g(1);
    g[0] = p.c - p.b * y[0] - p.a * x[0];
    return g;
  };
  sf.fast = [p](const Vector& x, const Vector& y, double) {
    Vector f(1);
    const double w = x[0], v = y[0];
    f[0] = v * v * std::exp(w - v) + p.k - v;
    return f;
  };
  sf.domain = chialvo(p).domain();
  return sf;
}

FastSlowMap linear_test_map(const Matrix& A, const Matrix& D, const Vector& g) {
  const int m = static_cast<int>(A.rows());
  const int k = static_cast<int>(A.cols());
  const int n = m + k;
  if (D.rows() != m || D.cols() != m || g.size() != n) {
    throw NumericalError(ErrorKind::InvalidArgument, "linear test map: inconsistent shapes");
  }
  MapFunctions fns;
  Matrix N = Matrix::Zero(n, m);
  N.bottomRows(m) = D;
  Matrix Df(m, n);
  Df.leftCols(k) = -A;
  Df.rightCols(m) = Matrix::Identity(m, m);
  fns.N = [N](const Vector&) { return N; };
  fns.f = [A, k, m](const Vector& z) -> Vector { return z.tail(m) - A * z.head(k); };
  fns.Df = [Df](const Vector&) { return Df; };
  fns.DN = [n, m](const Vector&) { return std::vector<Matrix>(static_cast<std::size_t>(n), Matrix::Zero(n, m)); };
  fns.G = [g](const Vector&, double) { return g; };
  fns.DG = [n](const Vector&, double) -> Matrix { return Matrix::Zero(n, n); };
  return FastSlowMap("linear", n, k, std::move(fns), Box::unbounded(n));
}

}  // namespace fastslow
