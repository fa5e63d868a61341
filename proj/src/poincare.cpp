#include "fastslow/poincare.hpp"

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <limits>

namespace fastslow {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Matrix field_jacobian(const OscillatorOde& ode, const Vector& u, double alpha) {
  if (ode.field_jacobian) return ode.field_jacobian(u, alpha);
  Vector s(ode.fast_dim + 1);
  s << u, alpha;
  return finite_difference_jacobian(
      [&ode](const Vector& p) -> Vector { return ode.field(p.head(ode.fast_dim), p[ode.fast_dim]); },
      s);
}

Vector drift_gradient(const OscillatorOde& ode, const Vector& u, double alpha) {
  if (ode.drift_gradient) return ode.drift_gradient(u, alpha);
  Vector s(ode.fast_dim + 1);
  s << u, alpha;
  const Matrix g = finite_difference_jacobian(
      [&ode](const Vector& p) {
        Vector out(1);
        out[0] = ode.drift(p.head(ode.fast_dim), p[ode.fast_dim]);
        return out;
      },
      s);
  return g.row(0).transpose();
}

// Layout of the integrated vector: [u (d), alpha, quadrature, monodromy (D x D, column major)].
struct Layout {
  int d;
  int D;  // d + 1
  bool variational;
  std::size_t size() const {
    return static_cast<std::size_t>(D + 1 + (variational ? D * D : 0));
  }
};

struct System {
  const OscillatorOde* ode;
  double eps;
  Layout lay;

  void operator()(const State& s, State& ds, double) const {
    const int d = lay.d;
    const int D = lay.D;
    const Vector u = Eigen::Map<const Vector>(s.data(), d);
    const double alpha = s[static_cast<std::size_t>(d)];
    const Vector F = ode->field(u, alpha);
    const double g = ode->drift(u, alpha);
    for (int i = 0; i < d; ++i) ds[static_cast<std::size_t>(i)] = F[i];
    ds[static_cast<std::size_t>(d)] = eps * g;
    ds[static_cast<std::size_t>(D)] = g;
    if (!lay.variational) return;
    Matrix J(D, D);
    J.topRows(d) = field_jacobian(*ode, u, alpha);
    J.row(d) = eps * drift_gradient(*ode, u, alpha).transpose();
    const Eigen::Map<const Matrix> Phi(s.data() + D + 1, D, D);
    Eigen::Map<Matrix> dPhi(ds.data() + D + 1, D, D);
    dPhi.noalias() = J * Phi;
  }
};

Vector full_field(const OscillatorOde& ode, const Vector& s, double eps) {
  const int d = ode.fast_dim;
  Vector out(d + 1);
  out.head(d) = ode.field(s.head(d), s[d]);
  out[d] = eps * ode.drift(s.head(d), s[d]);
  return out;
}

}  // namespace

Path integrate(const OscillatorOde& ode, const Vector& s0, double eps, double t_end, double tol) {
  const Layout lay{ode.fast_dim, ode.fast_dim + 1, false};
  State x(lay.size(), 0.0);
  for (int i = 0; i < lay.D; ++i) x[static_cast<std::size_t>(i)] = s0[i];
  Path path;
  auto observer = [&](const State& s, double t) {
    path.t.push_back(t);
    path.states.push_back(Eigen::Map<const Vector>(s.data(), lay.D));
  };
  const double dt0 = (t_end >= 0.0 ? 1.0 : -1.0) * 1e-3 * std::max(ode.period_hint, 1e-3);
  try {
    odeint::integrate_adaptive(odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>()),
                               System{&ode, eps, lay}, x, 0.0, t_end, dt0, observer);
  } catch (const std::exception& e) {
    throw NumericalError(ErrorKind::StepFailure, std::string("integration failed: ") + e.what());
  }
  for (const auto& s : path.states) {
    if (!s.allFinite()) throw NumericalError(ErrorKind::StepFailure, "integration produced non-finite state");
  }
  return path;
}

Vector lift_to_section(const SectionSpec& section, const Vector& p) {
  const int D = static_cast<int>(p.size()) + 1;
  const int d = D - 1;
  Vector s(D);
  const Vector rest = p.head(d - 1);
  const double alpha = p[d - 1];
  int j = 0;
  for (int i = 0; i < d; ++i) {
    if (i == section.index) continue;
    s[i] = rest[j++];
  }
  s[section.index] = section.Y(rest, alpha);
  s[d] = alpha;
  return s;
}

Vector section_coordinates(const SectionSpec& section, const Vector& s) {
  const int D = static_cast<int>(s.size());
  const int d = D - 1;
  Vector p(d);
  int j = 0;
  for (int i = 0; i < d; ++i) {
    if (i == section.index) continue;
    p[j++] = s[i];
  }
  p[d - 1] = s[d];
  return p;
}

namespace {

double section_residual(const SectionSpec& section, const Vector& s) {
  const Vector p = section_coordinates(section, s);
  const int d = static_cast<int>(s.size()) - 1;
  return s[section.index] - section.Y(p.head(d - 1), p[d - 1]);
}

// Gradient of the section residual with respect to the full state.
Vector section_gradient(const SectionSpec& section, const Vector& s) {
  const int D = static_cast<int>(s.size());
  const int d = D - 1;
  Vector grad = Vector::Zero(D);
  grad[section.index] = 1.0;
  if (section.Y_gradient) {
    const Vector p = section_coordinates(section, s);
    const Vector gy = section.Y_gradient(p.head(d - 1), p[d - 1]);
    int j = 0;
    for (int i = 0; i < d; ++i) {
      if (i == section.index) continue;
      grad[i] -= gy[j++];
    }
    grad[d] -= gy[d - 1];
  }
  return grad;
}

Matrix lift_derivative(const SectionSpec& section, const Vector& p) {
  const int n = static_cast<int>(p.size());
  const int D = n + 1;
  const int d = D - 1;
  Matrix L = Matrix::Zero(D, n);
  int j = 0;
  for (int i = 0; i < d; ++i) {
    if (i == section.index) continue;
    L(i, j) = 1.0;
    ++j;
  }
  L(d, n - 1) = 1.0;
  if (section.Y_gradient) L.row(section.index) = section.Y_gradient(p.head(n - 1), p[n - 1]).transpose();
  return L;
}

Matrix drop_section_row(const SectionSpec& section, const Matrix& m) {
  Matrix out(m.rows() - 1, m.cols());
  int j = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i == section.index) continue;
    out.row(j++) = m.row(i);
  }
  return out;
}

}  // namespace

ReturnRecord return_map(const OscillatorOde& ode, const SectionSpec& section, const Vector& p,
                        double eps, const IntegratorOptions& opts) {
  const Layout lay{ode.fast_dim, ode.fast_dim + 1, true};
  const int D = lay.D;
  const System sys{&ode, eps, lay};
  const double t_cap = opts.t_cap > 0.0 ? opts.t_cap : 10.0 * ode.period_hint;
  const double dir = section.direction >= 0 ? 1.0 : -1.0;

  const Vector s0 = lift_to_section(section, p);
  State x(lay.size(), 0.0);
  for (int i = 0; i < D; ++i) x[static_cast<std::size_t>(i)] = s0[i];
  for (int i = 0; i < D; ++i) x[static_cast<std::size_t>(D + 1 + i * D + i)] = 1.0;

  auto head = [D](const State& s) { return Vector(Eigen::Map<const Vector>(s.data(), D)); };
  auto residual = [&](const State& s) { return section_residual(section, head(s)); };

  auto stepper = odeint::make_dense_output(opts.tol, opts.tol, odeint::runge_kutta_dopri5<State>());
  stepper.initialize(x, 0.0, 1e-3 * ode.period_hint);

  double t0 = 0.0, t1 = 0.0;
  State x0, x1;
  for (;;) {
    try {
      const auto span = stepper.do_step(sys);
      t0 = span.first;
      t1 = span.second;
    } catch (const std::exception& e) {
      throw NumericalError(ErrorKind::StepFailure, std::string("integration failed: ") + e.what());
    }
    x1 = stepper.current_state();
    if (!head(x1).allFinite()) throw NumericalError(ErrorKind::StepFailure, "non-finite state");
    if (t0 > 0.0) {
      x0 = stepper.previous_state();
      const double r0 = dir * residual(x0);
      const double r1 = dir * residual(x1);
      if (r0 < 0.0 && r1 >= 0.0) break;
    }
    if (t1 > t_cap) {
      throw NumericalError(ErrorKind::NoReturn,
                           "no return to the section within t = " + format_number(t_cap));
    }
  }

  // Illinois iteration on the dense output.
  State xs(lay.size());
  auto dense_r = [&](double t) {
    stepper.calc_state(t, xs);
    return residual(xs);
  };
  double a = t0, b = t1;
  double fa = residual(x0), fb = residual(x1);
  int side = 0;
  for (int it = 0; it < 100 && std::abs(b - a) > 1e-15 * (1.0 + std::abs(b)); ++it) {
    const double c = (a * fb - b * fa) / (fb - fa);
    const double fc = dense_r(c);
    if (fc == 0.0) {
      a = b = c;
      break;
    }
    if ((fc > 0.0) == (fb > 0.0)) {
      b = c;
      fb = fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = c;
      fa = fc;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
  }
  double t_event = std::abs(fa) < std::abs(fb) ? a : b;

  // Re-evaluate with a single Runge-Kutta step from the last accepted state so
  // that the landing carries the integrator's own accuracy; secant on the step.
  odeint::runge_kutta_dopri5<State> rk;
  State out(lay.size());
  State dxdt0(lay.size()), dxdt_out(lay.size());
  sys(x0, dxdt0, t0);
  // Derivatives are passed explicitly: the FSAL form would reuse the previous output's.
  auto step_r = [&](double dt) {
    rk.do_step(sys, x0, dxdt0, t0, out, dxdt_out, dt);
    return residual(out);
  };
  double h1 = t_event - t0;
  double r1 = step_r(h1);
  double h0 = h1 * (1.0 - 1e-7);
  double r0 = step_r(h0);
  for (int it = 0; it < 30 && std::abs(r1) > 1e-15 && r1 != r0; ++it) {
    const double h2 = h1 - r1 * (h1 - h0) / (r1 - r0);
    h0 = h1;
    r0 = r1;
    h1 = h2;
    r1 = step_r(h1);
    if (std::abs(h1 - h0) <= 1e-16 * (1.0 + std::abs(t0 + h1))) break;
  }
  step_r(h1);
  t_event = t0 + h1;

  ReturnRecord rec;
  rec.start = p;
  rec.eps = eps;
  rec.tol = opts.tol;
  rec.time = t_event;
  rec.landing_state = head(out);
  rec.landing = section_coordinates(section, rec.landing_state);
  rec.section_residual = section_residual(section, rec.landing_state);
  rec.quadrature = out[static_cast<std::size_t>(D)];

  const Vector F = full_field(ode, rec.landing_state, eps);
  const Vector grad = section_gradient(section, rec.landing_state);
  const double rate = grad.dot(F);
  if (!(std::abs(rate) >= 1e-6)) {
    throw NumericalError(ErrorKind::TangentialCrossing,
                         "section crossing rate " + format_number(rate) + " below 1e-6");
  }
  const Eigen::Map<const Matrix> Phi(out.data() + D + 1, D, D);
  const Matrix correction = Matrix::Identity(D, D) - F * grad.transpose() / rate;
  rec.derivative = drop_section_row(section, correction * Phi * lift_derivative(section, p));
  return rec;
}

Chart poincare_chart(const SectionSpec&, int fast_dim) {
  Chart c;
  for (int i = 0; i < fast_dim - 1; ++i) c.y_idx.push_back(i);
  c.x_idx.push_back(fast_dim - 1);
  return c;
}

FastSlowMap build_poincare_map(const OscillatorOde& ode, const SectionSpec& section,
                               const IntegratorOptions& opts) {
  const int n = ode.fast_dim;  // section coordinates (x, alpha)
  const int m = n - 1;
  constexpr double kEpsStep = 1e-5;
  auto land = [ode, section, opts](const Vector& p, double eps) {
    return return_map(ode, section, p, eps, opts);
  };
  MapFunctions fns;
  fns.N = [n, m](const Vector&) {
    Matrix N = Matrix::Zero(n, m);
    N.topRows(m) = Matrix::Identity(m, m);
    return N;
  };
  fns.f = [land, m](const Vector& p) -> Vector { return land(p, 0.0).landing.head(m) - p.head(m); };
  fns.Df = [land, n, m](const Vector& p) -> Matrix {
    Matrix d = land(p, 0.0).derivative.topRows(m);
    d.leftCols(m) -= Matrix::Identity(m, m);
    (void)n;
    return d;
  };
  fns.DN = [n, m](const Vector&) { return std::vector<Matrix>(static_cast<std::size_t>(n), Matrix::Zero(n, m)); };
  fns.G = [land](const Vector& p, double eps) -> Vector {
    const double e = eps != 0.0 ? eps : kEpsStep;
    return (land(p, e).landing - land(p, 0.0).landing) / e;
  };
  fns.direct = [land](const Vector& p, double eps) { return land(p, eps).landing; };
  fns.direct_jacobian = [land](const Vector& p, double eps) { return land(p, eps).derivative; };
  return FastSlowMap("poincare:" + ode.name, n, 1, std::move(fns), section.box);
}

Vector poincare_critical_point(const FastSlowMap& map, double alpha, const Vector& x_seed) {
  const int n = map.dim();
  const int m = n - 1;
  Vector p(n);
  p << x_seed, alpha;
  double r = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 30; ++it) {
    const Vector F = map.f(p);
    r = max_abs(F);
    if (r <= 1e-14) return p;
    const Matrix J = map.Df(p).leftCols(m);
    const Vector dx = J.partialPivLu().solve(-F);
    if (!dx.allFinite()) break;
    p.head(m) += dx;
    if (max_abs(dx) <= 1e-13 * (1.0 + max_abs(p.head(m)))) return p;
  }
  if (r <= 1e-10) return p;
  throw NumericalError(ErrorKind::NewtonDiverged,
                       "layer cycle not found at alpha = " + format_number(alpha));
}

double averaged_g(const OscillatorOde& ode, const SectionSpec& section, const FastSlowMap& map,
                  double alpha, const Vector& x_seed, const IntegratorOptions& opts) {
  const Vector p = poincare_critical_point(map, alpha, x_seed);
  return return_map(ode, section, p, 0.0, opts).quadrature;
}

std::vector<LimitCycleRoot> limit_cycle_condition(const OscillatorOde& ode,
                                                  const SectionSpec& section,
                                                  const FastSlowMap& map, double alpha_lo,
                                                  double alpha_hi, int grid,
                                                  const Vector& x_seed,
                                                  const IntegratorOptions& opts) {
  if (grid < 2 || !(alpha_hi > alpha_lo)) {
    throw NumericalError(ErrorKind::InvalidArgument, "limit-cycle scan needs a proper alpha range");
  }
  const int m = map.dim() - 1;
  Vector seed = x_seed;
  auto g_at = [&](double alpha) {
    const Vector p = poincare_critical_point(map, alpha, seed);
    seed = p.head(m);
    return return_map(ode, section, p, 0.0, opts).quadrature;
  };
  const double step = (alpha_hi - alpha_lo) / (grid - 1);
  const double fd = 1e-4 * (alpha_hi - alpha_lo);
  std::vector<LimitCycleRoot> roots;
  auto finish = [&](double alpha) {
    LimitCycleRoot root;
    root.alpha = alpha;
    root.derivative = (g_at(alpha + fd) - g_at(alpha - fd)) / (2.0 * fd);
    root.hyperbolic = std::abs(root.derivative) > 1e-6;
    roots.push_back(root);
  };
  double a_prev = alpha_lo;
  double g_prev = g_at(a_prev);
  if (g_prev == 0.0) finish(a_prev);
  for (int i = 1; i < grid; ++i) {
    const double a_cur = i == grid - 1 ? alpha_hi : alpha_lo + i * step;
    const Vector seed_here = seed;
    const double g_cur = g_at(a_cur);
    const Vector seed_next = seed;
    if (g_cur == 0.0) {
      finish(a_cur);
    } else if (g_prev != 0.0 && (g_cur > 0.0) != (g_prev > 0.0)) {
      seed = seed_here;
      double a = a_prev, b = a_cur, fa = g_prev, fb = g_cur;
      int side = 0;
      for (int it = 0; it < 100 && std::abs(b - a) > 1e-13; ++it) {
        const double c = (a * fb - b * fa) / (fb - fa);
        const double fc = g_at(c);
        if (std::abs(fc) <= 1e-14) {
          a = b = c;
          break;
        }
        if ((fc > 0.0) == (fb > 0.0)) {
          b = c;
          fb = fc;
          if (side == -1) fa *= 0.5;
          side = -1;
        } else {
          a = c;
          fa = fc;
          if (side == 1) fb *= 0.5;
          side = 1;
        }
      }
      finish(std::abs(fa) < std::abs(fb) ? a : b);
    }
    seed = seed_next;
    a_prev = a_cur;
    g_prev = g_cur;
  }
  return roots;
}

OscillatorOde hopf_oscillator(const HopfParams& hp) {
  OscillatorOde ode;
  ode.name = "hopf";
  ode.fast_dim = 2;
  ode.period_hint = 2.0 * M_PI;
  ode.field = [](const Vector& u, double alpha) {
    const double x = u[0], y = u[1], r2 = x * x + y * y;
    Vector out(2);
    out << alpha * x - y - x * r2, x + alpha * y - y * r2;
    return out;
  };
  ode.field_jacobian = [](const Vector& u, double alpha) {
    const double x = u[0], y = u[1], r2 = x * x + y * y;
    Matrix J(2, 3);
    J << alpha - r2 - 2 * x * x, -1.0 - 2 * x * y, x,
         1.0 - 2 * x * y, alpha - r2 - 2 * y * y, y;
    return J;
  };
  if (hp.drift == "quadratic") {
    const double a_g = hp.a_g;
    ode.drift = [a_g](const Vector& u, double) { return a_g - u.squaredNorm(); };
    ode.drift_gradient = [](const Vector& u, double) {
      Vector g(3);
      g << -2.0 * u[0], -2.0 * u[1], 0.0;
      return g;
    };
  } else if (hp.drift == "one") {
    ode.drift = [](const Vector&, double) { return 1.0; };
    ode.drift_gradient = [](const Vector&, double) -> Vector { return Vector::Zero(3); };
  } else if (hp.drift == "x") {
    ode.drift = [](const Vector& u, double) { return u[0]; };
    ode.drift_gradient = [](const Vector&, double) {
      Vector g(3);
      g << 1.0, 0.0, 0.0;
      return g;
    };
  } else {
    throw NumericalError(ErrorKind::InvalidArgument, "unknown Hopf drift '" + hp.drift + "'");
  }
  return ode;
}

SectionSpec hopf_section() {
  SectionSpec s;
  s.index = 1;
  s.direction = 1;
  s.box = Box{Vector(2), Vector(2)};
  s.box.lo << 0.2, 0.2;
  s.box.hi << 1.5, 0.8;
  return s;
}

}  // namespace fastslow
