#include "fastslow/app.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace fastslow::app {

namespace {

using json = nlohmann::ordered_json;

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Config reading

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
    std::string where;
    for (const auto& k : path) where += (where.empty() ? "" : ".") + k;
    throw ConfigError("config line " + std::to_string(line_of(path)) + ": " +
                      (where.empty() ? "" : where + ": ") + msg);
  }

  // Line of the last key of `path` that can be found in order in the text.
  int line_of(const std::vector<std::string>& path) const {
    std::size_t pos = 0;
    for (const auto& k : path) {
      const auto q = text_.find("\"" + k + "\"", pos);
      if (q == std::string::npos) break;
      pos = q;
    }
    return line_at(pos);
  }

  int line_at(std::size_t offset) const {
    offset = std::min(offset, text_.size());
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<long>(offset), '\n'));
  }

  double number(const json& j, const std::vector<std::string>& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
  }
  double positive(const json& j, const std::vector<std::string>& path) const {
    const double x = number(j, path);
    if (!(x > 0.0)) fail(path, "must be positive");
    return x;
  }
  long integer(const json& j, const std::vector<std::string>& path, long min) const {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    const long x = j.get<long>();
    if (x < min) fail(path, "must be at least " + std::to_string(min));
    return x;
  }
  std::string string(const json& j, const std::vector<std::string>& path) const {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
  }
  const json& object(const json& j, const std::vector<std::string>& path) const {
    if (!j.is_object()) fail(path, "expected an object");
    return j;
  }
  std::vector<double> numbers(const json& j, const std::vector<std::string>& path) const {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : j) out.push_back(number(e, path));
    return out;
  }
  std::pair<double, double> interval(const json& j, const std::vector<std::string>& path) const {
    const auto v = numbers(j, path);
    if (v.size() != 2 || !(v[0] < v[1])) fail(path, "expected [lo, hi] with lo < hi");
    return {v[0], v[1]};
  }

 private:
  const std::string& text_;
};

Direction parse_direction(const Reader& r, const json& j, const std::vector<std::string>& path) {
  const auto s = r.string(j, path);
  if (s == "forward") return Direction::Forward;
  if (s == "backward") return Direction::Backward;
  r.fail(path, "direction must be \"forward\" or \"backward\"");
}

void parse_params(const Reader& r, const json& j, Config& cfg) {
  const std::vector<std::string> base{"params"};
  r.object(j, base);
  for (const auto& [key, val] : j.items()) {
    const std::vector<std::string> path{"params", key};
    if (cfg.model == "chialvo" || cfg.model == "standard:chialvo") {
      if (key == "a") cfg.chialvo.a = r.number(val, path);
      else if (key == "b") cfg.chialvo.b = r.number(val, path);
      else if (key == "c") cfg.chialvo.c = r.number(val, path);
      else if (key == "k") cfg.chialvo.k = r.number(val, path);
      else r.fail(path, "unknown parameter for " + cfg.model);
    } else if (cfg.model == "euler:linear") {
      if (key == "lambda1") cfg.linear.lambda1 = r.number(val, path);
      else if (key == "lambda2") cfg.linear.lambda2 = r.number(val, path);
      else if (key == "a1") cfg.linear.a1 = r.number(val, path);
      else if (key == "a2") cfg.linear.a2 = r.number(val, path);
      else if (key == "beta1") cfg.linear.beta1 = r.number(val, path);
      else if (key == "beta2") cfg.linear.beta2 = r.number(val, path);
      else if (key == "h") cfg.h = r.positive(val, path);
      else r.fail(path, "unknown parameter for " + cfg.model);
    } else {
      if (key == "drift") {
        cfg.hopf.drift = r.string(val, path);
        if (cfg.hopf.drift != "quadratic" && cfg.hopf.drift != "one" && cfg.hopf.drift != "x")
          r.fail(path, "drift must be quadratic, one or x");
      } else if (key == "a_g") {
        cfg.hopf.a_g = r.number(val, path);
      } else {
        r.fail(path, "unknown parameter for " + cfg.model);
      }
    }
  }
  if (cfg.model == "chialvo" || cfg.model == "standard:chialvo") {
    try {
      validate(cfg.chialvo);
    } catch (const NumericalError& e) {
      r.fail(base, e.what());
    }
  }
  if (cfg.model == "euler:linear" && (cfg.linear.lambda1 == 0.0 || cfg.linear.lambda2 == 0.0))
    r.fail(base, "lambda1 and lambda2 must be nonzero");
}

UniformAxis parse_axis(const Reader& r, const json& j, const std::vector<std::string>& path,
                       BranchSpec* branch) {
  r.object(j, path);
  UniformAxis ax{kNaN, kNaN, 0};
  for (const auto& [key, val] : j.items()) {
    auto p = path;
    p.push_back(key);
    if (key == "lo") ax.lo = r.number(val, p);
    else if (key == "hi") ax.hi = r.number(val, p);
    else if (key == "nodes") ax.count = static_cast<int>(r.integer(val, p, 4));
    else if (key == "direction" && branch) branch->direction = parse_direction(r, val, p);
    else r.fail(p, "unknown key");
  }
  if (!(ax.lo < ax.hi)) r.fail(path, "needs lo < hi");
  if (ax.count == 0) ax.count = branch ? 400 : 2000;
  return ax;
}

}  // namespace

Config parse_config(const std::string& text) {
  const Reader r(text);
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config line " + std::to_string(r.line_at(e.byte == 0 ? 0 : e.byte - 1)) +
                      ": malformed JSON");
  }
  if (!root.is_object()) r.fail({}, "top level must be an object");

  Config cfg;
  if (root.contains("model")) cfg.model = r.string(root["model"], {"model"});
  const auto names = model_names();
  if (std::find(names.begin(), names.end(), cfg.model) == names.end())
    r.fail({"model"}, "unknown model '" + cfg.model + "'");

  for (const auto& [key, val] : root.items()) {
    const std::vector<std::string> path{key};
    if (key == "schema") {
      if (r.integer(val, path, 0) != kSchemaVersion)
        r.fail(path, "unsupported schema version");
    } else if (key == "model") {
    } else if (key == "params") {
      parse_params(r, val, cfg);
    } else if (key == "eps") {
      cfg.eps = r.number(val, path);
      if (!(cfg.eps >= 0.0)) r.fail(path, "must be non-negative");
    } else if (key == "scan") {
      cfg.scan = parse_axis(r, val, path, nullptr);
    } else if (key == "branches") {
      if (!val.is_array() || val.empty()) r.fail(path, "expected a non-empty array");
      for (const auto& e : val) {
        BranchSpec b;
        const auto ax = parse_axis(r, e, path, &b);
        b.lo = ax.lo;
        b.hi = ax.hi;
        b.nodes = ax.count;
        cfg.branches.push_back(b);
      }
    } else if (key == "h_sweep") {
      cfg.h_sweep = r.numbers(val, path);
      for (double h : cfg.h_sweep)
        if (!(h > 0.0)) r.fail(path, "steps must be positive");
    } else if (key == "simulate") {
      for (const auto& [k2, v2] : r.object(val, path).items()) {
        const std::vector<std::string> p{key, k2};
        if (k2 == "z0") cfg.z0 = r.numbers(v2, p);
        else if (k2 == "steps") cfg.steps = r.integer(v2, p, 0);
        else r.fail(p, "unknown key");
      }
    } else if (key == "reduced") {
      for (const auto& [k2, v2] : r.object(val, path).items()) {
        const std::vector<std::string> p{key, k2};
        if (k2 == "start") cfg.reduced_start = r.number(v2, p);
        else if (k2 == "steps") cfg.reduced_steps = r.integer(v2, p, 0);
        else if (k2 == "m") cfg.m = r.integer(v2, p, 1);
        else if (k2 == "base_grid") cfg.base_grid = static_cast<int>(r.integer(v2, p, 1));
        else r.fail(p, "unknown key");
      }
    } else if (key == "regimes") {
      for (const auto& [k2, v2] : r.object(val, path).items()) {
        const std::vector<std::string> p{key, k2};
        if (k2 == "steps") cfg.regime_steps = r.integer(v2, p, 1);
        else r.fail(p, "unknown key");
      }
    } else if (key == "euler_study") {
      for (const auto& [k2, v2] : r.object(val, path).items()) {
        const std::vector<std::string> p{key, k2};
        if (k2 == "eps") cfg.euler_eps = r.numbers(v2, p);
        else if (k2 == "h") cfg.euler_h = r.numbers(v2, p);
        else r.fail(p, "unknown key");
      }
    } else if (key == "poincare") {
      for (const auto& [k2, v2] : r.object(val, path).items()) {
        const std::vector<std::string> p{key, k2};
        if (k2 == "alpha_range") cfg.alpha_range = r.interval(v2, p);
        else r.fail(p, "unknown key");
      }
    } else {
      r.fail(path, "unknown key");
    }
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Model registry

std::vector<std::string> model_names() {
  return {"chialvo", "standard:chialvo", "euler:linear", "poincare:hopf"};
}

namespace {

Vector scalar(double x) {
  Vector v(1);
  v << x;
  return v;
}

ModelSetup chialvo_setup(const Config& cfg, FastSlowMap map) {
  const auto& p = cfg.chialvo;
  namespace cx = chialvo_exact;
  const double vm = cx::v_minus(p), vp = cx::v_plus(p), vf = cx::v_flip(p);
  const double span = vf - vp;
  std::vector<BranchSpec> branches{
      {vp + 0.07 * span, vf - 0.05 * span, 400, Direction::Forward},
      {vf + 0.2, vf + 1.5, 400, Direction::Backward}};
  if (p.a == 1.0 && p.b == 5.0 && p.c == 3.5 && p.k == 0.035)
    branches = {{1.1, 2.9, 400, Direction::Forward}, {3.2, 4.5, 400, Direction::Backward}};

  std::vector<std::pair<double, double>> ranges;
  const double margin = 0.05;
  auto add = [&](double lo, double hi) {
    if (hi - lo > 2.0 * margin) ranges.emplace_back(lo + margin, hi - margin);
  };
  add(p.k, vm);
  add(vm, vp);
  add(vp, vf);
  add(vf, 5.0 + margin);

  return ModelSetup{std::move(map),
                    chialvo_chart(),
                    cfg.scan.value_or(UniformAxis{p.k + 0.01, 5.0, 2000}),
                    [p](double v) { return scalar(cx::phi0(p, v)); },
                    std::move(branches),
                    std::move(ranges)};
}

}  // namespace

ModelSetup build_model(const Config& cfg) {
  if (cfg.model == "chialvo") return chialvo_setup(cfg, chialvo(cfg.chialvo));
  if (cfg.model == "standard:chialvo")
    return chialvo_setup(cfg, from_standard_form("standard:chialvo", chialvo_standard_form(cfg.chialvo)));
  if (cfg.model == "euler:linear") {
    const auto p = cfg.linear;
    return ModelSetup{euler_discretize(linear_slow_ode(p), cfg.h),
                      Chart{{0}, {1, 2}},
                      cfg.scan.value_or(UniformAxis{-1.0, 1.0, 201}),
                      [p](double x) { return linear_slow_ode_manifold(p, x, 0.0); },
                      cfg.branches.empty() ? std::vector<BranchSpec>{{-1.0, 1.0, 201, Direction::Forward}}
                                           : cfg.branches,
                      {{-1.0, 1.0}}};
  }
  if (cfg.model == "poincare:hopf") {
    const auto sec = hopf_section();
    const auto [lo, hi] = cfg.alpha_range;
    return ModelSetup{build_poincare_map(hopf_oscillator(cfg.hopf), sec),
                      poincare_chart(sec, 2),
                      cfg.scan.value_or(UniformAxis{lo, hi, 41}),
                      [](double a) { return scalar(std::sqrt(a)); },
                      cfg.branches.empty() ? std::vector<BranchSpec>{{lo, hi, 41, Direction::Forward}}
                                           : cfg.branches,
                      {{lo, hi}}};
  }
  throw ConfigError("unknown model '" + cfg.model + "'");
}

std::vector<Vector> sample_on_critical(const ModelSetup& m, std::mt19937_64& rng, int count) {
  std::vector<double> weights;
  for (const auto& [lo, hi] : m.sample_ranges) weights.push_back(hi - lo);
  if (weights.empty()) throw NumericalError(ErrorKind::InvalidArgument, "model has no sample ranges");
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::vector<Vector> out;
  for (int i = 0; i < count; ++i) {
    const auto [lo, hi] = m.sample_ranges[static_cast<std::size_t>(pick(rng))];
    const double s = std::uniform_real_distribution<double>(lo, hi)(rng);
    const Vector x = scalar(s);
    out.push_back(m.chart.compose(x, solve_on_critical(m.map, m.chart, x, m.seed(s))));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Analyses

std::vector<SingularityHit> find_singularities(const ModelSetup& m) {
  const auto curve = critical_curve(m.map, m.chart, m.scan, m.seed(m.scan.lo));
  return locate_singularities(m.map, curve);
}

std::vector<BranchSummary> summarize_branches(const ModelSetup& m,
                                              const std::vector<SingularityHit>& hits) {
  std::vector<double> cuts{m.scan.lo};
  for (const auto& h : hits) cuts.push_back(h.coord);
  cuts.push_back(m.scan.hi);
  std::sort(cuts.begin(), cuts.end());

  const double margin = 2.0 * m.scan.step();
  const int samples = 25;
  std::vector<BranchSummary> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i] + (i == 0 ? 0.0 : margin);
    const double hi = cuts[i + 1] - (i + 2 == cuts.size() ? 0.0 : margin);
    if (!(hi > lo)) continue;
    std::vector<Vector> pts;
    for (int j = 0; j < samples; ++j) {
      const double s = lo + (hi - lo) * j / (samples - 1);
      const Vector x = scalar(s);
      pts.push_back(m.chart.compose(x, solve_on_critical(m.map, m.chart, x, m.seed(s))));
    }
    BranchSummary b;
    b.lo = cuts[i];
    b.hi = cuts[i + 1];
    b.bounds = spectral_bounds(m.map, pts);
    b.classification = classify_point(m.map, pts[samples / 2]);
    out.push_back(b);
  }
  return out;
}

SlowManifoldTable compute_slow_manifold(const ModelSetup& m, const BranchSpec& b, double eps,
                                        const GraphTransformOptions& opts) {
  const UniformAxis ax{b.lo, b.hi, b.nodes};
  auto critical = solve_critical_graph(m.map, m.chart, {ax}, m.seed(b.lo));
  auto first = slow_manifold_first_order(m.map, critical, eps);
  auto numeric = slow_manifold_numeric(m.map, critical, eps, b.direction, opts);
  Vector residual = invariance_residuals(m.map, numeric.graph, eps);
  return SlowManifoldTable{b, std::move(critical), std::move(first), std::move(numeric),
                           std::move(residual)};
}

std::string slow_manifold_csv(const SlowManifoldTable& t, const std::string& model) {
  std::ostringstream os;
  const auto& g = t.numeric.graph;
  os << "# schema: 1, model: " << model << ", eps: " << format_number(g.eps())
     << ", direction: " << (t.branch.direction == Direction::Forward ? "forward" : "backward")
     << ", sweeps: " << t.numeric.sweeps << "\n";
  const int k = g.slow_dim(), m = g.value_dim();
  std::string head;
  for (int i = 0; i < k; ++i) head += "x_" + std::to_string(i) + ",";
  for (const char* name : {"phi0_", "phi_eps_firstorder_", "phi_eps_numeric_"})
    for (int i = 0; i < m; ++i) head += name + std::to_string(i) + ",";
  os << head << "residual\n";
  for (int j = 0; j < g.node_count(); ++j) {
    const Vector x = g.node(j);
    for (int i = 0; i < k; ++i) os << format_number(x[i]) << ',';
    for (const Matrix* v : {&t.critical.values(), &t.first_order.values(), &g.values()})
      for (int i = 0; i < m; ++i) os << format_number((*v)(j, i)) << ',';
    os << format_number(t.residual[j]) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Chialvo regimes

const char* to_string(RegimeCase c) {
  switch (c) {
    case RegimeCase::I: return "I";
    case RegimeCase::II: return "II";
    case RegimeCase::III: return "III";
    case RegimeCase::IV: return "IV";
  }
  return "?";
}

const char* to_string(RegimeLabel l) {
  switch (l) {
    case RegimeLabel::Excitable: return "Excitable";
    case RegimeLabel::Relaxation: return "Relaxation";
    case RegimeLabel::NonChaoticBursting: return "NonChaoticBursting";
    case RegimeLabel::ChaoticBursting: return "ChaoticBursting";
    case RegimeLabel::Unclassified: return "Unclassified";
  }
  return "?";
}

RegimeCase parse_regime_case(const std::string& s) {
  if (s == "I") return RegimeCase::I;
  if (s == "II") return RegimeCase::II;
  if (s == "III") return RegimeCase::III;
  if (s == "IV") return RegimeCase::IV;
  throw ConfigError("unknown regime case '" + s + "' (expected I, II, III or IV)");
}

ChialvoParams regime_params(RegimeCase c) {
  ChialvoParams p;
  p.a = 1.0;
  p.b = 5.0;
  switch (c) {
    case RegimeCase::I: p.c = 7.0; p.k = 0.07; break;
    case RegimeCase::II: p.c = 3.5; p.k = 0.07; break;
    case RegimeCase::III: p.c = 3.5; p.k = 0.035; break;
    case RegimeCase::IV: p.c = 3.5; p.k = 0.02; break;
  }
  return p;
}

std::string chialvo_branch(const ChialvoParams& p, double v) {
  namespace cx = chialvo_exact;
  if (v < cx::v_minus(p)) return "S-a";
  if (v < cx::v_plus(p)) return "S-r";
  if (v < cx::v_flip(p)) return "S+a";
  return "S+r";
}

namespace {

// Largest |second difference| over the even- and odd-indexed subsequences.
double parity_roughness(const std::vector<double>& w) {
  double worst = 0.0;
  for (std::size_t start = 0; start < 2; ++start)
    for (std::size_t i = start; i + 4 < w.size(); i += 2)
      worst = std::max(worst, std::abs(w[i + 4] - 2.0 * w[i + 2] + w[i]));
  return worst;
}

}  // namespace

RegimeReport run_regimes(double eps, RegimeCase c, long steps, const RegimeThresholds& th) {
  Vector z0(2);
  z0 << 0.25, 2.0;
  return run_regimes(eps, regime_params(c), c, z0, steps, th);
}

RegimeReport run_regimes(double eps, const ChialvoParams& p, RegimeCase c, const Vector& z0,
                         long steps, const RegimeThresholds& th) {
  namespace cx = chialvo_exact;
  if (!(eps <= 1e-2)) throw NumericalError(ErrorKind::ParamOutOfRange, "regimes need eps <= 1e-2");
  RegimeReport rep;
  rep.regime_case = c;
  rep.params = p;
  rep.eps = eps;
  rep.z0 = z0;
  const auto map = chialvo(p);
  rep.trajectory = iterate(map, z0, eps, steps);
  auto& d = rep.diagnostics;
  d.domain_exit = rep.trajectory.exit_index.has_value();

  const auto roots = chialvo_equilibria(p);
  FixedPointReport fp;
  bool have_fp = false;
  if (!roots.empty()) {
    Vector guess(2);
    guess << cx::phi0(p, roots.front()), roots.front();
    fp = find_fixed_point(map, guess, eps);
    have_fp = true;
    d.fixed_point_v = fp.z[1];
    d.fixed_point_branch = chialvo_branch(p, fp.z[1]);
    d.fixed_point_stability = fastslow::to_string(fp.stability);
  }

  const auto& pts = rep.trajectory.points;
  const std::size_t n = pts.size() - (d.domain_exit ? 1 : 0);
  const std::size_t tail0 = static_cast<std::size_t>(std::floor(n * (1.0 - th.tail_fraction)));
  const std::size_t settle0 = static_cast<std::size_t>(std::floor(n * (1.0 - th.settle_fraction)));

  d.tail_distance = have_fp ? 0.0 : kNaN;
  for (std::size_t i = settle0; i < n && have_fp; ++i)
    d.tail_distance = std::max(d.tail_distance, (pts[i].z - fp.z).lpNorm<Eigen::Infinity>());

  const double vp = cx::v_plus(p), vf = cx::v_flip(p);
  d.w_fold_plus = cx::phi0(p, vp);
  d.w_fold_minus = cx::phi0(p, cx::v_minus(p));
  d.w_flip = cx::phi0(p, vf);
  d.w_min = std::numeric_limits<double>::infinity();
  d.w_max = -d.w_min;
  d.v_max = -d.w_min;
  std::vector<double> v;
  for (std::size_t i = tail0; i < n; ++i) {
    d.w_min = std::min(d.w_min, pts[i].z[0]);
    d.w_max = std::max(d.w_max, pts[i].z[0]);
    d.v_max = std::max(d.v_max, pts[i].z[1]);
    v.push_back(pts[i].z[1]);
  }
  d.spans_folds = d.w_min <= std::min(d.w_fold_plus, d.w_fold_minus) &&
                  d.w_max >= std::max(d.w_fold_plus, d.w_fold_minus);
  d.crosses_flip = d.v_max > vf;

  // Excursions onto the upper sheet that begin and end inside the tail.
  const auto W = static_cast<std::size_t>(th.banding_window);
  for (std::size_t j = 1; j < v.size(); ++j) {
    if (!(v[j] > vp && v[j - 1] <= vp)) continue;
    std::size_t e = j;
    while (e < v.size() && v[e] > vp) ++e;
    if (e == v.size()) break;
    ++d.segments;
    std::size_t f = j;
    while (f < e && v[f] <= vf) ++f;
    if (f < e && f + W <= e) {
      const std::vector<double> window(v.begin() + static_cast<long>(f),
                                       v.begin() + static_cast<long>(f + W));
      if (parity_roughness(window) <= th.banding_smoothness) ++d.banded_segments;
    }
    j = e;
  }

  const bool excitable = have_fp && fp.stability == FixedPointReport::Stability::Stable &&
                         d.tail_distance <= th.settle_distance;
  if (excitable) rep.label = RegimeLabel::Excitable;
  else if (!d.spans_folds) rep.label = RegimeLabel::Unclassified;
  else if (!d.crosses_flip) rep.label = RegimeLabel::Relaxation;
  else if (d.segments > 0 && d.banded_segments == d.segments) rep.label = RegimeLabel::NonChaoticBursting;
  else rep.label = RegimeLabel::ChaoticBursting;
  return rep;
}

// ---------------------------------------------------------------------------
// Euler study

std::vector<EulerStudyRow> run_euler_study(const LinearSlowOdeParams& p,
                                           const std::vector<double>& eps_list,
                                           const std::vector<double>& h_list, int threads) {
  const auto ode = linear_slow_ode(p);
  const int H = static_cast<int>(h_list.size());
  std::vector<EulerStudyRow> rows(eps_list.size() * h_list.size());
  parallel_for(static_cast<int>(rows.size()), threads, [&](int i) {
    const double eps = eps_list[static_cast<std::size_t>(i / H)];
    const double h = h_list[static_cast<std::size_t>(i % H)];
    const auto map = euler_discretize(ode, h);
    const Chart chart{{0}, {1, 2}};
    const auto critical = solve_critical_graph(map, chart, {UniformAxis{-1.0, 1.0, 201}},
                                               linear_slow_ode_manifold(p, -1.0, 0.0));
    const auto num = slow_manifold_numeric(map, critical, eps, Direction::Forward);
    double dist = 0.0;
    for (int j = 0; j < critical.node_count(); ++j) {
      const double x = critical.node(j)[0];
      const Vector ref = linear_slow_ode_manifold(p, x, eps);
      dist = std::max(dist, (num.graph.values().row(j).transpose() - ref).lpNorm<Eigen::Infinity>());
    }
    rows[static_cast<std::size_t>(i)] = EulerStudyRow{eps, h, dist, num.sweeps};
  });
  return rows;
}

std::vector<EulerClassificationRow> euler_h_sweep(const LinearSlowOdeParams& p,
                                                  const std::vector<double>& h_list) {
  const auto ode = linear_slow_ode(p);
  std::vector<EulerClassificationRow> out;
  for (double h : h_list) {
    const auto map = euler_discretize(ode, h);
    const Vector z = Chart{{0}, {1, 2}}.compose(scalar(0.0), linear_slow_ode_manifold(p, 0.0, 0.0));
    out.push_back({h, classify_point(map, z).label()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Command runners

namespace {

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const ComplexVector& mu) {
  json a = json::array();
  for (const auto& m : mu) a.push_back({{"re", m.real()}, {"im", m.imag()}});
  return a;
}

json parameter_table(const Config& cfg) {
  if (cfg.model == "chialvo" || cfg.model == "standard:chialvo") {
    const auto& p = cfg.chialvo;
    return {{"a", p.a}, {"b", p.b}, {"c", p.c}, {"k", p.k}};
  }
  if (cfg.model == "euler:linear") {
    const auto& p = cfg.linear;
    return {{"lambda1", p.lambda1}, {"lambda2", p.lambda2}, {"a1", p.a1}, {"a2", p.a2},
            {"beta1", p.beta1},     {"beta2", p.beta2},     {"h", cfg.h}};
  }
  return {{"drift", cfg.hopf.drift}, {"a_g", cfg.hopf.a_g}};
}

json header(const Config& cfg) {
  return {{"schema", kSchemaVersion}, {"model", cfg.model}, {"parameter_table", parameter_table(cfg)}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string csv_header(const Config& cfg, double eps) {
  return "# schema: 1, model: " + cfg.model + ", eps: " + format_number(eps) + "\n";
}

const std::vector<BranchSpec>& branches_of(const Config& cfg, const ModelSetup& m) {
  return cfg.branches.empty() ? m.branches : cfg.branches;
}

json hits_json(const std::vector<SingularityHit>& hits) {
  json a = json::array();
  for (const auto& h : hits)
    a.push_back({{"coord", h.coord},
                 {"kind", to_string(h.kind)},
                 {"mu_re", h.mu.real()},
                 {"mu_im", h.mu.imag()},
                 {"z", to_json(h.z)}});
  return a;
}

json branches_json(const std::vector<BranchSummary>& bs) {
  json a = json::array();
  for (const auto& b : bs)
    a.push_back({{"lo", b.lo},
                 {"hi", b.hi},
                 {"classification", b.classification.label()},
                 {"nu_A", b.bounds.has_stable ? json(b.bounds.nu_A) : json(nullptr)},
                 {"nu_R", b.bounds.has_unstable ? json(b.bounds.nu_R) : json(nullptr)}});
  return a;
}

json fixed_point_json(const FixedPointReport& fp) {
  return {{"z", to_json(fp.z)},
          {"stability", to_string(fp.stability)},
          {"residual", fp.residual},
          {"multipliers", to_json(fp.multipliers)}};
}

json fixed_points(const Config& cfg, const ModelSetup& m) {
  json a = json::array();
  if (cfg.model == "chialvo" || cfg.model == "standard:chialvo") {
    const auto& p = cfg.chialvo;
    for (double v0 : chialvo_equilibria(p)) {
      Vector guess(2);
      guess << chialvo_exact::phi0(p, v0), v0;
      const auto fp = find_fixed_point(m.map, guess, cfg.eps);
      auto j = fixed_point_json(fp);
      j["v_root"] = v0;
      j["branch"] = chialvo_branch(p, fp.z[1]);
      a.push_back(j);
    }
  } else if (cfg.model == "poincare:hopf") {
    const auto ode = hopf_oscillator(cfg.hopf);
    const auto sec = hopf_section();
    const auto [lo, hi] = cfg.alpha_range;
    for (const auto& root : limit_cycle_condition(ode, sec, m.map, lo, hi, 9, scalar(std::sqrt(lo)))) {
      Vector guess(2);
      guess << std::sqrt(root.alpha), root.alpha;
      const auto fp = find_fixed_point(m.map, guess, cfg.eps, kDefaultHyperbolicityTol, 1e-9);
      auto j = fixed_point_json(fp);
      j["alpha_root"] = root.alpha;
      a.push_back(j);
    }
  }
  return a;
}

json classification_rows(const std::vector<EulerClassificationRow>& rows) {
  json a = json::array();
  for (const auto& r : rows) a.push_back({{"h", r.h}, {"classification", r.classification}});
  return a;
}

Vector default_start(const Config& cfg, const ModelSetup& m) {
  if (!cfg.z0.empty()) {
    if (static_cast<int>(cfg.z0.size()) != m.map.dim())
      throw ConfigError("simulate.z0 must have " + std::to_string(m.map.dim()) + " entries");
    return Eigen::Map<const Vector>(cfg.z0.data(), static_cast<Eigen::Index>(cfg.z0.size()));
  }
  Vector z(m.map.dim());
  if (cfg.model == "euler:linear") z << -0.5, 0.3, 0.1;
  else if (cfg.model == "poincare:hopf") z << 1.0, 0.3;
  else z << 0.25, 2.0;
  return z;
}

double max_finite(const Vector& r, const std::vector<bool>& skip) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < r.size(); ++j)
    if (std::isfinite(r[j]) && !skip[static_cast<std::size_t>(j)]) worst = std::max(worst, r[j]);
  return worst;
}

}  // namespace

FileSet run_analyze(const Config& cfg, const RunOptions& o) {
  const auto m = build_model(cfg);
  auto report = header(cfg);
  report["eps"] = cfg.eps;
  report["scan"] = {{"lo", m.scan.lo}, {"hi", m.scan.hi}, {"nodes", m.scan.count}};
  const auto hits = find_singularities(m);
  report["singularities"] = hits_json(hits);
  report["branches"] = branches_json(summarize_branches(m, hits));

  const auto& bs = branches_of(cfg, m);
  std::vector<json> manifolds(bs.size());
  parallel_for(static_cast<int>(bs.size()), o.threads, [&](int i) {
    const auto t = compute_slow_manifold(m, bs[static_cast<std::size_t>(i)], cfg.eps);
    const double gap = (t.numeric.graph.values() - t.first_order.values()).lpNorm<Eigen::Infinity>();
    int extrapolated = 0;
    for (bool e : t.numeric.extrapolated) extrapolated += e ? 1 : 0;
    manifolds[static_cast<std::size_t>(i)] = {
        {"lo", t.branch.lo},
        {"hi", t.branch.hi},
        {"nodes", t.branch.nodes},
        {"direction", t.branch.direction == Direction::Forward ? "forward" : "backward"},
        {"sweeps", t.numeric.sweeps},
        {"last_update", t.numeric.last_update},
        {"max_gap_first_order", gap},
        {"max_residual", max_finite(t.residual, t.numeric.extrapolated)},
        {"extrapolated_nodes", extrapolated}};
  });
  report["slow_manifolds"] = manifolds;
  report["fixed_points"] = fixed_points(cfg, m);
  if (cfg.model == "euler:linear" && !cfg.h_sweep.empty())
    report["h_sweep"] = classification_rows(euler_h_sweep(cfg.linear, cfg.h_sweep));
  return {{"analyze.json", dump(report)}};
}

FileSet run_simulate(const Config& cfg, const RunOptions&) {
  const auto m = build_model(cfg);
  auto traj = iterate(m.map, default_start(cfg, m), cfg.eps, cfg.steps);
  traj.model = cfg.model;
  const auto t = compute_slow_manifold(m, branches_of(cfg, m).front(), cfg.eps);
  for (auto& pt : traj.points)
    if (t.numeric.graph.inside(m.chart.x_of(pt.z))) pt.dist_to_slow = graph_distance(t.numeric.graph, pt.z);
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  return {{"trajectory.csv", os.str()}};
}

FileSet run_slow_manifold(const Config& cfg, const RunOptions& o) {
  const auto m = build_model(cfg);
  const auto& bs = branches_of(cfg, m);
  std::vector<std::string> csv(bs.size());
  parallel_for(static_cast<int>(bs.size()), o.threads, [&](int i) {
    csv[static_cast<std::size_t>(i)] =
        slow_manifold_csv(compute_slow_manifold(m, bs[static_cast<std::size_t>(i)], cfg.eps), cfg.model);
  });
  FileSet files;
  for (std::size_t i = 0; i < csv.size(); ++i)
    files["slow_manifold_b" + std::to_string(i) + ".csv"] = csv[i];
  return files;
}

FileSet run_singularities(const Config& cfg, const RunOptions&) {
  const auto m = build_model(cfg);
  const auto hits = find_singularities(m);
  auto report = header(cfg);
  report["hits"] = hits_json(hits);
  report["branches"] = branches_json(summarize_branches(m, hits));
  return {{"singularities.json", dump(report)}};
}

FileSet run_reduced(const Config& cfg, const RunOptions& o) {
  const auto m = build_model(cfg);
  const auto& bs = branches_of(cfg, m);
  const auto& b0 = bs.front();
  const double start = std::isfinite(cfg.reduced_start) ? cfg.reduced_start : 0.5 * (b0.lo + b0.hi);
  const Vector xs = scalar(start);
  const Vector z_on_s = m.chart.compose(xs, solve_on_critical(m.map, m.chart, xs, m.seed(start)));

  // Reduced orbit on S next to the full orbit started on the slow manifold.
  const auto orbit = reduced_orbit(m.map, m.chart, z_on_s, cfg.eps, cfg.reduced_steps);
  const auto t0 = compute_slow_manifold(m, b0, cfg.eps);
  const auto full = iterate(m.map, t0.numeric.graph.point(xs), cfg.eps, cfg.reduced_steps);
  const int n = m.map.dim();
  std::ostringstream os;
  os << csv_header(cfg, cfg.eps) << "step";
  for (int i = 0; i < n; ++i) os << ",reduced_z_" << i;
  for (int i = 0; i < n; ++i) os << ",full_z_" << i;
  os << '\n';
  for (std::size_t s = 0; s < orbit.size(); ++s) {
    os << s;
    for (int i = 0; i < n; ++i) os << ',' << format_number(orbit[s][i]);
    const bool have = s < full.size() && !(full.points[s].flags & point_flags::kDomainExit);
    for (int i = 0; i < n; ++i) os << ',' << format_number(have ? full[s][i] : kNaN);
    os << '\n';
  }

  Vector composed = z_on_s;
  for (long j = 0; j < cfg.m; ++j) composed = reduced_step_on(m.map, m.chart, composed, cfg.eps);
  const Vector direct = mth_iterate_reduced(m.map, z_on_s, cfg.eps, cfg.m);

  auto report = header(cfg);
  report["eps"] = cfg.eps;
  report["m_composition"] = {{"start", to_json(z_on_s)},
                             {"m", cfg.m},
                             {"composed", to_json(composed)},
                             {"mth_iterate", to_json(direct)},
                             {"gap", (composed - direct).lpNorm<Eigen::Infinity>()}};

  // Fiber probes over the middle half of each branch.
  std::vector<json> probes(bs.size());
  parallel_for(static_cast<int>(bs.size()), o.threads, [&](int i) {
    const auto& b = bs[static_cast<std::size_t>(i)];
    const auto t = i == 0 ? t0 : compute_slow_manifold(m, b, cfg.eps);
    std::vector<Vector> nodes;
    for (int j = 0; j < t.critical.node_count(); ++j) nodes.push_back(t.critical.point_at_node(j));
    const auto bounds = spectral_bounds(m.map, nodes);
    const bool inverse = b.direction == Direction::Backward;
    const double bound = inverse ? 1.0 / bounds.nu_R + 0.05 : bounds.nu_A + 0.05;
    json list = json::array();
    for (int j = 0; j < cfg.base_grid; ++j) {
      const double L = b.hi - b.lo;
      const double s = b.lo + 0.25 * L + (cfg.base_grid > 1 ? 0.5 * L * j / (cfg.base_grid - 1) : 0.25 * L);
      const Vector base = t.numeric.graph.point(scalar(s));
      const Vector offset = m.chart.compose(Vector::Zero(1), Vector::Constant(m.map.fast_dim(), 1e-4));
      auto r = fiber_rate_probe(m.map, t.numeric.graph, base, offset, 20, inverse, cfg.eps);
      r.bound = bound;
      double worst = 0.0;
      for (std::size_t q = static_cast<std::size_t>(r.transient); q < r.ratios.size(); ++q)
        worst = std::max(worst, r.ratios[q]);
      json dj = json::array(), rj = json::array();
      for (double d : r.distances) dj.push_back(d);
      for (double q : r.ratios) rj.push_back(q);
      list.push_back({{"base", to_json(r.base)},
                      {"offset", to_json(r.offset)},
                      {"inverse", r.inverse},
                      {"transient", r.transient},
                      {"chi", r.chi},
                      {"max_ratio", worst},
                      {"bound", r.bound},
                      {"within_bound", worst <= r.bound},
                      {"distances", dj},
                      {"ratios", rj}});
    }
    probes[static_cast<std::size_t>(i)] = {{"lo", b.lo}, {"hi", b.hi}, {"reports", list}};
  });
  report["fiber_rates"] = probes;
  return {{"reduced.csv", os.str()}, {"reduced.json", dump(report)}};
}

FileSet run_regimes_command(const Config& cfg, const RunOptions& o) {
  std::vector<RegimeCase> cases{RegimeCase::I, RegimeCase::II, RegimeCase::III, RegimeCase::IV};
  if (o.regime_case) cases = {*o.regime_case};
  std::vector<RegimeReport> reports(cases.size());
  parallel_for(static_cast<int>(cases.size()), o.threads, [&](int i) {
    reports[static_cast<std::size_t>(i)] =
        run_regimes(cfg.eps, cases[static_cast<std::size_t>(i)], cfg.regime_steps);
  });
  FileSet files;
  json list = json::array();
  for (auto& r : reports) {
    const auto& d = r.diagnostics;
    list.push_back({{"case", to_string(r.regime_case)},
                    {"label", to_string(r.label)},
                    {"params", {{"a", r.params.a}, {"b", r.params.b}, {"c", r.params.c}, {"k", r.params.k}}},
                    {"eps", r.eps},
                    {"z0", to_json(r.z0)},
                    {"iterations", r.trajectory.size() - 1},
                    {"diagnostics",
                     {{"fixed_point_v", d.fixed_point_v},
                      {"fixed_point_branch", d.fixed_point_branch},
                      {"fixed_point_stability", d.fixed_point_stability},
                      {"tail_distance", d.tail_distance},
                      {"w_min", d.w_min},
                      {"w_max", d.w_max},
                      {"w_fold_plus", d.w_fold_plus},
                      {"w_fold_minus", d.w_fold_minus},
                      {"w_flip", d.w_flip},
                      {"spans_folds", d.spans_folds},
                      {"v_max", d.v_max},
                      {"crosses_flip", d.crosses_flip},
                      {"segments", d.segments},
                      {"banded_segments", d.banded_segments},
                      {"domain_exit", d.domain_exit}}}});
    r.trajectory.model = std::string("chialvo/case_") + to_string(r.regime_case);
    std::ostringstream os;
    write_trajectory_csv(os, r.trajectory);
    files[std::string("regime_") + to_string(r.regime_case) + ".csv"] = os.str();
  }
  const RegimeThresholds th;
  json out = {{"schema", kSchemaVersion},
              {"thresholds",
               {{"tail_fraction", th.tail_fraction},
                {"settle_fraction", th.settle_fraction},
                {"settle_distance", th.settle_distance},
                {"banding_window", th.banding_window},
                {"banding_smoothness", th.banding_smoothness}}},
              {"reports", list}};
  files["regimes.json"] = dump(out);
  return files;
}

FileSet run_euler_study_command(const Config& cfg, const RunOptions& o) {
  const auto rows = run_euler_study(cfg.linear, cfg.euler_eps, cfg.euler_h, o.threads);
  std::ostringstream os;
  os << "# schema: 1, model: euler:linear\neps,h,distance,sweeps\n";
  for (const auto& r : rows)
    os << format_number(r.eps) << ',' << format_number(r.h) << ',' << format_number(r.distance) << ','
       << r.sweeps << '\n';
  return {{"euler_study.csv", os.str()}};
}

FileSet run_poincare(const Config& cfg_in, const RunOptions&) {
  Config cfg = cfg_in;
  cfg.model = "poincare:hopf";
  const auto m = build_model(cfg);
  const auto ode = hopf_oscillator(cfg.hopf);
  const auto sec = hopf_section();
  const auto [lo, hi] = cfg.alpha_range;
  const int samples = 9;

  json curve = json::array(), mults = json::array(), avg = json::array();
  std::ostringstream cycles;
  cycles << csv_header(cfg, 0.0) << "alpha,t,x,y\n";
  Vector seed = scalar(std::sqrt(lo));
  for (int i = 0; i < samples; ++i) {
    const double a = lo + (hi - lo) * i / (samples - 1);
    const Vector p = poincare_critical_point(m.map, a, seed);
    seed = m.chart.y_of(p);
    curve.push_back({{"alpha", a}, {"x", to_json(seed)}});
    const auto mu = nontrivial_multipliers(m.map, p);
    mults.push_back({{"alpha", a}, {"multipliers", to_json(mu)}});
    avg.push_back({{"alpha", a}, {"value", averaged_g(ode, sec, m.map, a, seed)}});
    const auto path = integrate(ode, lift_to_section(sec, p), 0.0, ode.period_hint);
    for (std::size_t s = 0; s < path.t.size(); ++s)
      cycles << format_number(a) << ',' << format_number(path.t[s]) << ',' << format_number(path.states[s][0])
             << ',' << format_number(path.states[s][1]) << '\n';
  }
  json roots = json::array();
  for (const auto& r : limit_cycle_condition(ode, sec, m.map, lo, hi, samples, scalar(std::sqrt(lo)))) {
    Vector guess(2);
    guess << std::sqrt(r.alpha), r.alpha;
    const auto fp = find_fixed_point(m.map, guess, cfg.eps, kDefaultHyperbolicityTol, 1e-9);
    roots.push_back({{"alpha", r.alpha},
                     {"derivative", r.derivative},
                     {"hyperbolic", r.hyperbolic},
                     {"fixed_point", fixed_point_json(fp)}});
  }
  auto report = header(cfg);
  report["eps"] = cfg.eps;
  report["alpha_range"] = {lo, hi};
  report["critical_curve"] = curve;
  report["multipliers"] = mults;
  report["averaged_g_samples"] = avg;
  report["roots"] = roots;
  return {{"poincare.json", dump(report)}, {"cycles.csv", cycles.str()}};
}

FileSet run_oracle(const Config& cfg, const RunOptions& o) {
  namespace cx = chialvo_exact;
  auto report = json{{"schema", kSchemaVersion}};

  // Chialvo multipliers and singularities against closed forms.
  json chialvo_rows = json::array();
  for (double k : {0.0, 0.01, 0.035, 0.05}) {
    Config c = cfg;
    c.model = "chialvo";
    c.chialvo = ChialvoParams{};
    c.chialvo.k = k;
    c.scan.reset();
    const auto m = build_model(c);
    double mult_err = 0.0;
    const UniformAxis grid{k + 0.01, 5.0, 1000};
    for (int j = 0; j < grid.count; ++j) {
      const double v = grid.node(j);
      Vector z(2);
      z << cx::phi0(c.chialvo, v), v;
      const auto mu = nontrivial_multipliers(m.map, z);
      mult_err = std::max(mult_err, std::abs(mu[0] - Complex(cx::multiplier(c.chialvo, v), 0.0)));
    }
    json expected = json::array();
    if (k == 0.0) {
      expected.push_back({{"kind", "Fold"}, {"coord", 1.0}});
    } else {
      expected.push_back({{"kind", "Fold"}, {"coord", cx::v_minus(c.chialvo)}});
      expected.push_back({{"kind", "Fold"}, {"coord", cx::v_plus(c.chialvo)}});
    }
    expected.push_back({{"kind", "Flip"}, {"coord", cx::v_flip(c.chialvo)}});
    chialvo_rows.push_back({{"k", k},
                            {"max_multiplier_error", mult_err},
                            {"hits", hits_json(find_singularities(m))},
                            {"expected", expected}});
  }
  report["chialvo"] = chialvo_rows;

  // Eigenvalue reduction and projection identities at random points of S.
  std::mt19937_64 rng(o.seed);
  json models = json::array();
  for (const auto& name : model_names()) {
    Config c = cfg;
    c.model = name;
    c.scan.reset();
    c.branches.clear();
    const auto m = build_model(c);
    double eig_err = 0.0, idem = 0.0, kills_n = 0.0, fixes_tangent = 0.0;
    for (const auto& z : sample_on_critical(m, rng, 50)) {
      // Full Jacobian at eps = 0 against {1}^k and eig(I + Df N).
      Eigen::EigenSolver<Matrix> es(m.map.jacobian(z, 0.0));
      ComplexVector full(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
      ComplexVector expect = nontrivial_multipliers(m.map, z);
      for (int i = 0; i < m.map.slow_dim(); ++i) expect.emplace_back(1.0, 0.0);
      for (const auto& e : expect) {
        auto it = std::min_element(full.begin(), full.end(), [&](const Complex& a, const Complex& b) {
          return std::abs(a - e) < std::abs(b - e);
        });
        eig_err = std::max(eig_err, std::abs(*it - e));
        full.erase(it);
      }
      const Matrix P = projection(m.map, z);
      const Matrix K = Eigen::FullPivLU<Matrix>(m.map.Df(z)).kernel();
      idem = std::max(idem, (P * P - P).lpNorm<Eigen::Infinity>());
      kills_n = std::max(kills_n, (P * m.map.N(z)).lpNorm<Eigen::Infinity>());
      fixes_tangent = std::max(fixes_tangent, (P * K - K).lpNorm<Eigen::Infinity>());
    }
    models.push_back({{"model", name},
                      {"samples", 50},
                      {"max_eigenvalue_error", eig_err},
                      {"max_idempotence_error", idem},
                      {"max_projection_of_N", kills_n},
                      {"max_tangent_error", fixes_tangent}});
  }
  report["identities"] = models;

  // Euler multipliers and the hyperbolicity boundary.
  const auto ode = linear_slow_ode(cfg.linear);
  double euler_err = 0.0;
  for (double h : {0.05, 0.1, 0.2, 0.5}) {
    const auto map = euler_discretize(ode, h);
    const Vector z = Chart{{0}, {1, 2}}.compose(scalar(0.3), linear_slow_ode_manifold(cfg.linear, 0.3, 0.0));
    auto mu = nontrivial_multipliers(map, z);
    ComplexVector expect{1.0 + h * cfg.linear.lambda1, 1.0 + h * cfg.linear.lambda2};
    sort_multipliers(expect);
    for (std::size_t i = 0; i < mu.size(); ++i) euler_err = std::max(euler_err, std::abs(mu[i] - expect[i]));
  }
  json bounds = json::array();
  for (double lam : {cfg.linear.lambda1, cfg.linear.lambda2}) {
    const auto hc = euler_hyperbolicity_boundary(Complex(lam, 0.0));
    bounds.push_back({{"lambda", lam}, {"h_crit", hc ? json(*hc) : json(nullptr)}});
  }
  report["euler"] = {{"max_multiplier_error", euler_err}, {"boundaries", bounds}};

  // Slow-manifold order on the attracting upper branch.
  Config c = cfg;
  c.model = "chialvo";
  c.chialvo = ChialvoParams{};
  const auto m = build_model(c);
  const BranchSpec b{1.1, 2.9, 400, Direction::Forward};
  const std::vector<double> eps_list{1e-2, 5e-3, 2.5e-3};
  std::vector<double> gaps(eps_list.size());
  parallel_for(static_cast<int>(eps_list.size()), o.threads, [&](int i) {
    const auto t = compute_slow_manifold(m, b, eps_list[static_cast<std::size_t>(i)]);
    gaps[static_cast<std::size_t>(i)] =
        (t.numeric.graph.values() - t.first_order.values()).lpNorm<Eigen::Infinity>();
  });
  std::ostringstream conv;
  conv << "# schema: 1, model: chialvo, branch: [1.1, 2.9]\neps,gap_first_order\n";
  for (std::size_t i = 0; i < gaps.size(); ++i)
    conv << format_number(eps_list[i]) << ',' << format_number(gaps[i]) << '\n';
  return {{"oracle.json", dump(report)}, {"convergence.csv", conv.str()}};
}

void write_files(const std::string& dir, const FileSet& files) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::pair<fs::path, fs::path>> staged;
  for (const auto& [name, content] : files) {
    const fs::path target = fs::path(dir) / name;
    const fs::path tmp = fs::path(dir) / ("." + name + ".tmp");
    std::ofstream os(tmp, std::ios::binary);
    os << content;
    if (!os) {
      for (const auto& s : staged) fs::remove(s.first);
      fs::remove(tmp);
      throw std::runtime_error("cannot write " + tmp.string());
    }
    staged.emplace_back(tmp, target);
  }
  for (const auto& [tmp, target] : staged) fs::rename(tmp, target);
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  threads = std::max(1, std::min(threads, count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i; (i = next++) < count;) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace fastslow::app
