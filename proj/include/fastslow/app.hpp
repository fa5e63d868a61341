#pragma once

#include "fastslow/graph.hpp"
#include "fastslow/manifold.hpp"
#include "fastslow/map.hpp"
#include "fastslow/models.hpp"
#include "fastslow/poincare.hpp"
#include "fastslow/reduced.hpp"
#include "fastslow/spectral.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <utility>
#include <string>
#include <vector>

namespace fastslow::app {

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Configuration

/// Interval of the critical manifold, in chart x, on which slow manifolds are built.
struct BranchSpec {
  double lo = 0.0;
  double hi = 1.0;
  int nodes = 400;
  Direction direction = Direction::Forward;
};

struct Config {
  std::string model = "chialvo";  // chialvo | standard:chialvo | euler:linear | poincare:hopf
  ChialvoParams chialvo;
  LinearSlowOdeParams linear;
  double h = 0.1;  // Euler step for euler:linear
  HopfParams hopf;

  double eps = 1e-3;
  std::optional<UniformAxis> scan;  // model default when absent
  std::vector<BranchSpec> branches;  // model default when empty
  std::vector<double> h_sweep;       // euler:linear only

  std::vector<double> z0;  // simulate start; model default when empty
  long steps = 1000;

  double reduced_start = std::numeric_limits<double>::quiet_NaN();  // chart x
  long reduced_steps = 100;
  long m = 10;
  int base_grid = 10;  // fiber probes per branch

  long regime_steps = 100000;
  std::pair<double, double> alpha_range{0.3, 0.7};

  std::vector<double> euler_eps{1e-2, 5e-3, 2.5e-3};
  std::vector<double> euler_h{0.2, 0.1, 0.05};
};

/// Parses a JSON configuration. Unknown keys and type mismatches throw
/// ConfigError naming the line.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

// ---------------------------------------------------------------------------
// Model registry

struct ModelSetup {
  FastSlowMap map;
  Chart chart;
  UniformAxis scan;
  /// Seed for the fast coordinates at chart x = s (close to S).
  std::function<Vector(double s)> seed;
  std::vector<BranchSpec> branches;
  /// Chart x values of hyperbolic points of S suitable for random sampling.
  std::vector<std::pair<double, double>> sample_ranges;
};

ModelSetup build_model(const Config& cfg);
std::vector<std::string> model_names();

/// Uniform random points on S within the model's sample ranges.
std::vector<Vector> sample_on_critical(const ModelSetup& m, std::mt19937_64& rng, int count);

// ---------------------------------------------------------------------------
// Analyses

struct BranchSummary {
  double lo = 0.0;
  double hi = 0.0;
  Classification classification;
  SpectralBounds bounds;
};

/// Splits the scan at singularities and classifies each piece.
std::vector<BranchSummary> summarize_branches(const ModelSetup& m,
                                              const std::vector<SingularityHit>& hits);

std::vector<SingularityHit> find_singularities(const ModelSetup& m);

struct SlowManifoldTable {
  BranchSpec branch;
  GraphManifold critical;
  GraphManifold first_order;
  SlowManifoldResult numeric;
  Vector residual;
};

SlowManifoldTable compute_slow_manifold(const ModelSetup& m, const BranchSpec& b, double eps,
                                        const GraphTransformOptions& opts = {});

/// CSV: x_*, phi0_*, phi_eps_firstorder_*, phi_eps_numeric_*, residual.
std::string slow_manifold_csv(const SlowManifoldTable& t, const std::string& model);

// ---------------------------------------------------------------------------
// Chialvo regimes

enum class RegimeCase { I, II, III, IV };
enum class RegimeLabel { Excitable, Relaxation, NonChaoticBursting, ChaoticBursting, Unclassified };

const char* to_string(RegimeCase c);
const char* to_string(RegimeLabel l);
RegimeCase parse_regime_case(const std::string& s);

/// (c, k) of a case; a = 1, b = 5.
ChialvoParams regime_params(RegimeCase c);

/// Branch of S containing v: "S-a" (v < v-), "S-r", "S+a" (v+ < v < v_flip), "S+r".
std::string chialvo_branch(const ChialvoParams& p, double v);

/// Frozen thresholds of the regime predicates.
struct RegimeThresholds {
  double tail_fraction = 0.5;       // iterates examined: the last half
  double settle_fraction = 0.1;     // excitable test: the last tenth
  double settle_distance = 1e-2;    // max distance to the stable fixed point
  int banding_window = 50;          // iterates after the first crossing of v_flip
  double banding_smoothness = 0.25; // max |second difference| of each parity subsequence
};

struct RegimeDiagnostics {
  double fixed_point_v = 0.0;
  std::string fixed_point_branch;
  std::string fixed_point_stability;
  double tail_distance = 0.0;  // max distance of the settle window to the fixed point
  double w_min = 0.0, w_max = 0.0;
  double w_fold_plus = 0.0, w_fold_minus = 0.0, w_flip = 0.0;
  bool spans_folds = false;
  double v_max = 0.0;
  bool crosses_flip = false;
  int segments = 0;           // complete excursions onto the upper sheet in the tail
  int banded_segments = 0;    // those passing the period-2 test
  bool domain_exit = false;
};

struct RegimeReport {
  RegimeCase regime_case = RegimeCase::I;
  RegimeLabel label = RegimeLabel::Unclassified;
  ChialvoParams params;
  double eps = 0.0;
  Vector z0;
  RegimeDiagnostics diagnostics;
  Trajectory trajectory;
};

/// Iterates the case's map from z0 and applies the diagnostic predicates.
RegimeReport run_regimes(double eps, RegimeCase c, long steps = 100000,
                         const RegimeThresholds& th = {});
/// The same with explicit parameters.
RegimeReport run_regimes(double eps, const ChialvoParams& p, RegimeCase c, const Vector& z0,
                         long steps, const RegimeThresholds& th = {});

// ---------------------------------------------------------------------------
// Euler study on the linear test ODE

struct EulerStudyRow {
  double eps = 0.0;
  double h = 0.0;
  double distance = 0.0;  // sup over nodes of |S_{eps,h} - first-order ODE manifold|
  int sweeps = 0;
};

std::vector<EulerStudyRow> run_euler_study(const LinearSlowOdeParams& p,
                                           const std::vector<double>& eps_list,
                                           const std::vector<double>& h_list, int threads = 1);

struct EulerClassificationRow {
  double h = 0.0;
  std::string classification;
};

/// Classification of the Euler map's critical manifold at x = 0 for each h.
std::vector<EulerClassificationRow> euler_h_sweep(const LinearSlowOdeParams& p,
                                                  const std::vector<double>& h_list);

// ---------------------------------------------------------------------------
// Command runners. Each returns the files to write, keyed by name relative
// to the output directory; nothing is written on failure.

using FileSet = std::map<std::string, std::string>;

struct RunOptions {
  std::uint64_t seed = 1;
  int threads = 1;
  std::optional<RegimeCase> regime_case;  // regimes: all four when absent
};

FileSet run_analyze(const Config& cfg, const RunOptions& o = {});
FileSet run_simulate(const Config& cfg, const RunOptions& o = {});
FileSet run_slow_manifold(const Config& cfg, const RunOptions& o = {});
FileSet run_singularities(const Config& cfg, const RunOptions& o = {});
FileSet run_reduced(const Config& cfg, const RunOptions& o = {});
FileSet run_regimes_command(const Config& cfg, const RunOptions& o = {});
FileSet run_euler_study_command(const Config& cfg, const RunOptions& o = {});
FileSet run_poincare(const Config& cfg, const RunOptions& o = {});
FileSet run_oracle(const Config& cfg, const RunOptions& o = {});

/// Writes every file under dir (created when missing).
void write_files(const std::string& dir, const FileSet& files);

/// Runs fn(i) for i in [0, count) on up to `threads` threads; rethrows the
/// first exception by index.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace fastslow::app
