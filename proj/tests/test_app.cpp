#include "fastslow/app.hpp"

#include <doctest.h>

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>

using namespace fastslow;
using namespace fastslow::app;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_config(R"({
    "schema": 1,
    "model": "euler:linear",
    "params": {"lambda1": -0.5, "h": 0.25},
    "eps": 0.002,
    "branches": [{"lo": -0.5, "hi": 0.5, "nodes": 51, "direction": "forward"}],
    "h_sweep": [0.5, 1.5],
    "reduced": {"m": 4, "base_grid": 3}
  })");
  CHECK(cfg.model == "euler:linear");
  CHECK(cfg.linear.lambda1 == -0.5);
  CHECK(cfg.h == 0.25);
  CHECK(cfg.eps == 0.002);
  REQUIRE(cfg.branches.size() == 1);
  CHECK(cfg.branches[0].nodes == 51);
  CHECK(cfg.h_sweep.size() == 2);
  CHECK(cfg.m == 4);
  CHECK(cfg.base_grid == 3);
  CHECK(parse_config("{}").model == "chialvo");
}

TEST_CASE("config errors name the line") {
  CHECK(config_error("{\n\"model\": \"chialvo\",\n\"epsilon\": 1\n}").find("line 3") != std::string::npos);
  CHECK(config_error("{\n\"eps\": 1e-3\n\"model\": \"chialvo\"\n}").find("line 3") != std::string::npos);
  CHECK(config_error("{\"model\": \"rulkov\"}").find("unknown model") != std::string::npos);
  CHECK(config_error("{\"schema\": 2}").find("schema") != std::string::npos);
  CHECK(config_error("{\n\"params\": {\n\"k\": 0.3}}").find("line 2") != std::string::npos);
  CHECK(config_error("{\"eps\": \"small\"}").find("expected a number") != std::string::npos);
  CHECK(config_error("{\"branches\": [{\"lo\": 2, \"hi\": 1}]}").find("lo < hi") != std::string::npos);
  CHECK(config_error("{\"model\": \"euler:linear\", \"params\": {\"k\": 1}}").find("unknown parameter") !=
        std::string::npos);
}

TEST_CASE("every registered model builds and has hyperbolic samples") {
  std::mt19937_64 rng(3);
  for (const auto& name : model_names()) {
    Config cfg;
    cfg.model = name;
    const auto m = build_model(cfg);
    CHECK(m.map.dim() == m.chart.dim());
    CHECK_FALSE(m.branches.empty());
    for (const auto& z : sample_on_critical(m, rng, 5)) {
      CHECK(std::abs(m.map.f(z)[0]) < 1e-10);
      CHECK(classify_point(m.map, z).hyperbolic());
    }
  }
}

TEST_CASE("branch summary of the default Chialvo map") {
  const auto m = build_model(Config{});
  const auto hits = find_singularities(m);
  REQUIRE(hits.size() == 3);
  const auto branches = summarize_branches(m, hits);
  REQUIRE(branches.size() == 4);
  CHECK(branches[0].classification.label() == "Attracting");
  CHECK(branches[1].classification.label() == "Repelling");
  CHECK(branches[2].classification.label() == "Attracting");
  CHECK(branches[3].classification.label() == "Repelling");
  CHECK(chialvo_branch(ChialvoParams{}, 0.05) == "S-a");
  CHECK(chialvo_branch(ChialvoParams{}, 0.5) == "S-r");
  CHECK(chialvo_branch(ChialvoParams{}, 2.0) == "S+a");
  CHECK(chialvo_branch(ChialvoParams{}, 3.5) == "S+r");
}

TEST_CASE("regime labels") {
  const RegimeCase cases[4] = {RegimeCase::I, RegimeCase::II, RegimeCase::III, RegimeCase::IV};
  const RegimeLabel want[4] = {RegimeLabel::Excitable, RegimeLabel::Relaxation, RegimeLabel::NonChaoticBursting,
                               RegimeLabel::ChaoticBursting};
  for (int i = 0; i < 4; ++i) {
    const auto r = run_regimes(1e-3, cases[i]);
    CHECK(r.label == want[i]);
    CHECK_FALSE(r.diagnostics.domain_exit);
    CHECK(r.trajectory.size() == 100001);
  }
  CHECK(parse_regime_case("III") == RegimeCase::III);
  CHECK_THROWS_AS(parse_regime_case("V"), ConfigError);
  CHECK_THROWS_AS(run_regimes(0.05, RegimeCase::I, 10), NumericalError);
}

TEST_CASE("Euler h sweep flips at the hyperbolicity boundaries") {
  const auto rows = euler_h_sweep(LinearSlowOdeParams{}, {0.5, 1.0, 1.5, 2.0, 2.5});
  CHECK(rows[0].classification == "Attracting");
  CHECK(rows[1].classification == "NonHyperbolic(Flip)");
  CHECK(rows[2].classification == "Saddle(1,1)");
  CHECK(rows[3].classification == "NonHyperbolic(Flip)");
  CHECK(rows[4].classification == "Repelling");
}

TEST_CASE("outputs are deterministic and thread-count independent") {
  Config cfg;
  cfg.model = "euler:linear";
  RunOptions one, four;
  four.threads = 4;
  CHECK(run_euler_study_command(cfg, one) == run_euler_study_command(cfg, four));
  const Config chialvo_cfg;
  CHECK(run_singularities(chialvo_cfg) == run_singularities(chialvo_cfg));
  const auto files = run_singularities(chialvo_cfg);
  const auto report = nlohmann::json::parse(files.at("singularities.json"));
  CHECK(report["schema"] == 1);
  CHECK(report["hits"].size() == 3);
  CHECK(report["parameter_table"]["k"] == 0.035);
}

TEST_CASE("slow manifold CSV layout") {
  Config cfg;
  cfg.model = "euler:linear";
  const auto m = build_model(cfg);
  const auto t = compute_slow_manifold(m, BranchSpec{-1, 1, 21, Direction::Forward}, 1e-3);
  const auto csv = slow_manifold_csv(t, cfg.model);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# schema: 1", 0) == 0);
  std::getline(in, line);
  CHECK(line ==
        "x_0,phi0_0,phi0_1,phi_eps_firstorder_0,phi_eps_firstorder_1,phi_eps_numeric_0,phi_eps_numeric_1,residual");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 21);
}

TEST_CASE("parallel_for covers every index and rethrows the first failure") {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 4, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
  for (const auto& h : hits) CHECK(h.load() == 1);
  try {
    parallel_for(10, 3, [](int i) {
      if (i == 3 || i == 7) throw std::runtime_error("index " + std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "index 3");
  }
}

TEST_CASE("write_files leaves only the final files") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "fastslow_write_files_test";
  fs::remove_all(dir);
  write_files(dir.string(), {{"a.csv", "1\n"}, {"b.json", "{}\n"}});
  int count = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++count;
  CHECK(count == 2);
  std::ifstream in(dir / "a.csv");
  std::string s;
  std::getline(in, s);
  CHECK(s == "1");
  fs::remove_all(dir);
}
