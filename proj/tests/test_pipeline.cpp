#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "liftreach/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

using namespace liftreach;
namespace fs = std::filesystem;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

ValueGrid constant_grid(double value, double lo = -1, double hi = 1, std::size_t n = 5) {
  ValueGrid grid;
  grid.axes = {linspace(lo, hi, n), linspace(lo, hi, n)};
  grid.values.assign(n * n, value);
  return grid;
}

// small, fast configuration used by the pipeline tests
Scenario mini_scenario() {
  Scenario s = bundled_scenario("slow_manifold_reach");
  s.name = "mini";
  s.horizons = {0.25};
  s.grid.n = {12, 12};
  s.errbound_grid = 9;
  s.tube.h = 0.02;
  s.hopf.restarts = 3;
  s.hopf.max_iters = 200;
  s.hopf_nodes = 30;
  s.rollout.enabled = true;
  s.rollout.n_points = 3;
  s.rollout.policies = {"zero", "extremal_costate"};
  return s;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("compare_sets counts violations per sense") {
  ValueGrid dp = constant_grid(0.0);
  dp.values[0] = 1.0;   // firmly outside
  dp.values[1] = -1.0;  // firmly inside

  ValueGrid hopf = constant_grid(1.0);  // certifies nothing
  const ContainmentCell reach_none = compare_sets(hopf, dp, GameSense::reach, 0.05);
  CHECK(reach_none.certified == 0);
  CHECK(reach_none.violations == 0);

  hopf.values.assign(hopf.values.size(), -1.0);  // certifies everything
  const ContainmentCell reach_all = compare_sets(hopf, dp, GameSense::reach, 0.05);
  CHECK(reach_all.certified == 25);
  CHECK(reach_all.violations == 1);  // the dp > tol point

  const ContainmentCell avoid_all = compare_sets(hopf, dp, GameSense::avoid, 0.05);
  CHECK(avoid_all.violations == 0);  // everything covered

  hopf.values.assign(hopf.values.size(), 1.0);
  const ContainmentCell avoid_none = compare_sets(hopf, dp, GameSense::avoid, 0.05);
  CHECK(avoid_none.violations == 1);  // the dp <= -tol point is uncovered

  ValueGrid other = constant_grid(0.0, -2, 2, 5);
  CHECK_THROWS_AS(compare_sets(hopf, other, GameSense::reach, 0.05), std::invalid_argument);
  ValueGrid smaller = constant_grid(0.0, -1, 1, 4);
  CHECK_THROWS_AS(compare_sets(hopf, smaller, GameSense::reach, 0.05), std::invalid_argument);
}

TEST_CASE("contours approximate a circle") {
  ValueGrid grid;
  const std::size_t n = 81;
  grid.axes = {linspace(-2, 2, n), linspace(-2, 2, n)};
  grid.values.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = grid.axes[0][i], y = grid.axes[1][j];
      grid.at(i, j) = x * x + y * y - 1.0;
    }
  }
  const auto polylines = extract_contours(grid, 0.0);
  REQUIRE(polylines.size() == 1);
  CHECK(polylines[0].closed);
  const double cell = grid.axes[0][1] - grid.axes[0][0];
  for (const auto& p : polylines[0].points) {
    CHECK(std::abs(std::hypot(p[0], p[1]) - 1.0) <= cell);
  }

  // a constant field above the level has no contour
  ValueGrid flat = constant_grid(2.0);
  CHECK(extract_contours(flat, 0.0).empty());
}

TEST_CASE("scenario json round-trip and validation") {
  const Scenario s = mini_scenario();
  const Scenario back = Scenario::from_json_text(s.to_json());
  CHECK(back.name == s.name);
  CHECK(back.horizons == s.horizons);
  CHECK(back.grid.n == s.grid.n);
  CHECK(back.lifts.size() == s.lifts.size());
  CHECK(back.eta == doctest::Approx(s.eta));

  CHECK_THROWS_WITH_AS(Scenario::from_json_text(R"({"name":"x","sense":"reach","bogus":1})"),
                       doctest::Contains("bogus"), std::invalid_argument);

  // negative input radius is rejected before any computation
  std::string bad = s.to_json();
  const auto pos = bad.find("\"u_radius\": 0.5");
  REQUIRE(pos != std::string::npos);
  bad.replace(pos, 15, "\"u_radius\": -0.5");
  const Scenario parsed = Scenario::from_json_text(bad);
  CHECK_THROWS_AS(parsed.make_system(), std::invalid_argument);
}

TEST_CASE("bundled scenarios load and unknown names are rejected") {
  CHECK(bundled_scenario("slow_manifold_reach").sense == GameSense::reach);
  CHECK(bundled_scenario("vanderpol_avoid").sense == GameSense::avoid);
  CHECK(bundled_scenario("vanderpol_avoid").lifts.size() == 4);
  CHECK_THROWS_AS(bundled_scenario("nope"), NotFoundError);
}

TEST_CASE("pipeline runs, is idempotent-guarded, and is deterministic") {
  const Scenario s = mini_scenario();
  const std::string out1 = "pipeline_test_out1";
  const std::string out2 = "pipeline_test_out2";
  fs::remove_all(out1);
  fs::remove_all(out2);

  PipelineOptions opts;
  opts.force = true;
  CHECK(run_pipeline(s, out1, opts) == kExitOk);
  CHECK(fs::exists(out1 + "/tube.csv"));
  CHECK(fs::exists(out1 + "/model_slow_manifold.json"));
  CHECK(fs::exists(out1 + "/delta_slow_manifold.json"));
  CHECK(fs::exists(out1 + "/dp_0.vg"));
  CHECK(fs::exists(out1 + "/hopf_slow_manifold_0.vg"));
  CHECK(fs::exists(out1 + "/hopf_slow_manifold_0.csv"));
  CHECK(fs::exists(out1 + "/containment.json"));
  CHECK(fs::exists(out1 + "/rollout.json"));
  CHECK(fs::exists(out1 + "/pipeline.json"));

  // refuses to overwrite without force
  PipelineOptions no_force;
  CHECK_THROWS_AS(run_pipeline(s, out1, no_force), std::invalid_argument);

  // identical seeds produce byte-identical CSV payloads
  CHECK(run_pipeline(s, out2, opts) == kExitOk);
  CHECK(slurp(out1 + "/tube.csv") == slurp(out2 + "/tube.csv"));
  CHECK(slurp(out1 + "/hopf_slow_manifold_0.csv") == slurp(out2 + "/hopf_slow_manifold_0.csv"));

  // the containment report is wired through
  auto doc = nlohmann::json::parse(slurp(out1 + "/containment.json"));
  CHECK(doc.at("sense") == "reach");
  CHECK(!doc.at("ablation").get<bool>());

  // rollouts in the mini run all succeed
  auto rollout = nlohmann::json::parse(slurp(out1 + "/rollout.json"));
  CHECK(rollout.at("success_rate").get<double>() == doctest::Approx(1.0));

  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("stage-by-stage run equals the one-shot pipeline") {
  const Scenario s = mini_scenario();
  const std::string whole = "pipeline_stage_whole";
  const std::string staged = "pipeline_stage_parts";
  fs::remove_all(whole);
  fs::remove_all(staged);

  PipelineOptions opts;
  opts.force = true;
  REQUIRE(run_pipeline(s, whole, opts) == kExitOk);

  fs::create_directories(staged);
  stage_tube(s, staged);
  stage_fit(s, staged);
  stage_errbound(s, staged);
  stage_dp(s, staged);
  stage_solve(s, staged, 1);
  stage_compare(s, staged);
  stage_rollout(s, staged);

  for (const std::string name :
       {"tube.csv", "model_slow_manifold.json", "delta_slow_manifold.json",
        "hopf_slow_manifold_0.csv", "containment.json", "rollout.json"}) {
    CHECK(slurp(whole + "/" + name) == slurp(staged + "/" + name));
  }
  fs::remove_all(whole);
  fs::remove_all(staged);
}

TEST_CASE("delta ablation is flagged and strict mode refuses it") {
  Scenario s = mini_scenario();
  s.rollout.enabled = false;
  s.delta_override = 0.0;
  const std::string out = "pipeline_ablation_out";
  fs::remove_all(out);

  PipelineOptions opts;
  opts.force = true;
  CHECK(run_pipeline(s, out, opts) == kExitOk);  // allowed when not strict

  auto summary = nlohmann::json::parse(slurp(out + "/pipeline.json"));
  CHECK(summary.at("ablation").get<bool>());
  CHECK(!summary.at("certified").get<bool>());
  auto delta = nlohmann::json::parse(slurp(out + "/delta_slow_manifold.json"));
  CHECK(delta.at("delta_star").get<double>() == 0.0);
  CHECK(delta.at("computed_delta_star").get<double>() > 0.0);
  CHECK(delta.at("ablation").get<bool>());

  PipelineOptions strict = opts;
  strict.strict = true;
  CHECK(run_pipeline(s, out, strict) == kExitContainment);
  fs::remove_all(out);
}

TEST_CASE("emit_contours writes polyline ids and vertices") {
  ValueGrid grid = constant_grid(1.0);
  grid.values[12] = -1.0;  // one interior dip
  const std::string path = "contour_test.csv";
  emit_contours(grid, 0.0, path);
  const std::string text = slurp(path);
  CHECK(text.find("polyline,x1,x2") == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') > 1);
  fs::remove(path);
}

TEST_CASE("hopf grid artifact records lifted coordinates and flags") {
  Scenario s = mini_scenario();
  s.rollout.enabled = false;
  const std::string out = "pipeline_csv_out";
  fs::remove_all(out);
  PipelineOptions opts;
  opts.force = true;
  REQUIRE(run_pipeline(s, out, opts) == kExitOk);
  const std::string csv = slurp(out + "/hopf_slow_manifold_0.csv");
  CHECK(csv.find("x1,x2,g1,g2,g3,value,converged") == 0);
  fs::remove_all(out);
}
