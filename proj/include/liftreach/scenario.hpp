#pragma once

#include "liftreach/dp.hpp"
#include "liftreach/hopf.hpp"
#include "liftreach/tube.hpp"

namespace liftreach {

struct LiftSpec {
  std::string kind;  // identity | slow_manifold | polynomial | rbf
  int degree = 3;    // polynomial
  int centers = 5;   // rbf
  std::string label() const;
};

struct ModelSpec {
  std::string kind = "edmd";  // analytic | taylor | edmd | dmd
  Vec center;                 // analytic / taylor linearization point
  int samples = 2000;
  int snippet_steps = 10;
  double sample_h = 0.01;
  double ridge = 1e-8;
};

struct GridSpec {
  Box box;
  std::vector<int> n;
};

struct RolloutSpec {
  bool enabled = false;
  double horizon = 0.25;
  int n_points = 50;
  double h = 0.005;
  int replan_every = 10;
  double value_margin = 0.05;
  std::vector<std::string> policies{"random", "extremal_costate"};
};

/// One validated pipeline configuration. Unknown keys anywhere in the file
/// are rejected at load time.
struct Scenario {
  std::string name;
  uint64_t seed = 0;
  GameSense sense = GameSense::reach;

  std::string system_name;
  std::map<std::string, double> system_params;
  std::optional<double> u_radius;  // overrides the demo default
  std::optional<double> d_radius;

  Vec target_center;
  Vec target_qdiag;
  double target_level = 1.0;

  double eta = 1.0;
  double aug_level = 1.0;
  TargetValidation validation = TargetValidation::strict;

  std::vector<LiftSpec> lifts;
  ModelSpec model;
  std::vector<double> horizons;
  GridSpec grid;
  double dp_cfl = 0.9;
  TubeOptions tube;
  int errbound_grid = 41;
  double errbound_inflation = 0.1;
  HopfSolveOptions hopf;
  int hopf_nodes = 50;
  double compare_tolerance = 0.05;
  RolloutSpec rollout;
  std::vector<std::string> baselines;  // subset of {taylor, dmd}
  std::optional<double> delta_override;  // ablation: force delta (e.g. 0)

  static Scenario from_json_text(const std::string& text);
  static Scenario load(const std::string& path);
  std::string to_json() const;

  DemoSystem make_system() const;
  QuadTarget base_target() const;
  LiftMap make_lift(const LiftSpec& spec) const;
  AugTargetMode aug_mode() const {
    return sense == GameSense::reach ? AugTargetMode::reach_inner
                                     : AugTargetMode::avoid_outer;
  }
};

/// The two bundled configurations from the benchmark studies.
Scenario bundled_scenario(const std::string& name);

}  // namespace liftreach
