#pragma once

#include "liftreach/contours.hpp"
#include "liftreach/rollout.hpp"
#include "liftreach/scenario.hpp"

namespace liftreach {

/// Point counts from checking the certified set against the DP oracle on a
/// shared grid.
struct ContainmentCell {
  std::string lift;
  double horizon = 0.0;
  long certified = 0;         // grid points with hopf value <= 0
  long oracle_certified = 0;  // grid points with dp value <= 0
  long confirmed = 0;
  long violations = 0;
  double hopf_area = 0.0;  // cell-count x cell-area
  double dp_area = 0.0;
  double tolerance = 0.0;
  bool baseline = false;
};

/// Reach: a violation is a point the Hopf side certifies (value <= 0) that
/// the oracle puts firmly outside (dp > tol). Avoid: a point the Hopf side
/// excludes (value > 0) that the oracle puts firmly inside (dp <= -tol).
/// Throws std::invalid_argument when the grids' axes differ.
ContainmentCell compare_sets(const ValueGrid& hopf, const ValueGrid& dp, GameSense sense,
                             double tol);

/// Marching-squares polylines of the level set, written as CSV.
void emit_contours(const ValueGrid& grid, double level, const std::string& path);

struct PipelineOptions {
  bool force = false;
  bool strict = false;
  int threads = 1;
  std::optional<uint64_t> seed_override;
};

// Exit codes shared by the pipeline and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitContainment = 4;

/// Composable stages; each reads its inputs from files earlier stages wrote
/// into `outdir`, so running them individually matches the one-shot pipeline.
void stage_tube(const Scenario& scn, const std::string& outdir);
void stage_fit(const Scenario& scn, const std::string& outdir);
void stage_errbound(const Scenario& scn, const std::string& outdir);
void stage_dp(const Scenario& scn, const std::string& outdir);
void stage_solve(const Scenario& scn, const std::string& outdir, int threads = 1);
void stage_compare(const Scenario& scn, const std::string& outdir);
void stage_rollout(const Scenario& scn, const std::string& outdir);

/// Full chain: tube, fit, errbound, dp, solve, compare, rollout, summary.
/// Refuses to overwrite an existing run without `force`. Returns an exit
/// code (0 ok, 2 validation, 3 numerical, 4 containment violation or refused
/// ablation under strict).
int run_pipeline(const Scenario& scn, const std::string& outdir, const PipelineOptions& opts);

/// Model/delta/grid naming shared by stages and tests.
std::string model_path(const std::string& outdir, const std::string& lift_label);
std::string delta_path(const std::string& outdir, const std::string& lift_label);
std::string dp_grid_path(const std::string& outdir, std::size_t horizon_idx);
std::string hopf_grid_path(const std::string& outdir, const std::string& lift_label,
                           std::size_t horizon_idx);

/// All model entries a scenario induces: the configured lifts plus any
/// identity-lift baselines.
struct ModelEntry {
  LiftSpec lift;
  std::string label;
  std::string model_kind;
  bool baseline = false;
};
std::vector<ModelEntry> model_entries(const Scenario& scn);

}  // namespace liftreach
