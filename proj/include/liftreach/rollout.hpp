#pragma once

#include "liftreach/hopf.hpp"
#include "liftreach/value_grid.hpp"

namespace liftreach {

/// Sampled adversary for closed-loop audits. Outputs are always projected
/// into the disturbance ball.
struct DisturbancePolicy {
  enum class Kind { zero, random, extremal_costate, extremal_dp };
  Kind kind = Kind::zero;
  uint64_t seed = 0;
  const ValueGrid* dp_grid = nullptr;  // required for extremal_dp

  std::string name() const;
};

struct TrialRecord {
  Vec x0;
  Vec terminal;
  double terminal_J = 0.0;
  double certified_value = 0.0;
  bool success = false;
  bool numerical_failure = false;
  int replans = 0;
};

struct RolloutOptions {
  double h = 0.005;
  int replan_every = 10;       // steps; 0 = open-loop from the initial solve
  double value_margin = 0.05;  // certification margin required of x0
  bool audit_mode = false;     // skip the certification precondition
  HopfSolveOptions solve;
};

/// Simulates the TRUE dynamics under the Hopf-derived control against the
/// given adversary. The initial lifted state must be certified (value <= 0
/// reach, > 0 avoid, by the margin) unless audit_mode is set. Replanning
/// re-solves from the current lifted state over the remaining horizon and
/// keeps the previous plan if the re-solve loses certification.
TrialRecord run_rollout(const AffineSystem& sys, const LiftMap& m, const HopfProblem& prob,
                        const QuadTarget& base_target, const Vec& x0,
                        const DisturbancePolicy& d_policy, const RolloutOptions& opts = {});

struct RolloutReport {
  std::vector<TrialRecord> trials;
  std::vector<std::string> policies;
  double success_rate = 0.0;
  int numerical_failures = 0;
  std::string to_json() const;
};

/// Cartesian product of initial points and adversaries; deterministic under
/// the policy seeds.
RolloutReport batch_rollouts(const AffineSystem& sys, const LiftMap& m,
                             const HopfProblem& prob, const QuadTarget& base_target,
                             const std::vector<Vec>& x0s,
                             const std::vector<DisturbancePolicy>& policies,
                             const RolloutOptions& opts = {});

}  // namespace liftreach
