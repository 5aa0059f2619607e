#include "liftreach/rollout.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace liftreach {

std::string DisturbancePolicy::name() const {
  switch (kind) {
    case Kind::zero: return "zero";
    case Kind::random: return "random";
    case Kind::extremal_costate: return "extremal_costate";
    case Kind::extremal_dp: return "extremal_dp";
  }
  return "?";
}

namespace {

Vec dp_extremal_disturbance(const HopfProblem& prob, const ValueGrid& grid,
                            const AffineSystem& sys, const Vec& x) {
  // gradient-aligned extremal: worst case for the reach controller maximizes
  // grad V . h2 d, the avoid case minimizes it
  Vec gradient;
  try {
    gradient = dp_gradient_at(grid, x);
  } catch (const OutOfDomainError&) {
    return Vec::Zero(prob.d_ball.dim);
  }
  const Vec q = sys.disturbance_matrix(x).transpose() * gradient;
  return prob.sense == GameSense::reach ? prob.d_ball.extremizer(q)
                                        : prob.d_ball.extremizer(-q);
}

}  // namespace

TrialRecord run_rollout(const AffineSystem& sys, const LiftMap& m, const HopfProblem& prob,
                        const QuadTarget& base_target, const Vec& x0,
                        const DisturbancePolicy& d_policy, const RolloutOptions& opts) {
  check_dim(x0, sys.n_x, "run_rollout: x0");
  TrialRecord record;
  record.x0 = x0;

  HopfProblem active = prob;
  FlowCache cache = build_flow_cache(active);
  HopfResult plan = solve_value(active, cache, m.lift(x0), opts.solve);
  record.certified_value = plan.value;

  const bool certified = prob.sense == GameSense::reach
                             ? plan.value <= -opts.value_margin
                             : plan.value > opts.value_margin;
  if (!certified && !opts.audit_mode) {
    throw std::invalid_argument(
        "run_rollout: initial state is not certified (value " +
        format_double(plan.value) + "); use audit_mode to force the trial");
  }

  Rng rng(derive_seed(d_policy.seed, 0x5d));
  Vec x = x0;
  double tau = prob.t;
  int step_count = 0;
  try {
    while (tau < prob.T - 1e-12) {
      const double h = std::min(opts.h, prob.T - tau);
      if (opts.replan_every > 0 && step_count > 0 && step_count % opts.replan_every == 0 &&
          prob.T - tau > 2 * opts.h) {
        HopfProblem next = active;
        next.t = tau;
        FlowCache next_cache = build_flow_cache(next);
        HopfSolveOptions solve_opts = opts.solve;
        solve_opts.seed = derive_seed(opts.solve.seed, static_cast<uint64_t>(step_count));
        HopfResult replanned = solve_value(next, next_cache, m.lift(x), solve_opts);
        const bool still_ok = prob.sense == GameSense::reach ? replanned.value <= 0.0
                                                             : replanned.value > 0.0;
        if (still_ok) {
          active = next;
          cache = std::move(next_cache);
          plan = replanned;
          ++record.replans;
        }
      }

      const Vec u = extract_control(active, plan, std::clamp(tau, active.t, active.T));
      Vec d;
      switch (d_policy.kind) {
        case DisturbancePolicy::Kind::zero:
          d = Vec::Zero(prob.d_ball.dim);
          break;
        case DisturbancePolicy::Kind::random:
          d = prob.d_ball.sample(rng);
          break;
        case DisturbancePolicy::Kind::extremal_costate:
          d = extremal_disturbance(active, plan, std::clamp(tau, active.t, active.T));
          break;
        case DisturbancePolicy::Kind::extremal_dp:
          if (!d_policy.dp_grid) {
            throw std::invalid_argument("run_rollout: extremal_dp policy needs a DP grid");
          }
          d = dp_extremal_disturbance(prob, *d_policy.dp_grid, sys, x);
          break;
      }
      d = prob.d_ball.project(d);

      // one RK4 step of the true dynamics under held (u, d)
      const Vec k1 = eval_dynamics(sys, x, u, d);
      const Vec k2 = eval_dynamics(sys, x + 0.5 * h * k1, u, d);
      const Vec k3 = eval_dynamics(sys, x + 0.5 * h * k2, u, d);
      const Vec k4 = eval_dynamics(sys, x + h * k3, u, d);
      x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!x.allFinite()) throw DivergenceError("run_rollout: diverged at " + format_double(tau));
      tau += h;
      ++step_count;
    }
  } catch (const NumericalError&) {
    record.numerical_failure = true;
    record.terminal = x;
    record.terminal_J = std::numeric_limits<double>::quiet_NaN();
    record.success = false;
    return record;
  }

  record.terminal = x;
  record.terminal_J = base_target.J(x);
  record.success = prob.sense == GameSense::reach ? record.terminal_J <= 0.0
                                                  : record.terminal_J > 0.0;
  return record;
}

RolloutReport batch_rollouts(const AffineSystem& sys, const LiftMap& m,
                             const HopfProblem& prob, const QuadTarget& base_target,
                             const std::vector<Vec>& x0s,
                             const std::vector<DisturbancePolicy>& policies,
                             const RolloutOptions& opts) {
  if (x0s.empty()) throw std::invalid_argument("batch_rollouts: empty initial point list");
  if (policies.empty()) throw std::invalid_argument("batch_rollouts: empty policy list");
  RolloutReport report;
  int successes = 0;
  for (const auto& policy : policies) {
    report.policies.push_back(policy.name());
    for (std::size_t i = 0; i < x0s.size(); ++i) {
      DisturbancePolicy seeded = policy;
      seeded.seed = derive_seed(policy.seed, i);
      TrialRecord rec = run_rollout(sys, m, prob, base_target, x0s[i], seeded, opts);
      successes += rec.success ? 1 : 0;
      report.numerical_failures += rec.numerical_failure ? 1 : 0;
      report.trials.push_back(std::move(rec));
    }
  }
  report.success_rate =
      static_cast<double>(successes) / static_cast<double>(report.trials.size());
  return report;
}

std::string RolloutReport::to_json() const {
  nlohmann::json doc;
  doc["trials"] = nlohmann::json::array();
  for (const auto& t : trials) {
    nlohmann::json rec;
    rec["x0"] = std::vector<double>(t.x0.data(), t.x0.data() + t.x0.size());
    rec["terminal"] = std::vector<double>(t.terminal.data(), t.terminal.data() + t.terminal.size());
    rec["terminal_J"] = t.terminal_J;
    rec["certified_value"] = t.certified_value;
    rec["success"] = t.success;
    rec["numerical_failure"] = t.numerical_failure;
    rec["replans"] = t.replans;
    doc["trials"].push_back(rec);
  }
  doc["policies"] = policies;
  doc["success_rate"] = success_rate;
  doc["numerical_failures"] = numerical_failures;
  doc["n_trials"] = trials.size();
  return doc.dump(2);
}

}  // namespace liftreach
