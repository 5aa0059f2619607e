#pragma once

#include "liftreach/models.hpp"

namespace liftreach {

/// Per-time axis-aligned over-approximations of the backward feasible sets
/// S(T, tau), ordered from T down to t.
struct BoxTube {
  std::vector<double> times;  // decreasing, times.front() == T
  std::vector<Box> boxes;     // boxes[i] over-approximates S(T, times[i])
  std::string method;

  Box union_box() const;
  /// Box at the stored time nearest to tau.
  const Box& box_at(double tau) const;
};

struct TubeOptions {
  double h = 0.01;
  double diameter_cap = 1e3;
  int image_samples_per_dim = 5;
  /// Optional invariant region: boxes are clamped to it. Declares the
  /// assumption S(T, tau) subseteq domain, which the Monte-Carlo soundness
  /// audit checks; without it the interval recursion alone is the guarantee.
  std::optional<Box> domain;
};

/// Interval backward-Euler propagation with a Picard-validated step enclosure
/// and Lipschitz-bloated image bounds. Guaranteed over-approximation of each
/// S(T, tau) under the sampled Lipschitz estimate (and the domain assumption
/// when one is declared). Throws BlowUpError naming the time if a box exceeds
/// the diameter cap.
BoxTube backward_tube(const AffineSystem& sys, const InputBall& u_ball,
                      const InputBall& d_ball, const Box& target_box, double t,
                      double T, const TubeOptions& opts = {});

struct ErrorBound {
  double delta_star = 0.0;     // grid max times (1 + inflation)
  double pre_inflation = 0.0;  // grid max
  double inflation = 0.0;
  int grid_per_dim = 0;
  Box box;  // the tube union box the grid covered

  struct PointDiag {
    Vec x;
    double bound;
  };
  std::vector<PointDiag> diagnostics;
};

/// Pointwise bound on sup_{u,d} |f_G - kappa| at lifted grid points over the
/// tube's union box (the grid lives in X and is lifted, never in G):
///   |a(x)| + sup|B1 u| + sup|B2 d|,
/// a = DPsi f_x - K Psi(x), Bi = DPsi h_i - L_i; valid because the error is
/// affine in (u, d). delta_star = grid max * (1 + inflation).
ErrorBound error_bound_delta(const LiftedLinearModel& model, const LiftMap& m,
                             const AffineSystem& sys, const InputBall& u_ball,
                             const InputBall& d_ball, const BoxTube& tube,
                             int grid_per_dim, double inflation = 0.1);

}  // namespace liftreach
