#pragma once

#include "liftreach/lifting.hpp"

namespace liftreach {

/// Linear model dot(g) ~ kappa(g,u,d) = K g + L1 u + L2 d in the augmented
/// space, with provenance metadata.
struct LiftedLinearModel {
  Mat K;    // n_k x n_k
  Mat L1;   // n_k x n_u
  Mat L2;   // n_k x n_d
  std::string provenance;  // analytic | taylor(...) | edmd(...) | dmd(...)
  std::string lift_kind;   // kind tag of the LiftMap used (identity allowed)

  int n_k() const { return static_cast<int>(K.rows()); }
  int n_u() const { return static_cast<int>(L1.cols()); }
  int n_d() const { return static_cast<int>(L2.cols()); }

  Vec eval(const Vec& g, const Vec& u, const Vec& d) const;
  void validate() const;

  std::string to_json() const;
  static LiftedLinearModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static LiftedLinearModel load(const std::string& path);
};

/// Sampled (x, u, d, xdot) tuples with xdot evaluated from the exact dynamics.
struct TrajectorySample {
  struct Point {
    Vec x, u, d, xdot;
  };
  std::vector<Point> points;
  uint64_t seed = 0;
};

/// Uniform initial states in the box, inputs uniform in their balls, snippets
/// of `snippet_steps` RK4 steps with held inputs; xdot from eval_dynamics.
TrajectorySample sample_trajectories(const AffineSystem& sys, const Box& box,
                                     const InputBall& u_ball, const InputBall& d_ball,
                                     int n_points, int snippet_steps, double h,
                                     uint64_t seed);

/// The exact lifted slow-manifold drift with the input map frozen at g1 = c1:
/// K = [[mu,0,0],[0,lambda,-lambda],[0,0,2mu]], L1 = L2 = [[1,0],[0,1],[2c1,0]].
LiftedLinearModel analytic_slow_manifold_model(const Vec& c, double mu = -0.05,
                                               double lambda = -1.0);

/// Continuous-time EDMD: least squares of DPsi(x) xdot against [Psi(x); u; d]
/// via ridge-regularized normal equations. Throws SingularFitError when the
/// Gram matrix is singular and ridge = 0.
LiftedLinearModel fit_edmd(const LiftMap& m, const TrajectorySample& data, double ridge);

/// DMDc-style least squares on the identity lift (non-augmented baseline).
LiftedLinearModel fit_dmd(const TrajectorySample& data, double ridge);

/// K from finite differences of g -> DPsi(P g) f_x(P g) at Psi(center)
/// (step 1e-6); L1, L2 evaluated exactly at the center.
LiftedLinearModel taylor_model(const AffineSystem& sys, const LiftMap& m, const Vec& center);

struct ResidualStats {
  double max = 0.0;
  double mean = 0.0;
  std::size_t count = 0;
};

/// Euclidean norm of f_G - kappa at each (x,u,d); exact evaluation, no bounding.
ResidualStats model_residual(const LiftedLinearModel& model, const LiftMap& m,
                             const AffineSystem& sys,
                             const std::vector<std::array<Vec, 3>>& pts);

}  // namespace liftreach
