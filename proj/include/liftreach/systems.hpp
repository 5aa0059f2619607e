#pragma once

#include "liftreach/common.hpp"

#include <map>
#include <optional>

namespace liftreach {

/// Time-indexed input signal.
using Signal = std::function<Vec(double)>;

/// Compact convex input set: a norm ball of given radius.
struct InputBall {
  enum class Norm { euclidean, box };

  int dim = 1;
  double radius = 0.0;
  Norm norm = Norm::euclidean;

  InputBall() = default;
  InputBall(int dim_, double radius_, Norm norm_ = Norm::euclidean);

  bool contains(const Vec& v, double tol = 0.0) const;
  /// Support function sigma(q) = sup_{v in ball} q.v.
  double support(const Vec& q) const;
  /// Argmax of q.v over the ball (zero vector when q = 0).
  Vec extremizer(const Vec& q) const;
  /// Nearest point of the ball.
  Vec project(const Vec& v) const;
  Vec sample(Rng& rng) const;
};

/// Control- and disturbance-affine dynamics
///   f(x,u,d) = f_x(x) + h1(x) u + h2(x) d.
/// The affine composition is the only way inputs enter; the callables must be
/// deterministic and finite on finite inputs.
struct AffineSystem {
  int n_x = 0;
  int n_u = 0;
  int n_d = 0;
  std::function<Vec(const Vec&)> drift;                // f_x
  std::function<Mat(const Vec&)> control_matrix;       // h1: n_x x n_u
  std::function<Mat(const Vec&)> disturbance_matrix;   // h2: n_x x n_d
  double lipschitz_bound = 0.0;  // valid on lipschitz_box when set
  std::optional<Box> lipschitz_box;
};

Vec eval_dynamics(const AffineSystem& sys, const Vec& x, const Vec& u, const Vec& d);

struct Trajectory {
  std::vector<double> times;   // strictly increasing
  std::vector<Vec> states;     // same length as times
  std::vector<Vec> controls;      // optional, sampled at times[0..n-2]
  std::vector<Vec> disturbances;  // optional, paired with controls

  Trajectory() = default;
  Trajectory(std::vector<double> times_, std::vector<Vec> states_);
  const Vec& final_state() const { return states.back(); }
};

/// Fixed-step classical RK4 from t to T; the last step is shortened to land
/// exactly on T. Throws DivergenceError naming the time if the state goes
/// non-finite.
Trajectory integrate(const AffineSystem& sys, const Vec& x0, const Signal& u_sig,
                     const Signal& d_sig, double t, double T, double h);

Signal zero_signal(int dim);
Signal constant_signal(Vec value);
/// Zero-order hold: value[i] applies on [times[i], times[i+1]).
Signal zoh_signal(std::vector<double> times, std::vector<Vec> values);

/// A benchmark system together with its default input sets.
struct DemoSystem {
  AffineSystem sys;
  InputBall u_ball;
  InputBall d_ball;
};

/// Named benchmark systems:
///  - "slow_manifold": drift (mu x1, lambda (x2 - x1^2)), h1 = h2 = I2,
///    defaults mu = -0.05, lambda = -1, |u| <= 1/2, |d| <= 1/4.
///  - "vanderpol": drift (x2, mu (1 - x1^2) x2 - x1), h1 = (0,1)^T, no
///    disturbance, defaults mu = 1, |u| <= 1/2.
/// Params may override "mu", "lambda", "u_radius", "d_radius".
DemoSystem make_demo_system(const std::string& name,
                            const std::map<std::string, double>& params = {});

/// Samples the state Jacobian of f on a grid over the box (inputs at ball
/// axis extremes), takes the max spectral norm and multiplies by 1.5.
double estimate_lipschitz(const AffineSystem& sys, const Box& box,
                          const InputBall& u_ball, const InputBall& d_ball,
                          int samples_per_dim = 7);

}  // namespace liftreach
