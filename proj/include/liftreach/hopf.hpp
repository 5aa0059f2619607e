#pragma once

#include "liftreach/models.hpp"
#include "liftreach/targets.hpp"

namespace liftreach {

enum class GameSense { reach, avoid };

/// Scaling-and-squaring (Pade) matrix exponential; throws NumericalError on
/// non-finite output.
Mat matrix_exponential(const Mat& A);

/// Everything needed for one pointwise value solve of the error-augmented
/// linear game.
struct HopfProblem {
  LiftedLinearModel model;
  QuadTarget target;       // in G (inner target for reach, outer for avoid)
  double t = 0.0;
  double T = 1.0;
  double delta = 0.0;      // antagonistic error radius (Euclidean ball in G)
  GameSense sense = GameSense::reach;
  InputBall u_ball;
  InputBall d_ball;
  int quadrature_nodes = 50;

  void validate() const;
};

/// Fundamental-matrix data at the quadrature nodes:
///   M0(s) = exp(K (T - s)),  M1 = M0 L1,  M2 = M0 L2.
struct FlowCache {
  std::vector<double> s;    // quadrature_nodes + 1 uniform nodes on [t, T]
  std::vector<Mat> M0, M1, M2;
  std::vector<double> w;    // trapezoid weights (include the node spacing)
  Mat end_map;              // exp(K (T - t))
};

FlowCache build_flow_cache(const HopfProblem& prob);

/// Input-part Hamiltonian after the change of coordinates, evaluated at node
/// k. Reach: -sigma_U(M1^T p) + sigma_D(M2^T p) + delta |M0^T p|; avoid flips
/// every sign (support functions of the input and error balls).
double hamiltonian_integrand(const HopfProblem& prob, const FlowCache& cache,
                             const Vec& p, int k);

/// Hopf objective Phi(p) = J*(p) - p.(e^{K(T-t)} g) - int_t^T Htilde(p,s) ds
/// (trapezoid over the cache nodes). The value is V = max_p -Phi(p).
double hopf_objective(const HopfProblem& prob, const FlowCache& cache,
                      const Vec& g, const Vec& p);

struct HopfSolveOptions {
  int restarts = 8;
  int max_iters = 500;
  double step = 1.0;      // relative subgradient step scale
  double tol = 1e-6;      // gradient norm for convergence
  uint64_t seed = 0;
};

struct HopfResult {
  double value = 0.0;          // -Phi(p_star)
  Vec p_star;
  double objective_at_p = 0.0; // Phi(p_star)
  int restarts_used = 0;
  bool converged = false;
  double gradient_norm = 0.0;
};

/// Multi-start subgradient descent on Phi (inits: p = 0, p = grad J at the
/// flowed point, random Gaussians scaled by the target extent) with an Armijo
/// polish from the best iterate. Deterministic under a fixed seed. Any p gives
/// -Phi(p) <= V, so a non-converged result under-estimates the value.
HopfResult solve_value(const HopfProblem& prob, const FlowCache& cache,
                       const Vec& g, const HopfSolveOptions& opts = {});

struct PointwiseValues {
  std::vector<Vec> points;
  std::vector<double> values;
  std::vector<bool> converged;
  int n_converged = 0;
  /// Eq-7 sign convention: value <= 0 means the point is in the (certified)
  /// set for the problem's game sense.
  bool member(std::size_t i) const { return values[i] <= 0.0; }
};

/// Independent solve_value per point; per-point seeds are derived from
/// opts.seed and the point index, so results do not depend on thread count.
PointwiseValues solve_grid(const HopfProblem& prob, const std::vector<Vec>& points,
                           const HopfSolveOptions& opts = {}, int threads = 1);

/// Optimal input at time tau from the solved costate:
/// reach u*(tau) = argmin_{u in U} (M1(tau)^T p*).u; avoid takes the argmax.
/// Returns zero when the costate gives no preference.
Vec extract_control(const HopfProblem& prob, const HopfResult& result, double tau);

/// The disturbance the costate identifies as worst-case for the given sense.
Vec extremal_disturbance(const HopfProblem& prob, const HopfResult& result, double tau);

}  // namespace liftreach
