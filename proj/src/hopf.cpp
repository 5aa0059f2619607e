#include "liftreach/hopf.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstring>

namespace liftreach {

Mat matrix_exponential(const Mat& A) {
  Mat E = A.exp();
  if (!E.allFinite()) {
    throw NumericalError("matrix_exponential: non-finite result");
  }
  return E;
}

void HopfProblem::validate() const {
  model.validate();
  if (!(t < T)) throw std::invalid_argument("HopfProblem: need t < T");
  if (delta < 0) throw std::invalid_argument("HopfProblem: delta must be nonnegative");
  if (target.dim() != model.n_k()) {
    throw std::invalid_argument("HopfProblem: target dimension must equal n_k");
  }
  if (u_ball.dim != model.n_u() || d_ball.dim != model.n_d()) {
    throw std::invalid_argument("HopfProblem: input ball dimensions must match model");
  }
  if (quadrature_nodes < 1) {
    throw std::invalid_argument("HopfProblem: need at least one quadrature interval");
  }
}

FlowCache build_flow_cache(const HopfProblem& prob) {
  prob.validate();
  const int N = prob.quadrature_nodes;
  const double dt = (prob.T - prob.t) / N;
  FlowCache cache;
  cache.s.resize(N + 1);
  cache.M0.resize(N + 1);
  cache.M1.resize(N + 1);
  cache.M2.resize(N + 1);
  cache.w.resize(N + 1);
  for (int k = 0; k <= N; ++k) {
    const double s = prob.t + k * dt;
    cache.s[k] = s;
    cache.M0[k] = matrix_exponential(prob.model.K * (prob.T - s));
    cache.M1[k] = cache.M0[k] * prob.model.L1;
    cache.M2[k] = cache.M0[k] * prob.model.L2;
    cache.w[k] = (k == 0 || k == N) ? 0.5 * dt : dt;
  }
  cache.end_map = cache.M0.front();
  return cache;
}

double hamiltonian_integrand(const HopfProblem& prob, const FlowCache& cache,
                             const Vec& p, int k) {
  const double su = prob.u_ball.support(cache.M1[k].transpose() * p);
  const double sd = prob.d_ball.support(cache.M2[k].transpose() * p);
  const double se = prob.delta * (cache.M0[k].transpose() * p).norm();
  return prob.sense == GameSense::reach ? -su + sd + se : su - sd - se;
}

namespace {

// scratch space reused across the node sweep (the inner loop is allocation
// sensitive at grid scale)
struct PhiWorkspace {
  Vec q0, q1, q2, u_star, d_star;
  void resize(int n_k, int n_u, int n_d) {
    q0.resize(n_k);
    q1.resize(n_u);
    q2.resize(n_d);
    u_star.resize(n_u);
    d_star.resize(n_d);
  }
};

// ball support/extremizer inlined for the hot loop (no dimension checks, no
// temporaries); the extremizer is written into `star`
inline double fast_support(const InputBall& ball, const Vec& q) {
  return ball.norm == InputBall::Norm::euclidean ? ball.radius * q.norm()
                                                 : ball.radius * q.lpNorm<1>();
}

inline void fast_extremizer(const InputBall& ball, const Vec& q, Vec& star) {
  if (ball.norm == InputBall::Norm::euclidean) {
    const double n = q.norm();
    if (n == 0.0) star.setZero();
    else star = (ball.radius / n) * q;
  } else {
    star = q.unaryExpr([r = ball.radius](double v) { return v >= 0 ? r : -r; });
  }
}

// Phi and (optionally) its subgradient in one node sweep.
double phi_eval(const HopfProblem& prob, const FlowCache& cache, const Vec& z,
                const Vec& p, Vec* grad, PhiWorkspace& ws) {
  double phi = prob.target.conjugate(p) - p.dot(z);
  if (grad) *grad = prob.target.conjugate_gradient(p) - z;
  const double sign = prob.sense == GameSense::reach ? 1.0 : -1.0;
  for (std::size_t k = 0; k < cache.s.size(); ++k) {
    const double w = cache.w[k];
    ws.q1.noalias() = cache.M1[k].transpose() * p;
    ws.q2.noalias() = cache.M2[k].transpose() * p;
    const double su = fast_support(prob.u_ball, ws.q1);
    const double sd = fast_support(prob.d_ball, ws.q2);
    double se = 0.0;
    if (prob.delta > 0.0) {
      ws.q0.noalias() = cache.M0[k].transpose() * p;
      se = prob.delta * ws.q0.norm();
    }
    // Phi -= w * Htilde, with Htilde = sign * (-su + sd + se)
    phi -= w * sign * (-su + sd + se);
    if (grad) {
      const double ws_sign = w * sign;
      if (su != 0.0) {
        fast_extremizer(prob.u_ball, ws.q1, ws.u_star);
        grad->noalias() += ws_sign * (cache.M1[k] * ws.u_star);
      }
      if (sd != 0.0) {
        fast_extremizer(prob.d_ball, ws.q2, ws.d_star);
        grad->noalias() -= ws_sign * (cache.M2[k] * ws.d_star);
      }
      if (se != 0.0) {
        grad->noalias() -= (ws_sign * prob.delta / ws.q0.norm()) * (cache.M0[k] * ws.q0);
      }
    }
  }
  return phi;
}

Vec restart_init(const HopfProblem& prob, const Vec& z, int r, Rng& rng) {
  const Eigen::Index n = z.size();
  if (r == 0) return Vec::Zero(n);
  if (r == 1) return prob.target.grad_J(z);
  // random Gaussian scaled by the target extent in the costate metric
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec p(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double scale = 2.0 * std::sqrt(prob.target.level() *
                                         std::max(prob.target.shape()(i, i), 1e-12));
    p[i] = scale * gauss(rng);
  }
  return p;
}

}  // namespace

double hopf_objective(const HopfProblem& prob, const FlowCache& cache,
                      const Vec& g, const Vec& p) {
  check_dim(g, prob.model.n_k(), "hopf_objective: g");
  check_dim(p, prob.model.n_k(), "hopf_objective: p");
  const Vec z = cache.end_map * g;
  PhiWorkspace ws;
  ws.resize(prob.model.n_k(), prob.model.n_u(), prob.model.n_d());
  return phi_eval(prob, cache, z, p, nullptr, ws);
}

HopfResult solve_value(const HopfProblem& prob, const FlowCache& cache,
                       const Vec& g, const HopfSolveOptions& opts) {
  check_dim(g, prob.model.n_k(), "solve_value: g");
  if (opts.restarts < 1) throw std::invalid_argument("solve_value: restarts must be >= 1");
  const Vec z = cache.end_map * g;
  Rng rng(opts.seed);

  // step scale from the target extent
  double scale = 0.0;
  for (Eigen::Index i = 0; i < prob.target.dim(); ++i) {
    scale += 4.0 * prob.target.level() * std::max(prob.target.shape()(i, i), 1e-12);
  }
  scale = std::sqrt(scale / static_cast<double>(prob.target.dim()));

  HopfResult best;
  best.objective_at_p = std::numeric_limits<double>::infinity();

  const int subgrad_iters = std::min(opts.max_iters / 2, 150);
  const int polish_iters = opts.max_iters - subgrad_iters;

  PhiWorkspace ws;
  ws.resize(prob.model.n_k(), prob.model.n_u(), prob.model.n_d());
  Vec cand(z.size());

  for (int r = 0; r < opts.restarts; ++r) {
    Vec p = restart_init(prob, z, r, rng);
    Vec grad(p.size());
    double phi = phi_eval(prob, cache, z, p, &grad, ws);
    Vec p_best = p;
    double phi_best = phi;

    // phase 1: normalized subgradient descent, step ~ scale / sqrt(iter)
    int stalled = 0;
    for (int j = 1; j <= subgrad_iters && stalled < 25; ++j) {
      const double gn = grad.norm();
      if (gn <= opts.tol) break;
      p -= (opts.step * scale / std::sqrt(double(j))) * (grad / gn);
      phi = phi_eval(prob, cache, z, p, &grad, ws);
      if (phi < phi_best - 1e-12 * (1.0 + std::abs(phi_best))) {
        phi_best = phi;
        p_best = p;
        stalled = 0;
      } else {
        ++stalled;
      }
    }

    // phase 2: Armijo backtracking descent from the incumbent
    p = p_best;
    phi = phi_eval(prob, cache, z, p, &grad, ws);
    double step = scale;
    bool converged = false;
    for (int j = 0; j < polish_iters; ++j) {
      const double gn2 = grad.squaredNorm();
      if (std::sqrt(gn2) <= opts.tol) {
        converged = true;
        break;
      }
      double t_step = step;
      bool moved = false;
      for (int back = 0; back < 50; ++back) {
        cand = p - t_step * grad;
        const double phi_cand = phi_eval(prob, cache, z, cand, nullptr, ws);
        if (phi_cand <= phi - 2.5e-1 * t_step * gn2) {
          p.swap(cand);
          phi = phi_cand;
          phi_eval(prob, cache, z, p, &grad, ws);
          step = t_step * 2.0;  // allow growth again
          moved = true;
          break;
        }
        t_step *= 0.5;
        if (t_step < 1e-18 * scale) break;
      }
      if (!moved) break;  // stuck at a kink / numeric floor
      if (phi < phi_best) {
        phi_best = phi;
        p_best = p;
      }
    }
    const double final_gn = grad.norm();
    if (phi_best < best.objective_at_p) {
      best.objective_at_p = phi_best;
      best.p_star = p_best;
      best.converged = converged || final_gn <= opts.tol;
      best.gradient_norm = final_gn;
      best.restarts_used = r + 1;
    }
  }
  best.restarts_used = opts.restarts;
  best.value = -best.objective_at_p;
  return best;
}

namespace {

// content-derived seed: permuting the point list permutes the outputs
uint64_t point_seed(uint64_t base, const Vec& g) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    uint64_t bits;
    const double v = g[i];
    std::memcpy(&bits, &v, sizeof(bits));
    h = (h ^ bits) * 0x100000001b3ULL;
  }
  return derive_seed(base, h);
}

}  // namespace

PointwiseValues solve_grid(const HopfProblem& prob, const std::vector<Vec>& points,
                           const HopfSolveOptions& opts, int threads) {
  if (points.empty()) throw std::invalid_argument("solve_grid: empty point list");
  const FlowCache cache = build_flow_cache(prob);
  PointwiseValues out;
  out.points = points;
  out.values.resize(points.size());
  std::vector<char> conv(points.size(), 0);
  parallel_for(points.size(), threads, [&](std::size_t i) {
    HopfSolveOptions local = opts;
    local.seed = point_seed(opts.seed, points[i]);
    const HopfResult res = solve_value(prob, cache, points[i], local);
    out.values[i] = res.value;
    conv[i] = res.converged ? 1 : 0;
  });
  out.converged.assign(conv.begin(), conv.end());
  for (char c : conv) out.n_converged += c;
  return out;
}

Vec extract_control(const HopfProblem& prob, const HopfResult& result, double tau) {
  if (!(prob.t <= tau && tau <= prob.T)) {
    throw std::invalid_argument("extract_control: tau outside [t, T]");
  }
  if (result.p_star.size() != prob.model.n_k()) {
    throw std::invalid_argument("extract_control: missing costate");
  }
  const Mat M1 = matrix_exponential(prob.model.K * (prob.T - tau)) * prob.model.L1;
  const Vec q = M1.transpose() * result.p_star;
  return prob.sense == GameSense::reach ? prob.u_ball.extremizer(-q)
                                        : prob.u_ball.extremizer(q);
}

Vec extremal_disturbance(const HopfProblem& prob, const HopfResult& result, double tau) {
  if (result.p_star.size() != prob.model.n_k()) {
    throw std::invalid_argument("extremal_disturbance: missing costate");
  }
  const Mat M2 = matrix_exponential(prob.model.K * (prob.T - tau)) * prob.model.L2;
  const Vec q = M2.transpose() * result.p_star;
  return prob.sense == GameSense::reach ? prob.d_ball.extremizer(q)
                                        : prob.d_ball.extremizer(-q);
}

}  // namespace liftreach
