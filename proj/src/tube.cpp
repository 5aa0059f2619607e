#include "liftreach/tube.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace liftreach {

Box BoxTube::union_box() const {
  if (boxes.empty()) throw std::invalid_argument("BoxTube: empty tube");
  Box u = boxes.front();
  for (std::size_t i = 1; i < boxes.size(); ++i) u = u.hull(boxes[i]);
  return u;
}

const Box& BoxTube::box_at(double tau) const {
  if (boxes.empty()) throw std::invalid_argument("BoxTube: empty tube");
  std::size_t best = 0;
  double dist = std::abs(times[0] - tau);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double d = std::abs(times[i] - tau);
    if (d < dist) {
      dist = d;
      best = i;
    }
  }
  return boxes[best];
}

namespace {

struct Interval {
  Vec lo, hi;
};

// Elementwise Jacobian bounds max |df_i/dx_j| over the box and the input
// balls (sampled, 1.5 safety factor), plus the spectral bound for the step
// growth factor. The elementwise form keeps slow coordinates from inheriting
// slack from fast ones.
struct LipschitzData {
  Mat entries;
  double spectral = 0.0;
};

LipschitzData lipschitz_bounds(const AffineSystem& sys, const Box& box,
                               const InputBall& u_ball, const InputBall& d_ball,
                               int samples_per_dim) {
  const int n = sys.n_x;
  std::vector<Vec> inputs_u{Vec::Zero(sys.n_u)};
  std::vector<Vec> inputs_d{Vec::Zero(sys.n_d)};
  for (int i = 0; i < sys.n_u; ++i) {
    Vec e = Vec::Zero(sys.n_u);
    e[i] = 1.0;
    inputs_u.push_back(u_ball.extremizer(e));
    inputs_u.push_back(u_ball.extremizer(-e));
  }
  for (int i = 0; i < sys.n_d; ++i) {
    Vec e = Vec::Zero(sys.n_d);
    e[i] = 1.0;
    inputs_d.push_back(d_ball.extremizer(e));
    inputs_d.push_back(d_ball.extremizer(-e));
  }
  const double fd = 1e-6;
  LipschitzData out{Mat::Zero(n, n), 0.0};
  const int m = std::max(2, samples_per_dim);
  const std::size_t total = static_cast<std::size_t>(std::pow(m, n));
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec x(n);
    std::size_t rem = flat;
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>(rem % m);
      rem /= m;
      x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * k / (m - 1);
    }
    for (const Vec& u : inputs_u) {
      for (const Vec& d : inputs_d) {
        Mat J(n, n);
        for (int i = 0; i < n; ++i) {
          Vec xp = x, xm = x;
          xp[i] += fd;
          xm[i] -= fd;
          J.col(i) = (eval_dynamics(sys, xp, u, d) - eval_dynamics(sys, xm, u, d)) / (2 * fd);
        }
        out.entries = out.entries.cwiseMax(J.cwiseAbs());
        out.spectral = std::max(out.spectral, J.operatorNorm());
      }
    }
  }
  out.entries *= 1.5;
  out.spectral *= 1.5;
  return out;
}

// Guaranteed per-coordinate enclosure of f over box x U x D: hull of sampled
// values (inputs extremized per coordinate through the affine structure),
// inflated by the elementwise Jacobian bounds times the per-axis half-cell
// widths of the sample grid.
Interval image_bound(const AffineSystem& sys, const Box& box, const InputBall& u_ball,
                     const InputBall& d_ball, const Mat& lipschitz_entries,
                     int samples_per_dim) {
  const int n = sys.n_x;
  Interval out{Vec::Constant(n, std::numeric_limits<double>::infinity()),
               Vec::Constant(n, -std::numeric_limits<double>::infinity())};
  const int m = std::max(2, samples_per_dim);
  const std::size_t total = static_cast<std::size_t>(std::pow(m, n));
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec x(n);
    std::size_t rem = flat;
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>(rem % m);
      rem /= m;
      x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * k / (m - 1);
    }
    const Vec f0 = sys.drift(x);
    const Mat h1 = sys.control_matrix(x);
    const Mat h2 = sys.disturbance_matrix(x);
    for (int i = 0; i < n; ++i) {
      const double spread = u_ball.support(h1.row(i).transpose()) +
                            d_ball.support(h2.row(i).transpose());
      out.lo[i] = std::min(out.lo[i], f0[i] - spread);
      out.hi[i] = std::max(out.hi[i], f0[i] + spread);
    }
  }
  const Vec halfcell = 0.5 * box.widths() / double(m - 1);
  const Vec bloat = lipschitz_entries * halfcell;
  out.lo -= bloat;
  out.hi += bloat;
  return out;
}

}  // namespace

BoxTube backward_tube(const AffineSystem& sys, const InputBall& u_ball,
                      const InputBall& d_ball, const Box& target_box, double t,
                      double T, const TubeOptions& opts) {
  if (!(opts.h > 0)) throw std::invalid_argument("backward_tube: h must be positive");
  if (!(t < T)) throw std::invalid_argument("backward_tube: need t < T");
  if (target_box.dim() != sys.n_x) {
    throw std::invalid_argument("backward_tube: target box dimension mismatch");
  }

  BoxTube tube;
  tube.method = opts.domain ? "interval-euler+picard (domain-clamped)"
                            : "interval-euler+picard";
  Box box = opts.domain ? target_box.intersected(*opts.domain) : target_box;
  double tau = T;
  tube.times.push_back(tau);
  tube.boxes.push_back(box);

  Box lip_box = box;
  LipschitzData lip = lipschitz_bounds(sys, lip_box, u_ball, d_ball, 5);
  auto refresh_lipschitz = [&](const Box& needed) {
    if (!lip_box.contains(needed)) {
      lip_box = lip_box.hull(needed.expanded(Vec(0.25 * needed.widths())));
      lip = lipschitz_bounds(sys, lip_box, u_ball, d_ball, 5);
    }
  };

  while (tau > t + 1e-12) {
    const double h = std::min(opts.h, tau - t);

    // a-priori enclosure of the step trajectories (Picard-validated)
    Interval f_here =
        image_bound(sys, box, u_ball, d_ball, lip.entries, opts.image_samples_per_dim);
    Vec radius(sys.n_x);
    for (int i = 0; i < sys.n_x; ++i) {
      radius[i] = 1.001 * h * std::max(std::abs(f_here.lo[i]), std::abs(f_here.hi[i])) *
                      std::exp(lip.spectral * h) +
                  1e-12;
    }
    Interval f_enc;
    bool validated = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Box enclosure = box.expanded(radius);
      if (opts.domain) enclosure = enclosure.intersected(opts.domain->expanded(radius.maxCoeff()));
      refresh_lipschitz(enclosure);
      f_enc = image_bound(sys, enclosure, u_ball, d_ball, lip.entries,
                          opts.image_samples_per_dim);
      if (!f_enc.lo.allFinite() || !f_enc.hi.allFinite()) {
        throw BlowUpError("backward_tube: field bound overflowed at time " +
                          format_double(tau));
      }
      validated = true;
      for (int i = 0; i < sys.n_x; ++i) {
        const double need = h * std::max(std::abs(f_enc.lo[i]), std::abs(f_enc.hi[i]));
        if (need > radius[i]) {
          validated = false;
          radius[i] = 2.0 * need + 1e-12;
        }
      }
      if (validated) break;
    }
    if (!validated) {
      throw BlowUpError("backward_tube: step enclosure failed to validate at time " +
                        format_double(tau));
    }

    // backward Euler step: x(tau - h) in box - h * f(enclosure)
    Vec lo = box.lo - h * f_enc.hi;
    Vec hi = box.hi - h * f_enc.lo;
    if (!lo.allFinite() || !hi.allFinite()) {
      throw BlowUpError("backward_tube: box overflowed at time " + format_double(tau));
    }
    box = Box(lo, hi);
    if (opts.domain) box = box.intersected(*opts.domain);
    tau -= h;
    if (box.diameter() > opts.diameter_cap) {
      throw BlowUpError("backward_tube: box diameter " + format_double(box.diameter()) +
                        " exceeds cap at time " + format_double(tau));
    }
    tube.times.push_back(tau);
    tube.boxes.push_back(box);
  }
  return tube;
}

ErrorBound error_bound_delta(const LiftedLinearModel& model, const LiftMap& m,
                             const AffineSystem& sys, const InputBall& u_ball,
                             const InputBall& d_ball, const BoxTube& tube,
                             int grid_per_dim, double inflation) {
  if (tube.boxes.empty()) throw std::invalid_argument("error_bound_delta: empty tube");
  if (grid_per_dim < 2) throw std::invalid_argument("error_bound_delta: grid_per_dim must be >= 2");
  if (inflation < 0) throw std::invalid_argument("error_bound_delta: inflation must be nonnegative");

  ErrorBound bound;
  bound.grid_per_dim = grid_per_dim;
  bound.inflation = inflation;
  bound.box = tube.union_box();

  // circumscribed Euclidean radius of each input ball
  auto l2_radius = [](const InputBall& b) {
    return b.norm == InputBall::Norm::euclidean ? b.radius
                                                : b.radius * std::sqrt(double(b.dim));
  };
  const double r_u = l2_radius(u_ball);
  const double r_d = l2_radius(d_ball);

  const int n = sys.n_x;
  const std::size_t total = static_cast<std::size_t>(std::pow(grid_per_dim, n));
  bound.diagnostics.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec x(n);
    std::size_t rem = flat;
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>(rem % grid_per_dim);
      rem /= grid_per_dim;
      x[i] = bound.box.lo[i] + (bound.box.hi[i] - bound.box.lo[i]) * k / (grid_per_dim - 1);
    }
    const Vec g = m.lift(x);
    const Mat DPsi = m.jacobian(x);
    const Vec a = DPsi * sys.drift(x) - model.K * g;
    const Mat B1 = DPsi * sys.control_matrix(x) - model.L1;
    const Mat B2 = DPsi * sys.disturbance_matrix(x) - model.L2;
    double b = a.norm();
    if (r_u > 0) b += r_u * B1.jacobiSvd().singularValues()(0);
    if (r_d > 0) b += r_d * B2.jacobiSvd().singularValues()(0);
    bound.diagnostics.push_back({x, b});
    bound.pre_inflation = std::max(bound.pre_inflation, b);
  }
  bound.delta_star = bound.pre_inflation * (1.0 + inflation);
  if (!std::isfinite(bound.delta_star)) {
    throw NumericalError("error_bound_delta: non-finite bound");
  }
  return bound;
}

}  // namespace liftreach
