#include "liftreach/systems.hpp"

#include <cmath>

namespace liftreach {

InputBall::InputBall(int dim_, double radius_, Norm norm_)
    : dim(dim_), radius(radius_), norm(norm_) {
  if (dim <= 0) throw std::invalid_argument("InputBall: dim must be positive");
  if (radius < 0) throw std::invalid_argument("InputBall: radius must be nonnegative");
}

bool InputBall::contains(const Vec& v, double tol) const {
  check_dim(v, dim, "InputBall::contains");
  const double n = norm == Norm::euclidean ? v.norm() : v.lpNorm<Eigen::Infinity>();
  return n <= radius + tol;
}

double InputBall::support(const Vec& q) const {
  check_dim(q, dim, "InputBall::support");
  return norm == Norm::euclidean ? radius * q.norm() : radius * q.lpNorm<1>();
}

Vec InputBall::extremizer(const Vec& q) const {
  check_dim(q, dim, "InputBall::extremizer");
  if (norm == Norm::euclidean) {
    const double n = q.norm();
    if (n == 0.0) return Vec::Zero(dim);
    return (radius / n) * q;
  }
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = q[i] >= 0 ? radius : -radius;
  return v;
}

Vec InputBall::project(const Vec& v) const {
  check_dim(v, dim, "InputBall::project");
  if (norm == Norm::euclidean) {
    const double n = v.norm();
    if (n <= radius || n == 0.0) return v;
    return (radius / n) * v;
  }
  return v.cwiseMax(-radius).cwiseMin(radius);
}

Vec InputBall::sample(Rng& rng) const {
  if (radius == 0.0) return Vec::Zero(dim);
  if (norm == Norm::box) {
    std::uniform_real_distribution<double> dist(-radius, radius);
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = dist(rng);
    return v;
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec dir(dim);
  do {
    for (int i = 0; i < dim; ++i) dir[i] = gauss(rng);
  } while (dir.norm() == 0.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r = radius * std::pow(unif(rng), 1.0 / dim);
  return (r / dir.norm()) * dir;
}

Vec eval_dynamics(const AffineSystem& sys, const Vec& x, const Vec& u, const Vec& d) {
  check_dim(x, sys.n_x, "eval_dynamics: x");
  check_dim(u, sys.n_u, "eval_dynamics: u");
  check_dim(d, sys.n_d, "eval_dynamics: d");
  Vec f = sys.drift(x);
  if (sys.n_u > 0) f += sys.control_matrix(x) * u;
  if (sys.n_d > 0) f += sys.disturbance_matrix(x) * d;
  return f;
}

Trajectory::Trajectory(std::vector<double> times_, std::vector<Vec> states_)
    : times(std::move(times_)), states(std::move(states_)) {
  if (times.size() != states.size()) {
    throw std::invalid_argument("Trajectory: times/states length mismatch");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw std::invalid_argument("Trajectory: times must be strictly increasing");
    }
  }
}

namespace {

Vec rk4_step(const AffineSystem& sys, const Vec& x, const Signal& u_sig,
             const Signal& d_sig, double t, double h) {
  const Vec k1 = eval_dynamics(sys, x, u_sig(t), d_sig(t));
  const Vec k2 = eval_dynamics(sys, x + 0.5 * h * k1, u_sig(t + 0.5 * h), d_sig(t + 0.5 * h));
  const Vec k3 = eval_dynamics(sys, x + 0.5 * h * k2, u_sig(t + 0.5 * h), d_sig(t + 0.5 * h));
  const Vec k4 = eval_dynamics(sys, x + h * k3, u_sig(t + h), d_sig(t + h));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Trajectory integrate(const AffineSystem& sys, const Vec& x0, const Signal& u_sig,
                     const Signal& d_sig, double t, double T, double h) {
  if (!(h > 0)) throw std::invalid_argument("integrate: step h must be positive");
  if (!(t < T)) throw std::invalid_argument("integrate: need t < T");
  check_dim(x0, sys.n_x, "integrate: x0");

  Trajectory traj;
  traj.times.push_back(t);
  traj.states.push_back(x0);
  double tau = t;
  Vec x = x0;
  while (tau < T - 1e-15 * std::max(1.0, std::abs(T))) {
    const double step = std::min(h, T - tau);
    traj.controls.push_back(u_sig(tau));
    traj.disturbances.push_back(d_sig(tau));
    x = rk4_step(sys, x, u_sig, d_sig, tau, step);
    tau = (step == h) ? tau + h : T;
    if (!x.allFinite()) {
      throw DivergenceError("integrate: non-finite state at time " + format_double(tau));
    }
    traj.times.push_back(tau);
    traj.states.push_back(x);
  }
  return traj;
}

Signal zero_signal(int dim) {
  Vec z = Vec::Zero(dim);
  return [z](double) { return z; };
}

Signal constant_signal(Vec value) {
  return [v = std::move(value)](double) { return v; };
}

Signal zoh_signal(std::vector<double> times, std::vector<Vec> values) {
  if (times.size() != values.size() || times.empty()) {
    throw std::invalid_argument("zoh_signal: need matching nonempty times/values");
  }
  return [t = std::move(times), v = std::move(values)](double tau) {
    // last sample whose time is <= tau
    std::size_t lo = 0;
    if (tau >= t.front()) {
      std::size_t hi = t.size();
      while (lo + 1 < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (t[mid] <= tau) lo = mid;
        else hi = mid;
      }
    }
    return v[lo];
  };
}

DemoSystem make_demo_system(const std::string& name,
                            const std::map<std::string, double>& params) {
  auto get = [&params](const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };

  if (name == "slow_manifold") {
    const double mu = get("mu", -0.05);
    const double lambda = get("lambda", -1.0);
    AffineSystem sys;
    sys.n_x = 2;
    sys.n_u = 2;
    sys.n_d = 2;
    sys.drift = [mu, lambda](const Vec& x) {
      Vec f(2);
      f << mu * x[0], lambda * (x[1] - x[0] * x[0]);
      return f;
    };
    sys.control_matrix = [](const Vec&) { return Mat::Identity(2, 2); };
    sys.disturbance_matrix = [](const Vec&) { return Mat::Identity(2, 2); };
    DemoSystem demo{std::move(sys),
                    InputBall(2, get("u_radius", 0.5)),
                    InputBall(2, get("d_radius", 0.25))};
    Box box{Vec::Constant(2, -3.0), Vec::Constant(2, 3.0)};
    demo.sys.lipschitz_bound = estimate_lipschitz(demo.sys, box, demo.u_ball, demo.d_ball);
    demo.sys.lipschitz_box = box;
    return demo;
  }

  if (name == "vanderpol") {
    const double mu = get("mu", 1.0);
    AffineSystem sys;
    sys.n_x = 2;
    sys.n_u = 1;
    sys.n_d = 1;
    sys.drift = [mu](const Vec& x) {
      Vec f(2);
      f << x[1], mu * (1.0 - x[0] * x[0]) * x[1] - x[0];
      return f;
    };
    sys.control_matrix = [](const Vec&) {
      Mat h1(2, 1);
      h1 << 0.0, 1.0;
      return h1;
    };
    sys.disturbance_matrix = [](const Vec&) { return Mat::Zero(2, 1); };
    DemoSystem demo{std::move(sys),
                    InputBall(1, get("u_radius", 0.5)),
                    InputBall(1, get("d_radius", 0.0))};
    Box box{Vec::Constant(2, -4.0), Vec::Constant(2, 4.0)};
    demo.sys.lipschitz_bound = estimate_lipschitz(demo.sys, box, demo.u_ball, demo.d_ball);
    demo.sys.lipschitz_box = box;
    return demo;
  }

  throw NotFoundError("make_demo_system: unknown name '" + name +
                      "'; valid names: slow_manifold, vanderpol");
}

double estimate_lipschitz(const AffineSystem& sys, const Box& box,
                          const InputBall& u_ball, const InputBall& d_ball,
                          int samples_per_dim) {
  if (samples_per_dim < 2) throw std::invalid_argument("estimate_lipschitz: need >= 2 samples per dim");
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
  double max_norm = 0.0;
  std::vector<int> idx(n, 0);
  const std::size_t total = static_cast<std::size_t>(std::pow(samples_per_dim, n));
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec x(n);
    std::size_t rem = flat;
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>(rem % samples_per_dim);
      rem /= samples_per_dim;
      x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * k / (samples_per_dim - 1);
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
        max_norm = std::max(max_norm, J.operatorNorm());
      }
    }
  }
  return 1.5 * max_norm;
}

}  // namespace liftreach
