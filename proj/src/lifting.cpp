#include "liftreach/lifting.hpp"

#include <cmath>

namespace liftreach {

LiftMap::LiftMap(int n_x, std::vector<LiftComponent> components, std::string kind)
    : n_x_(n_x), components_(std::move(components)), kind_(std::move(kind)) {
  if (n_x_ <= 0) throw std::invalid_argument("LiftMap: n_x must be positive");
}

LiftMap LiftMap::identity(int n_x) { return LiftMap(n_x, {}, "identity"); }

LiftMap LiftMap::slow_manifold() {
  std::vector<LiftComponent> comps;
  comps.push_back({"x1^2",
                   [](const Vec& x) { return x[0] * x[0]; },
                   [](const Vec& x) {
                     Vec g = Vec::Zero(x.size());
                     g[0] = 2.0 * x[0];
                     return g;
                   }});
  return LiftMap(2, std::move(comps), "slow_manifold");
}

namespace {

// monomials of total degree `deg` over n variables, lexicographic within the grade
void monomials_of_degree(int n, int deg, std::vector<int>& current,
                         std::vector<std::vector<int>>& out) {
  if (static_cast<int>(current.size()) == n - 1) {
    int used = 0;
    for (int e : current) used += e;
    current.push_back(deg - used);
    out.push_back(current);
    current.pop_back();
    return;
  }
  int used = 0;
  for (int e : current) used += e;
  for (int e = deg - used; e >= 0; --e) {
    current.push_back(e);
    monomials_of_degree(n, deg, current, out);
    current.pop_back();
  }
}

std::string monomial_name(const std::vector<int>& exps) {
  std::string s;
  for (std::size_t i = 0; i < exps.size(); ++i) {
    if (exps[i] == 0) continue;
    if (!s.empty()) s += "*";
    s += "x" + std::to_string(i + 1);
    if (exps[i] > 1) s += "^" + std::to_string(exps[i]);
  }
  return s.empty() ? "1" : s;
}

}  // namespace

LiftMap LiftMap::polynomial(int n_x, int degree) {
  if (degree < 2) throw std::invalid_argument("LiftMap::polynomial: degree must be >= 2");
  std::vector<LiftComponent> comps;
  comps.push_back({"1",
                   [](const Vec&) { return 1.0; },
                   [n_x](const Vec&) { return Vec::Zero(n_x); }});
  for (int deg = 2; deg <= degree; ++deg) {
    std::vector<std::vector<int>> exps;
    std::vector<int> scratch;
    monomials_of_degree(n_x, deg, scratch, exps);
    for (const auto& e : exps) {
      comps.push_back(
          {monomial_name(e),
           [e](const Vec& x) {
             double v = 1.0;
             for (std::size_t i = 0; i < e.size(); ++i) v *= std::pow(x[i], e[i]);
             return v;
           },
           [e](const Vec& x) {
             Vec g = Vec::Zero(x.size());
             for (std::size_t i = 0; i < e.size(); ++i) {
               if (e[i] == 0) continue;
               double v = e[i] * std::pow(x[i], e[i] - 1);
               for (std::size_t j = 0; j < e.size(); ++j) {
                 if (j != i) v *= std::pow(x[j], e[j]);
               }
               g[i] = v;
             }
             return g;
           }});
    }
  }
  return LiftMap(n_x, std::move(comps), "polynomial" + std::to_string(degree));
}

LiftMap LiftMap::rbf(int n_x, std::vector<Vec> centers, double width) {
  if (centers.empty()) throw std::invalid_argument("LiftMap::rbf: need at least one center");
  if (!(width > 0)) throw std::invalid_argument("LiftMap::rbf: width must be positive");
  std::vector<LiftComponent> comps;
  const double inv2w2 = 1.0 / (2.0 * width * width);
  for (std::size_t k = 0; k < centers.size(); ++k) {
    Vec c = centers[k];
    check_dim(c, n_x, "LiftMap::rbf center");
    comps.push_back({"rbf" + std::to_string(k + 1),
                     [c, inv2w2](const Vec& x) {
                       return std::exp(-(x - c).squaredNorm() * inv2w2);
                     },
                     [c, inv2w2](const Vec& x) {
                       const double v = std::exp(-(x - c).squaredNorm() * inv2w2);
                       return Vec(-2.0 * inv2w2 * v * (x - c));
                     }});
  }
  return LiftMap(n_x, std::move(comps), "rbf" + std::to_string(centers.size()));
}

LiftMap LiftMap::rbf_on_box(const Box& box, int count) {
  if (count < 1) throw std::invalid_argument("LiftMap::rbf_on_box: count must be positive");
  const int n = static_cast<int>(box.dim());
  std::vector<Vec> centers;
  if (n == 2 && count == 5) {
    // quincunx: corners plus center
    centers.push_back(box.lo);
    centers.push_back(Vec((Vec(2) << box.hi[0], box.lo[1]).finished()));
    centers.push_back(box.center());
    centers.push_back(Vec((Vec(2) << box.lo[0], box.hi[1]).finished()));
    centers.push_back(box.hi);
  } else {
    const int m = static_cast<int>(std::ceil(std::pow(double(count), 1.0 / n)));
    std::vector<int> idx(n, 0);
    const std::size_t total = static_cast<std::size_t>(std::pow(m, n));
    for (std::size_t flat = 0; flat < total && static_cast<int>(centers.size()) < count; ++flat) {
      Vec c(n);
      std::size_t rem = flat;
      for (int i = 0; i < n; ++i) {
        const int k = static_cast<int>(rem % m);
        rem /= m;
        c[i] = m == 1 ? box.center()[i]
                      : box.lo[i] + (box.hi[i] - box.lo[i]) * k / (m - 1);
      }
      centers.push_back(c);
    }
  }
  // width = mean nearest-center spacing
  double mean_nn = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    double nn = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centers.size(); ++j) {
      if (i == j) continue;
      nn = std::min(nn, (centers[i] - centers[j]).norm());
    }
    mean_nn += std::isfinite(nn) ? nn : box.diameter();
  }
  mean_nn /= static_cast<double>(centers.size());
  if (mean_nn == 0.0) mean_nn = std::max(1.0, box.diameter());
  return rbf(n, std::move(centers), mean_nn);
}

Vec LiftMap::lift(const Vec& x) const {
  check_dim(x, n_x_, "LiftMap::lift");
  Vec g(n_k());
  g.head(n_x_) = x;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const double v = components_[i].value(x);
    if (!std::isfinite(v)) {
      throw EvaluationError("LiftMap::lift: component " + components_[i].name +
                            " (psi_" + std::to_string(i + 1) + ") returned non-finite value");
    }
    g[n_x_ + static_cast<Eigen::Index>(i)] = v;
  }
  return g;
}

Vec LiftMap::project(const Vec& g) const {
  check_dim(g, n_k(), "LiftMap::project");
  return g.head(n_x_);
}

Mat LiftMap::jacobian(const Vec& x) const {
  check_dim(x, n_x_, "LiftMap::jacobian");
  Mat J = Mat::Zero(n_k(), n_x_);
  J.topLeftCorner(n_x_, n_x_).setIdentity();
  for (std::size_t i = 0; i < components_.size(); ++i) {
    Vec grad = components_[i].gradient(x);
    if (!grad.allFinite()) {
      throw EvaluationError("LiftMap::jacobian: gradient of " + components_[i].name +
                            " (psi_" + std::to_string(i + 1) + ") is non-finite");
    }
    J.row(n_x_ + static_cast<Eigen::Index>(i)) = grad.transpose();
  }
  return J;
}

bool LiftMap::is_on_manifold(const Vec& g, double tol) const {
  check_dim(g, n_k(), "LiftMap::is_on_manifold");
  const Vec err = g - lift(project(g));
  return err.lpNorm<Eigen::Infinity>() <= tol;
}

AffineSystem lifted_dynamics(const LiftMap& m, const AffineSystem& sys) {
  if (m.n_x() != sys.n_x) {
    throw std::invalid_argument("lifted_dynamics: lift/system dimension mismatch");
  }
  AffineSystem lifted;
  lifted.n_x = m.n_k();
  lifted.n_u = sys.n_u;
  lifted.n_d = sys.n_d;
  lifted.drift = [m, drift = sys.drift](const Vec& g) {
    const Vec x = g.head(m.n_x());
    return Vec(m.jacobian(x) * drift(x));
  };
  lifted.control_matrix = [m, h1 = sys.control_matrix](const Vec& g) {
    const Vec x = g.head(m.n_x());
    return Mat(m.jacobian(x) * h1(x));
  };
  lifted.disturbance_matrix = [m, h2 = sys.disturbance_matrix](const Vec& g) {
    const Vec x = g.head(m.n_x());
    return Mat(m.jacobian(x) * h2(x));
  };
  return lifted;
}

ManifoldGrid ManifoldGrid::from_points(const LiftMap& m, std::vector<Vec> points) {
  ManifoldGrid grid;
  grid.base_points = std::move(points);
  grid.lifted_points.reserve(grid.base_points.size());
  for (const Vec& x : grid.base_points) grid.lifted_points.push_back(m.lift(x));
  return grid;
}

}  // namespace liftreach
