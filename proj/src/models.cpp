#include "liftreach/models.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace liftreach {

using nlohmann::json;

Vec LiftedLinearModel::eval(const Vec& g, const Vec& u, const Vec& d) const {
  check_dim(g, K.rows(), "LiftedLinearModel::eval g");
  check_dim(u, L1.cols(), "LiftedLinearModel::eval u");
  check_dim(d, L2.cols(), "LiftedLinearModel::eval d");
  return K * g + L1 * u + L2 * d;
}

void LiftedLinearModel::validate() const {
  if (K.rows() != K.cols()) throw std::invalid_argument("model: K must be square");
  if (L1.rows() != K.rows() || L2.rows() != K.rows()) {
    throw std::invalid_argument("model: L1/L2 row count must match K");
  }
  if (!K.allFinite() || !L1.allFinite() || !L2.allFinite()) {
    throw NumericalError("model: non-finite entries");
  }
}

namespace {

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Mat matrix_from_json(const json& rows, Eigen::Index cols_hint = -1) {
  const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
  Eigen::Index nc = cols_hint;
  if (nr > 0) nc = static_cast<Eigen::Index>(rows[0].size());
  if (nc < 0) nc = 0;
  Mat m(nr, nc);
  for (Eigen::Index i = 0; i < nr; ++i) {
    for (Eigen::Index j = 0; j < nc; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

}  // namespace

std::string LiftedLinearModel::to_json() const {
  json doc;
  doc["n_k"] = n_k();
  doc["n_u"] = n_u();
  doc["n_d"] = n_d();
  doc["K"] = matrix_to_json(K);
  doc["L1"] = matrix_to_json(L1);
  doc["L2"] = matrix_to_json(L2);
  doc["provenance"] = provenance;
  doc["lift"] = lift_kind;
  return doc.dump(2);
}

LiftedLinearModel LiftedLinearModel::from_json(const std::string& text) {
  json doc = json::parse(text);
  LiftedLinearModel m;
  m.K = matrix_from_json(doc.at("K"));
  m.L1 = matrix_from_json(doc.at("L1"), doc.at("n_u").get<int>());
  m.L2 = matrix_from_json(doc.at("L2"), doc.at("n_d").get<int>());
  if (m.L1.rows() == 0) m.L1.resize(m.K.rows(), doc.at("n_u").get<int>());
  if (m.L2.rows() == 0) m.L2.resize(m.K.rows(), doc.at("n_d").get<int>());
  m.provenance = doc.at("provenance").get<std::string>();
  m.lift_kind = doc.at("lift").get<std::string>();
  m.validate();
  return m;
}

void LiftedLinearModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("model save: cannot open " + path);
  out << to_json() << "\n";
}

LiftedLinearModel LiftedLinearModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("model load: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

TrajectorySample sample_trajectories(const AffineSystem& sys, const Box& box,
                                     const InputBall& u_ball, const InputBall& d_ball,
                                     int n_points, int snippet_steps, double h,
                                     uint64_t seed) {
  if (n_points <= 0) throw std::invalid_argument("sample_trajectories: n_points must be positive");
  if (snippet_steps <= 0) throw std::invalid_argument("sample_trajectories: snippet_steps must be positive");
  TrajectorySample sample;
  sample.seed = seed;
  Rng rng(seed);
  while (static_cast<int>(sample.points.size()) < n_points) {
    Vec x = uniform_in_box(box, rng);
    const Vec u = u_ball.sample(rng);
    const Vec d = d_ball.sample(rng);
    for (int k = 0; k < snippet_steps && static_cast<int>(sample.points.size()) < n_points; ++k) {
      Vec xdot = eval_dynamics(sys, x, u, d);
      sample.points.push_back({x, u, d, xdot});
      // held-input RK4 step
      const Vec k1 = xdot;
      const Vec k2 = eval_dynamics(sys, x + 0.5 * h * k1, u, d);
      const Vec k3 = eval_dynamics(sys, x + 0.5 * h * k2, u, d);
      const Vec k4 = eval_dynamics(sys, x + h * k3, u, d);
      x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!x.allFinite() || !box.expanded(box.diameter()).contains(x)) break;
    }
  }
  return sample;
}

LiftedLinearModel analytic_slow_manifold_model(const Vec& c, double mu, double lambda) {
  check_dim(c, 2, "analytic_slow_manifold_model: c");
  LiftedLinearModel m;
  m.K = Mat::Zero(3, 3);
  m.K(0, 0) = mu;
  m.K(1, 1) = lambda;
  m.K(1, 2) = -lambda;
  m.K(2, 2) = 2.0 * mu;
  Mat L(3, 2);
  L << 1.0, 0.0, 0.0, 1.0, 2.0 * c[0], 0.0;
  m.L1 = L;
  m.L2 = L;
  m.provenance = "analytic";
  m.lift_kind = "slow_manifold";
  return m;
}

LiftedLinearModel fit_edmd(const LiftMap& m, const TrajectorySample& data, double ridge) {
  if (data.points.empty()) throw std::invalid_argument("fit_edmd: empty sample");
  if (ridge < 0) throw std::invalid_argument("fit_edmd: ridge must be nonnegative");
  const int n_k = m.n_k();
  const int n_u = static_cast<int>(data.points.front().u.size());
  const int n_d = static_cast<int>(data.points.front().d.size());
  const int n_reg = n_k + n_u + n_d;
  const Eigen::Index n = static_cast<Eigen::Index>(data.points.size());

  Mat G(n, n_reg);   // stacked regressors [Psi(x); u; d]
  Mat Y(n, n_k);     // lifted derivatives DPsi(x) xdot
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pt = data.points[static_cast<std::size_t>(i)];
    G.row(i).head(n_k) = m.lift(pt.x).transpose();
    G.row(i).segment(n_k, n_u) = pt.u.transpose();
    G.row(i).tail(n_d) = pt.d.transpose();
    Y.row(i) = (m.jacobian(pt.x) * pt.xdot).transpose();
  }

  Mat gram = G.transpose() * G + ridge * Mat::Identity(n_reg, n_reg);
  if (ridge == 0.0) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > hi * 1e-13)) {
      throw SingularFitError(
          "fit_edmd: rank-deficient regressor matrix; supply a positive ridge");
    }
  }
  Eigen::LDLT<Mat> ldlt(gram);
  if (ldlt.info() != Eigen::Success) {
    throw SingularFitError(
        "fit_edmd: rank-deficient regressor matrix; supply a positive ridge");
  }
  Mat W = ldlt.solve(G.transpose() * Y);  // n_reg x n_k

  LiftedLinearModel model;
  model.K = W.topRows(n_k).transpose();
  model.L1 = W.middleRows(n_k, n_u).transpose();
  model.L2 = W.bottomRows(n_d).transpose();
  model.provenance = "edmd(n=" + std::to_string(data.points.size()) +
                     ",seed=" + std::to_string(data.seed) + ")";
  model.lift_kind = m.kind();
  model.validate();
  return model;
}

LiftedLinearModel fit_dmd(const TrajectorySample& data, double ridge) {
  if (data.points.empty()) throw std::invalid_argument("fit_dmd: empty sample");
  const int n_x = static_cast<int>(data.points.front().x.size());
  LiftedLinearModel model = fit_edmd(LiftMap::identity(n_x), data, ridge);
  model.provenance = "dmd(n=" + std::to_string(data.points.size()) +
                     ",seed=" + std::to_string(data.seed) + ")";
  model.lift_kind = "identity";
  return model;
}

LiftedLinearModel taylor_model(const AffineSystem& sys, const LiftMap& m, const Vec& center) {
  check_dim(center, sys.n_x, "taylor_model: center");
  const int n_k = m.n_k();
  auto lifted_drift = [&](const Vec& g) {
    const Vec x = g.head(m.n_x());
    return Vec(m.jacobian(x) * sys.drift(x));
  };
  const Vec g0 = m.lift(center);
  const double fd = 1e-6;
  Mat K(n_k, n_k);
  for (int j = 0; j < n_k; ++j) {
    Vec gp = g0, gm = g0;
    gp[j] += fd;
    gm[j] -= fd;
    K.col(j) = (lifted_drift(gp) - lifted_drift(gm)) / (2 * fd);
  }
  if (!K.allFinite()) throw NumericalError("taylor_model: non-finite Jacobian entries");

  LiftedLinearModel model;
  model.K = K;
  const Mat DPsi = m.jacobian(center);
  model.L1 = DPsi * sys.control_matrix(center);
  model.L2 = DPsi * sys.disturbance_matrix(center);
  model.provenance = "taylor";
  model.lift_kind = m.kind();
  model.validate();
  return model;
}

ResidualStats model_residual(const LiftedLinearModel& model, const LiftMap& m,
                             const AffineSystem& sys,
                             const std::vector<std::array<Vec, 3>>& pts) {
  if (pts.empty()) throw std::invalid_argument("model_residual: empty point list");
  ResidualStats stats;
  stats.count = pts.size();
  double sum = 0.0;
  for (const auto& [x, u, d] : pts) {
    const Vec g = m.lift(x);
    const Vec f_g = m.jacobian(x) * eval_dynamics(sys, x, u, d);
    const double r = (f_g - model.eval(g, u, d)).norm();
    stats.max = std::max(stats.max, r);
    sum += r;
  }
  stats.mean = sum / static_cast<double>(pts.size());
  return stats;
}

}  // namespace liftreach
