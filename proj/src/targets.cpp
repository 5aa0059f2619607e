#include "liftreach/targets.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace liftreach {

QuadTarget::QuadTarget(Vec center, Mat shape, double level)
    : center_(std::move(center)), Q_(std::move(shape)), level_(level) {
  if (Q_.rows() != Q_.cols() || Q_.rows() != center_.size()) {
    throw std::invalid_argument("QuadTarget: shape/center dimension mismatch");
  }
  if ((Q_ - Q_.transpose()).lpNorm<Eigen::Infinity>() > 1e-12) {
    throw std::invalid_argument("QuadTarget: shape matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(Q_);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("QuadTarget: shape matrix must be positive definite");
  }
  if (!(level_ > 0.0)) {
    throw std::invalid_argument("QuadTarget: level must be positive");
  }
  Q_inv_ = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
           eig.eigenvectors().transpose();
}

double QuadTarget::J(const Vec& y) const {
  check_dim(y, dim(), "QuadTarget::J");
  const Vec r = y - center_;
  return r.dot(Q_ * r) - level_;
}

Vec QuadTarget::grad_J(const Vec& y) const {
  check_dim(y, dim(), "QuadTarget::grad_J");
  return 2.0 * (Q_ * (y - center_));
}

double QuadTarget::conjugate(const Vec& p) const {
  check_dim(p, dim(), "QuadTarget::conjugate");
  return p.dot(center_) + 0.25 * p.dot(Q_inv_ * p) + level_;
}

Vec QuadTarget::conjugate_gradient(const Vec& p) const {
  check_dim(p, dim(), "QuadTarget::conjugate_gradient");
  return center_ + 0.5 * (Q_inv_ * p);
}

Box QuadTarget::bounding_box() const {
  Vec half(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) {
    half[i] = std::sqrt(level_ * Q_inv_(i, i));
  }
  return Box(center_ - half, center_ + half);
}

double eval_J(const QuadTarget& tgt, const Vec& y) { return tgt.J(y); }
double conjugate_J(const QuadTarget& tgt, const Vec& p) { return tgt.conjugate(p); }

namespace {

Mat block_diag_shape(const Mat& Q_base, double eta, int n_aug) {
  const int n = static_cast<int>(Q_base.rows());
  Mat Q = Mat::Zero(n + n_aug, n + n_aug);
  Q.topLeftCorner(n, n) = Q_base;
  Q.bottomRightCorner(n_aug, n_aug) = eta * Mat::Identity(n_aug, n_aug);
  return Q;
}

}  // namespace

AugTargetPair make_aug_targets(const QuadTarget& base, const LiftMap& m, double eta,
                               AugTargetMode mode, double level,
                               const AugTargetOptions& opts, AugTargetAudit* audit_out) {
  if (!(eta > 0.0)) throw std::invalid_argument("make_aug_targets: eta must be positive");
  if (!(level > 0.0)) throw std::invalid_argument("make_aug_targets: level must be positive");
  if (base.dim() != m.n_x()) {
    throw std::invalid_argument("make_aug_targets: base target/lift dimension mismatch");
  }
  const int n_aug = m.n_k() - m.n_x();
  const Mat Q_g = block_diag_shape(base.shape(), eta, n_aug);
  const Vec center_g = mode == AugTargetMode::reach_inner
                           ? m.lift(base.center())
                           : Vec(Vec::Zero(m.n_k()));

  // audit samples: base box scaled by two, lifted to the manifold
  Box audit_box = base.bounding_box();
  audit_box = Box(base.center() - 2.0 * (base.center() - audit_box.lo),
                  base.center() + 2.0 * (audit_box.hi - base.center()));
  Rng rng(opts.seed);
  std::vector<Vec> xs(static_cast<std::size_t>(opts.audit_samples));
  for (auto& x : xs) x = uniform_in_box(audit_box, rng);

  auto quad_g = [&](const Vec& g) {
    const Vec r = g - center_g;
    return r.dot(Q_g * r);
  };

  // auto-level the partner target so the pair carries both bounds
  double max_inside = 0.0;   // max quadratic form over lifted target samples
  double min_outside = std::numeric_limits<double>::infinity();
  for (const Vec& x : xs) {
    const double q = quad_g(m.lift(x));
    if (base.J(x) <= 0.0) max_inside = std::max(max_inside, q);
    else min_outside = std::min(min_outside, q);
  }
  // target center itself is inside
  max_inside = std::max(max_inside, quad_g(m.lift(base.center())));

  double inner_level, outer_level;
  if (mode == AugTargetMode::reach_inner) {
    inner_level = level;
    outer_level = std::max(level, (1.0 + opts.secondary_margin) * max_inside);
  } else {
    outer_level = level;
    inner_level = std::isfinite(min_outside)
                      ? std::min(level, (1.0 - opts.secondary_margin) * min_outside)
                      : level;
    if (!(inner_level > 0.0)) inner_level = std::min(level, 1e-6);
  }

  AugTargetPair pair{QuadTarget(center_g, Q_g, inner_level),
                     QuadTarget(center_g, Q_g, outer_level), base, eta};

  AugTargetAudit audit;
  for (const Vec& x : xs) {
    const Vec g = m.lift(x);
    const bool in_base = base.J(x) <= 0.0;
    if (pair.inner.J(g) <= 0.0 && !in_base) {
      ++audit.inner_violations;
      if (audit.first_violation.empty()) audit.first_violation.push_back(x);
    }
    if (in_base && pair.outer.J(g) > 0.0) {
      ++audit.outer_violations;
      if (audit.first_violation.empty()) audit.first_violation.push_back(x);
    }
  }
  if (audit_out) *audit_out = audit;

  if (opts.validation == TargetValidation::strict &&
      (audit.inner_violations > 0 || audit.outer_violations > 0)) {
    std::ostringstream msg;
    msg << "make_aug_targets: sampled validity failed (inner " << audit.inner_violations
        << ", outer " << audit.outer_violations << " of " << opts.audit_samples
        << " samples)";
    if (!audit.first_violation.empty()) {
      msg << "; first violating sample x = [";
      const Vec& x = audit.first_violation.front();
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        msg << (i ? ", " : "") << format_double(x[i]);
      }
      msg << "]";
    }
    throw InvalidTargetError(msg.str());
  }
  return pair;
}

}  // namespace liftreach
