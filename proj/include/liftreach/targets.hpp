#pragma once

#include "liftreach/lifting.hpp"

namespace liftreach {

/// Ellipsoidal target {y : (y-c)^T Q (y-c) <= level} with level function
/// J(y) = (y-c)^T Q (y-c) - level (negative inside, zero on the boundary).
class QuadTarget {
 public:
  /// Placeholder 1D unit target; overwrite before use (validate() catches
  /// dimension mismatches downstream).
  QuadTarget() : QuadTarget(Vec::Zero(1), Mat::Identity(1, 1), 1.0) {}
  QuadTarget(Vec center, Mat shape, double level);

  const Vec& center() const { return center_; }
  const Mat& shape() const { return Q_; }
  double level() const { return level_; }
  Eigen::Index dim() const { return center_.size(); }

  double J(const Vec& y) const;
  Vec grad_J(const Vec& y) const;  // 2 Q (y - c)

  /// Fenchel conjugate J*(p) = p.c + (1/4) p^T Q^{-1} p + level.
  double conjugate(const Vec& p) const;
  Vec conjugate_gradient(const Vec& p) const;  // c + (1/2) Q^{-1} p

  /// Axis-aligned bounding box of the sublevel set.
  Box bounding_box() const;

 private:
  Vec center_;
  Mat Q_;
  Mat Q_inv_;
  double level_;
};

double eval_J(const QuadTarget& tgt, const Vec& y);
double conjugate_J(const QuadTarget& tgt, const Vec& p);

/// Compact inner/outer targets in the augmented space for a base target in X.
struct AugTargetPair {
  QuadTarget inner;   // (T_G inner bound: on the manifold, inside => base inside)
  QuadTarget outer;   // (T_G outer bound: on the manifold, base inside => inside)
  QuadTarget base;
  double eta = 0.0;
};

enum class AugTargetMode { reach_inner, avoid_outer };

/// What to do when the sampled inner/outer validity audit finds violations.
enum class TargetValidation { strict, warn, off };

struct AugTargetOptions {
  int audit_samples = 10000;
  uint64_t seed = 20240501;
  TargetValidation validation = TargetValidation::strict;
  double secondary_margin = 0.05;  // slack applied to the auto-leveled partner target
};

struct AugTargetAudit {
  int inner_violations = 0;
  int outer_violations = 0;
  std::vector<Vec> first_violation;  // base point of the first failure, if any
};

/// Builds the augmented target pair over the lift:
///   reach_inner: inner = {(g - Psi(c))^T diag(Q, eta I) (g - Psi(c)) <= level},
///   avoid_outer: outer = {g^T diag(Q, eta I) g <= level}.
/// The partner target reuses the same shape with an auto-computed level that
/// passes the sampled audit. Both directions are audited on lifted samples
/// drawn from a box twice the base target's extent; in strict mode a failed
/// audit throws InvalidTargetError naming the first violating sample.
AugTargetPair make_aug_targets(const QuadTarget& base, const LiftMap& m, double eta,
                               AugTargetMode mode, double level,
                               const AugTargetOptions& opts = {},
                               AugTargetAudit* audit_out = nullptr);

}  // namespace liftreach
