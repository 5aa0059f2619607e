#pragma once

#include "liftreach/systems.hpp"

namespace liftreach {

/// One augmented coordinate: scalar value and its gradient in x.
struct LiftComponent {
  std::string name;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

/// State-inclusive lifting function
///   Psi(x) = [x; psi_1(x); ...; psi_{n_k - n_x}(x)],
/// so the projection P = [I 0] satisfies P Psi(x) = x by construction.
/// The identity lift (no components) is allowed for non-augmented baselines.
class LiftMap {
 public:
  LiftMap(int n_x, std::vector<LiftComponent> components, std::string kind);

  static LiftMap identity(int n_x);
  /// The [x1, x2, x1^2] lift of the slow-manifold benchmark.
  static LiftMap slow_manifold();
  /// Constant observable plus all monomials of total degree 2..degree in
  /// graded lexicographic order. For 2D states this gives n_k = 10 (degree 3)
  /// and n_k = 15 (degree 4), the counts of the full polynomial basis.
  static LiftMap polynomial(int n_x, int degree);
  /// Gaussian kernels exp(-|x - c|^2 / (2 w^2)) at the given centers.
  static LiftMap rbf(int n_x, std::vector<Vec> centers, double width);
  /// Centers on a near-square uniform grid over the box (count 5 is placed as
  /// four corners plus center); width = mean nearest-center spacing.
  static LiftMap rbf_on_box(const Box& box, int count);

  int n_x() const { return n_x_; }
  int n_k() const { return n_x_ + static_cast<int>(components_.size()); }
  const std::string& kind() const { return kind_; }
  const std::vector<LiftComponent>& components() const { return components_; }

  /// Psi(x); throws EvaluationError naming the failing component.
  Vec lift(const Vec& x) const;
  /// n_k x n_x Jacobian; top block is exactly the identity.
  Vec project(const Vec& g) const;
  Mat jacobian(const Vec& x) const;
  /// True iff |g - Psi(P g)|_inf <= tol.
  bool is_on_manifold(const Vec& g, double tol = 1e-6) const;

 private:
  int n_x_;
  std::vector<LiftComponent> components_;
  std::string kind_;
};

/// Lifted nonlinear dynamics f_G(g,u,d) = DPsi(P g) f(P g,u,d), exposed as an
/// affine system over the augmented space (reads only P g, so it is defined
/// for every g).
AffineSystem lifted_dynamics(const LiftMap& m, const AffineSystem& sys);

/// Base points paired with their lifted images.
struct ManifoldGrid {
  std::vector<Vec> base_points;
  std::vector<Vec> lifted_points;

  static ManifoldGrid from_points(const LiftMap& m, std::vector<Vec> points);
};

}  // namespace liftreach
