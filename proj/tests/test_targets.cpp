#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "liftreach/targets.hpp"

#include <cmath>

using namespace liftreach;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

QuadTarget unit_ball(int n) { return QuadTarget(Vec::Zero(n), Mat::Identity(n, n), 1.0); }

QuadTarget paper_reach_target() {
  return QuadTarget(v2(0, 1.25), Mat::Identity(2, 2), 1.0);
}

// brute-force conjugate sup_y p.y - J(y) over a grid
double conjugate_by_grid(const QuadTarget& tgt, const Vec& p, double extent, int n) {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Vec y = v2(-extent + 2 * extent * i / (n - 1.0), -extent + 2 * extent * j / (n - 1.0));
      best = std::max(best, p.dot(y) - tgt.J(y));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("level function values") {
  CHECK(unit_ball(2).J(Vec::Zero(2)) == doctest::Approx(-1.0));
  CHECK(paper_reach_target().J(v2(0, 2.25)) == doctest::Approx(0.0));
  CHECK(unit_ball(2).J(v2(2, 0)) == doctest::Approx(3.0));
}

TEST_CASE("QuadTarget validates its shape matrix") {
  Mat asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(QuadTarget(Vec::Zero(2), asym, 1.0), std::invalid_argument);
  Mat indef(2, 2);
  indef << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(QuadTarget(Vec::Zero(2), indef, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(QuadTarget(Vec::Zero(2), Mat::Identity(2, 2), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(QuadTarget(Vec::Zero(2), Mat::Identity(2, 2), -1.0), std::invalid_argument);
}

TEST_CASE("conjugate closed form") {
  const QuadTarget ball = unit_ball(2);
  CHECK(ball.conjugate(Vec::Zero(2)) == doctest::Approx(1.0));
  CHECK(ball.conjugate(v2(2, 0)) == doctest::Approx(2.0));

  // translation rule: conjugate of the shifted target
  const QuadTarget shifted = paper_reach_target();
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const Vec p = v2(std::normal_distribution<>()(rng), std::normal_distribution<>()(rng));
    CHECK(shifted.conjugate(p) ==
          doctest::Approx(p.dot(shifted.center()) + ball.conjugate(p)).epsilon(1e-12));
  }
}

TEST_CASE("conjugate matches grid maximization") {
  const QuadTarget tgt(v2(0.3, -0.2), (Mat(2, 2) << 2.0, 0.3, 0.3, 1.0).finished(), 1.5);
  Rng rng(9);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < 5; ++i) {
    const Vec p = v2(gauss(rng), gauss(rng));
    const double closed = tgt.conjugate(p);
    const double grid = conjugate_by_grid(tgt, p, 6.0, 601);
    CHECK(std::abs(closed - grid) < 1e-3);
  }
}

TEST_CASE("biconjugation returns the original level function") {
  const QuadTarget tgt = paper_reach_target();
  // J**(y) = sup_p p.y - J*(p), the sup over a costate grid
  auto biconj = [&](const Vec& y) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 801; ++i) {
      for (int j = 0; j < 801; ++j) {
        const Vec p = v2(-12.0 + 24.0 * i / 800.0, -12.0 + 24.0 * j / 800.0);
        best = std::max(best, p.dot(y) - tgt.conjugate(p));
      }
    }
    return best;
  };
  for (const Vec& y : {v2(0.1, 1.0), v2(-0.7, 2.0)}) {
    CHECK(std::abs(biconj(y) - tgt.J(y)) < 1e-3);
  }
}

TEST_CASE("augmented reach target accepts the benchmark settings") {
  const LiftMap m = LiftMap::slow_manifold();
  AugTargetAudit audit;
  const AugTargetPair pair = make_aug_targets(paper_reach_target(), m, 1.0 / 15.0,
                                              AugTargetMode::reach_inner, 1.0, {}, &audit);
  CHECK(audit.inner_violations == 0);
  CHECK(audit.outer_violations == 0);
  CHECK(pair.inner.dim() == 3);
  CHECK(pair.inner.shape()(2, 2) == doctest::Approx(1.0 / 15.0));
  CHECK(pair.inner.center()[1] == doctest::Approx(1.25));

  // projection audit: inner membership on the manifold implies base membership
  Rng rng(31);
  const Box box{v2(-2, -0.75), v2(2, 3.25)};
  int checked = 0;
  for (int i = 0; i < 2000 && checked < 200; ++i) {
    const Vec x = uniform_in_box(box, rng);
    const Vec g = m.lift(x);
    if (pair.inner.J(g) <= 0.0) {
      CHECK(paper_reach_target().J(x) <= 0.0);
      ++checked;
    }
  }
  CHECK(checked >= 200);
}

TEST_CASE("avoid-outer literal settings fail the sampled audit on a polynomial lift") {
  // At x = (1, 0) the lifted coordinates are order one, so the eta = 10
  // outer level 10/9 cannot cover the lifted target boundary; the sampled
  // audit must reject in strict mode and report in warn mode.
  const LiftMap m = LiftMap::polynomial(2, 3);
  const QuadTarget base = unit_ball(2);
  CHECK_THROWS_AS(
      make_aug_targets(base, m, 10.0, AugTargetMode::avoid_outer, 10.0 / 9.0),
      InvalidTargetError);

  AugTargetOptions warn_opts;
  warn_opts.validation = TargetValidation::warn;
  AugTargetAudit audit;
  const AugTargetPair pair = make_aug_targets(base, m, 10.0, AugTargetMode::avoid_outer,
                                              10.0 / 9.0, warn_opts, &audit);
  CHECK(audit.outer_violations > 0);
  CHECK(pair.outer.J(Vec::Zero(m.n_k())) == doctest::Approx(-10.0 / 9.0));

  // a sampled-validated level makes the same shape acceptable
  double needed = 0.0;
  Rng rng(13);
  const Box box{v2(-2, -2), v2(2, 2)};
  for (int i = 0; i < 20000; ++i) {
    const Vec x = uniform_in_box(box, rng);
    if (base.J(x) > 0) continue;
    const Vec g = m.lift(x);
    needed = std::max(needed, g.dot(pair.outer.shape() * g));
  }
  AugTargetAudit audit2;
  make_aug_targets(base, m, 10.0, AugTargetMode::avoid_outer, 1.05 * needed, {}, &audit2);
  CHECK(audit2.outer_violations == 0);
}

TEST_CASE("aug target preconditions") {
  const LiftMap m = LiftMap::slow_manifold();
  CHECK_THROWS_AS(make_aug_targets(paper_reach_target(), m, 0.0,
                                   AugTargetMode::reach_inner, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_aug_targets(paper_reach_target(), m, -1.0,
                                   AugTargetMode::reach_inner, 1.0),
                  std::invalid_argument);
}

TEST_CASE("increasing eta shrinks the inner target off the state block") {
  const LiftMap m = LiftMap::slow_manifold();
  const AugTargetPair small_eta = make_aug_targets(paper_reach_target(), m, 0.05,
                                                   AugTargetMode::reach_inner, 1.0);
  const AugTargetPair big_eta = make_aug_targets(paper_reach_target(), m, 0.5,
                                                 AugTargetMode::reach_inner, 1.0);
  Rng rng(41);
  const Box box{v2(-2, -0.75), v2(2, 3.25)};
  for (int i = 0; i < 200; ++i) {
    const Vec g = m.lift(uniform_in_box(box, rng));
    CHECK(big_eta.inner.J(g) >= small_eta.inner.J(g) - 1e-12);
  }
}

TEST_CASE("bounding box of an ellipsoid") {
  const QuadTarget tgt(v2(1, 2), (Mat(2, 2) << 4.0, 0.0, 0.0, 1.0).finished(), 1.0);
  const Box box = tgt.bounding_box();
  CHECK(box.lo[0] == doctest::Approx(0.5));
  CHECK(box.hi[0] == doctest::Approx(1.5));
  CHECK(box.lo[1] == doctest::Approx(1.0));
  CHECK(box.hi[1] == doctest::Approx(3.0));
}
