#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "liftreach/targets.hpp"
#include "liftreach/tube.hpp"

#include <cmath>

using namespace liftreach;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v1(double a) { return Vec::Constant(1, a); }

AffineSystem integrator_1d() {
  AffineSystem sys;
  sys.n_x = 1;
  sys.n_u = 1;
  sys.n_d = 1;
  sys.drift = [](const Vec&) { return Vec::Zero(1); };
  sys.control_matrix = [](const Vec&) { return Mat::Identity(1, 1); };
  sys.disturbance_matrix = [](const Vec&) { return Mat::Zero(1, 1); };
  sys.lipschitz_bound = 0.0;
  sys.lipschitz_box = Box{v1(-10), v1(10)};
  return sys;
}

Signal piecewise_random(const InputBall& ball, int segments, double horizon, Rng& rng) {
  std::vector<double> times;
  std::vector<Vec> values;
  for (int s = 0; s < segments; ++s) {
    times.push_back(horizon * s / segments);
    values.push_back(ball.sample(rng));
  }
  return zoh_signal(std::move(times), std::move(values));
}

}  // namespace

TEST_CASE("zero dynamics gives a constant tube") {
  AffineSystem sys = integrator_1d();
  sys.control_matrix = [](const Vec&) { return Mat::Zero(1, 1); };
  const Box target{v1(-1), v1(1)};
  const BoxTube tube = backward_tube(sys, InputBall(1, 0.0), InputBall(1, 0.0), target,
                                     0.0, 1.0, {});
  for (const Box& box : tube.boxes) {
    CHECK(box.lo[0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(box.hi[0] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("single integrator tube contains the exact feasible interval") {
  const AffineSystem sys = integrator_1d();
  const Box target{v1(-1), v1(1)};
  const BoxTube tube = backward_tube(sys, InputBall(1, 1.0), InputBall(1, 0.0), target,
                                     0.0, 1.0, {});
  const Box& at_t = tube.boxes.back();
  CHECK(at_t.lo[0] <= -2.0);
  CHECK(at_t.hi[0] >= 2.0);
  // and with zero Lipschitz constant the method should stay close to exact
  CHECK(at_t.lo[0] >= -2.2);
  CHECK(at_t.hi[0] <= 2.2);
  CHECK(tube.boxes.front().contains(target));
}

TEST_CASE("tube soundness: sampled feasible slow-manifold trajectories stay inside") {
  const DemoSystem sm = make_demo_system("slow_manifold");
  const QuadTarget target(v2(0, 1.25), Mat::Identity(2, 2), 1.0);
  TubeOptions opts;
  opts.h = 0.01;
  const BoxTube tube = backward_tube(sm.sys, sm.u_ball, sm.d_ball, target.bounding_box(),
                                     0.0, 1.0, opts);
  Rng rng(2024);
  const Box start_box = tube.boxes.back();
  int kept = 0, tries = 0;
  while (kept < 200 && tries < 200000) {
    ++tries;
    const Vec x0 = uniform_in_box(start_box, rng);
    const Signal u = piecewise_random(sm.u_ball, 10, 1.0, rng);
    const Signal d = piecewise_random(sm.d_ball, 10, 1.0, rng);
    const Trajectory traj = integrate(sm.sys, x0, u, d, 0.0, 1.0, 0.01);
    if (target.J(traj.final_state()) > 0.0) continue;
    ++kept;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      CHECK(tube.box_at(traj.times[k]).contains(traj.states[k], 1e-9));
    }
  }
  CHECK(kept == 200);
}

TEST_CASE("tube blow-up raises with the failing time") {
  const AffineSystem sys = integrator_1d();
  TubeOptions opts;
  opts.h = 0.05;
  opts.diameter_cap = 5.0;
  CHECK_THROWS_AS(backward_tube(sys, InputBall(1, 100.0), InputBall(1, 0.0),
                                Box{v1(-1), v1(1)}, 0.0, 1.0, opts),
                  BlowUpError);
}

TEST_CASE("domain clamp keeps the tube inside the declared region") {
  const AffineSystem sys = integrator_1d();
  TubeOptions opts;
  opts.h = 0.05;
  opts.domain = Box{v1(-1.5), v1(1.5)};
  const BoxTube tube = backward_tube(sys, InputBall(1, 100.0), InputBall(1, 0.0),
                                     Box{v1(-1), v1(1)}, 0.0, 1.0, opts);
  for (const Box& box : tube.boxes) {
    CHECK(box.lo[0] >= -1.5 - 1e-12);
    CHECK(box.hi[0] <= 1.5 + 1e-12);
  }
}

TEST_CASE("error bound: exact lift has zero autonomous bound") {
  const DemoSystem sm = make_demo_system("slow_manifold");
  const LiftMap m = LiftMap::slow_manifold();
  const LiftedLinearModel exact = analytic_slow_manifold_model(Vec::Zero(2));
  BoxTube tube;
  tube.times = {1.0, 0.0};
  tube.boxes = {Box{v2(-1, 0.25), v2(1, 2.25)}, Box{v2(-2, -1), v2(2, 3)}};
  const ErrorBound bound = error_bound_delta(exact, m, sm.sys, InputBall(2, 0.0),
                                             InputBall(2, 0.0), tube, 21, 0.1);
  CHECK(bound.pre_inflation <= 1e-10);
}

TEST_CASE("error bound matches the closed-form input-extremized maximum") {
  // residual of the frozen-input model lives in coordinate 3 only:
  // |2 x1| (r_U + r_D) maximized at the box corner
  const DemoSystem sm = make_demo_system("slow_manifold");
  const LiftMap m = LiftMap::slow_manifold();
  const LiftedLinearModel model = analytic_slow_manifold_model(v2(0, 1.25));
  const double M = 1.7;
  BoxTube tube;
  tube.times = {1.0};
  tube.boxes = {Box{v2(-M, -1), v2(M, 3)}};
  const ErrorBound bound = error_bound_delta(model, m, sm.sys, InputBall(2, 0.5),
                                             InputBall(2, 0.25), tube, 41, 0.0);
  CHECK(bound.pre_inflation == doctest::Approx(2.0 * M * 0.75).epsilon(1e-12));
  CHECK(bound.delta_star == doctest::Approx(bound.pre_inflation));
}

TEST_CASE("error bound preconditions") {
  const DemoSystem sm = make_demo_system("slow_manifold");
  const LiftMap m = LiftMap::slow_manifold();
  const LiftedLinearModel model = analytic_slow_manifold_model(Vec::Zero(2));
  BoxTube tube;
  tube.times = {1.0};
  tube.boxes = {Box{v2(-1, -1), v2(1, 1)}};
  CHECK_THROWS_AS(error_bound_delta(model, m, sm.sys, sm.u_ball, sm.d_ball, tube, 1, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(error_bound_delta(model, m, sm.sys, sm.u_ball, sm.d_ball, BoxTube{},
                                    21, 0.1),
                  std::invalid_argument);
}

TEST_CASE("enlarging the tube never decreases delta_star") {
  const DemoSystem sm = make_demo_system("slow_manifold");
  const LiftMap m = LiftMap::slow_manifold();
  const LiftedLinearModel model = analytic_slow_manifold_model(v2(0, 1.25));
  BoxTube small, big;
  small.times = big.times = {1.0};
  small.boxes = {Box{v2(-1, 0), v2(1, 2)}};
  big.boxes = {Box{v2(-1.8, -1), v2(1.8, 3)}};
  const ErrorBound a = error_bound_delta(model, m, sm.sys, sm.u_ball, sm.d_ball, small, 31, 0.1);
  const ErrorBound b = error_bound_delta(model, m, sm.sys, sm.u_ball, sm.d_ball, big, 31, 0.1);
  CHECK(b.delta_star >= a.delta_star);
}

TEST_CASE("delta_star dominates sampled residuals") {
  const DemoSystem sm = make_demo_system("slow_manifold");
  const LiftMap m = LiftMap::slow_manifold();
  const LiftedLinearModel model = analytic_slow_manifold_model(v2(0, 1.25));
  BoxTube tube;
  tube.times = {1.0};
  tube.boxes = {Box{v2(-1.8, -1.2), v2(1.8, 3.2)}};
  const ErrorBound bound = error_bound_delta(model, m, sm.sys, sm.u_ball, sm.d_ball,
                                             tube, 41, 0.1);
  Rng rng(55);
  const AffineSystem lifted = lifted_dynamics(m, sm.sys);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = uniform_in_box(tube.boxes[0], rng);
    const Vec u = sm.u_ball.sample(rng);
    const Vec d = sm.d_ball.sample(rng);
    const Vec g = m.lift(x);
    const double residual =
        (eval_dynamics(lifted, g, u, d) - model.eval(g, u, d)).norm();
    CHECK(residual <= bound.delta_star * (1 + 1e-12));
  }
}

TEST_CASE("diagnostics never exceed delta_star") {
  const DemoSystem sm = make_demo_system("slow_manifold");
  const LiftMap m = LiftMap::slow_manifold();
  const LiftedLinearModel model = analytic_slow_manifold_model(v2(0, 1.25));
  BoxTube tube;
  tube.times = {1.0};
  tube.boxes = {Box{v2(-1, 0), v2(1, 2)}};
  const ErrorBound bound =
      error_bound_delta(model, m, sm.sys, sm.u_ball, sm.d_ball, tube, 15, 0.1);
  for (const auto& diag : bound.diagnostics) {
    CHECK(diag.bound <= bound.delta_star + 1e-15);
  }
  CHECK(bound.diagnostics.size() == 15 * 15);
}
