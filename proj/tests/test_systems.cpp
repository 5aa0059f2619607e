#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "liftreach/systems.hpp"

#include <cmath>

using namespace liftreach;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// closed-form autonomous slow-manifold solution (linear ODE in x1, x2, x1^2)
Vec slow_manifold_closed_form(const Vec& x0, double t, double mu = -0.05,
                              double lambda = -1.0) {
  const double x1 = std::exp(mu * t) * x0[0];
  const double x2 = std::exp(lambda * t) * x0[1] -
                    lambda * x0[0] * x0[0] *
                        (std::exp(2 * mu * t) - std::exp(lambda * t)) / (2 * mu - lambda);
  return v2(x1, x2);
}

AffineSystem single_integrator() {
  AffineSystem sys;
  sys.n_x = 1;
  sys.n_u = 1;
  sys.n_d = 1;
  sys.drift = [](const Vec&) { return Vec::Zero(1); };
  sys.control_matrix = [](const Vec&) { return Mat::Identity(1, 1); };
  sys.disturbance_matrix = [](const Vec&) { return Mat::Zero(1, 1); };
  return sys;
}

}  // namespace

TEST_CASE("eval_dynamics on the demo systems") {
  const DemoSystem sm = make_demo_system("slow_manifold");
  CHECK(eval_dynamics(sm.sys, v2(0, 0), v2(0, 0), v2(0, 0)).norm() == doctest::Approx(0.0));

  const Vec f = eval_dynamics(sm.sys, v2(1, 0), Vec::Zero(2), Vec::Zero(2));
  CHECK(f[0] == doctest::Approx(-0.05));
  CHECK(f[1] == doctest::Approx(1.0));

  // classical Van der Pol field (xdot1 = x2); the first-row form follows the
  // standard oscillator, not the transcription slip in the source write-up
  const DemoSystem vdp = make_demo_system("vanderpol");
  const Vec g = eval_dynamics(vdp.sys, v2(0, 1), Vec::Constant(1, 1.0), Vec::Zero(1));
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(2.0));
}

TEST_CASE("eval_dynamics rejects dimension mismatches") {
  const DemoSystem sm = make_demo_system("slow_manifold");
  CHECK_THROWS_AS(eval_dynamics(sm.sys, Vec::Zero(3), Vec::Zero(2), Vec::Zero(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(eval_dynamics(sm.sys, Vec::Zero(2), Vec::Zero(1), Vec::Zero(2)),
                  std::invalid_argument);
}

TEST_CASE("integrate: constant trajectory for zero field") {
  AffineSystem sys = single_integrator();
  const Trajectory traj = integrate(sys, Vec::Constant(1, 3.0), zero_signal(1),
                                    zero_signal(1), 0.0, 1.0, 0.1);
  for (const Vec& x : traj.states) CHECK(x[0] == doctest::Approx(3.0));
  CHECK(traj.times.back() == doctest::Approx(1.0));
}

TEST_CASE("integrate matches the slow-manifold closed form") {
  const DemoSystem sm = make_demo_system("slow_manifold");
  const Trajectory traj = integrate(sm.sys, v2(1, 0), zero_signal(2), zero_signal(2),
                                    0.0, 1.0, 1e-3);
  const Vec expected = slow_manifold_closed_form(v2(1, 0), 1.0);
  CHECK(expected[0] == doctest::Approx(std::exp(-0.05)).epsilon(1e-12));
  CHECK(expected[1] ==
        doctest::Approx((std::exp(-0.1) - std::exp(-1.0)) / 0.9).epsilon(1e-12));
  CHECK((traj.final_state() - expected).norm() < 1e-8);
}

TEST_CASE("integrate: unit control moves a single integrator one unit") {
  AffineSystem sys = single_integrator();
  const Trajectory traj = integrate(sys, Vec::Zero(1), constant_signal(Vec::Ones(1)),
                                    zero_signal(1), 0.0, 1.0, 0.05);
  CHECK(std::abs(traj.final_state()[0] - 1.0) < 1e-10);
}

TEST_CASE("integrate: fractional last step lands exactly on T") {
  AffineSystem sys = single_integrator();
  const Trajectory traj = integrate(sys, Vec::Zero(1), constant_signal(Vec::Ones(1)),
                                    zero_signal(1), 0.0, 0.55, 0.1);
  CHECK(traj.times.back() == doctest::Approx(0.55).epsilon(1e-15));
  CHECK(std::abs(traj.final_state()[0] - 0.55) < 1e-10);
}

TEST_CASE("integrate names the divergence time") {
  AffineSystem sys;
  sys.n_x = 1;
  sys.n_u = 1;
  sys.n_d = 1;
  sys.drift = [](const Vec& x) { return Vec(x.array().square()); };
  sys.control_matrix = [](const Vec&) { return Mat::Zero(1, 1); };
  sys.disturbance_matrix = [](const Vec&) { return Mat::Zero(1, 1); };
  CHECK_THROWS_AS(integrate(sys, Vec::Constant(1, 1e200), zero_signal(1), zero_signal(1),
                            0.0, 1.0, 0.1),
                  DivergenceError);
}

TEST_CASE("RK4 order: halving h cuts the end-state error by >= 12") {
  const DemoSystem sm = make_demo_system("slow_manifold");
  const Vec x0 = v2(1.3, -0.4);
  const Vec exact = slow_manifold_closed_form(x0, 1.0);
  std::vector<double> errs;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    const Trajectory traj =
        integrate(sm.sys, x0, zero_signal(2), zero_signal(2), 0.0, 1.0, h);
    errs.push_back((traj.final_state() - exact).norm());
  }
  CHECK(errs[0] / errs[1] >= 12.0);
  CHECK(errs[1] / errs[2] >= 12.0);
}

TEST_CASE("the control enters affinely") {
  const DemoSystem sm = make_demo_system("slow_manifold");
  Rng rng(42);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = v2(unif(rng), unif(rng));
    const Vec d = v2(unif(rng), unif(rng));
    const Vec u1 = v2(unif(rng), unif(rng));
    const Vec u2 = v2(unif(rng), unif(rng));
    const double a = 0.3, b = 1.7;
    const Vec lhs = eval_dynamics(sm.sys, x, a * u1 + b * u2, d) -
                    eval_dynamics(sm.sys, x, Vec::Zero(2), d);
    const Vec rhs =
        a * (eval_dynamics(sm.sys, x, u1, d) - eval_dynamics(sm.sys, x, Vec::Zero(2), d)) +
        b * (eval_dynamics(sm.sys, x, u2, d) - eval_dynamics(sm.sys, x, Vec::Zero(2), d));
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("make_demo_system defaults and errors") {
  const DemoSystem sm = make_demo_system("slow_manifold");
  CHECK(sm.u_ball.radius == doctest::Approx(0.5));
  CHECK(sm.d_ball.radius == doctest::Approx(0.25));
  CHECK(sm.sys.lipschitz_bound > 0.0);

  const DemoSystem vdp = make_demo_system("vanderpol");
  CHECK(vdp.sys.n_u == 1);
  CHECK(vdp.u_ball.radius == doctest::Approx(0.5));
  CHECK(vdp.d_ball.radius == doctest::Approx(0.0));

  CHECK_THROWS_WITH_AS(make_demo_system("lorenz"),
                       doctest::Contains("slow_manifold"), NotFoundError);

  const DemoSystem custom = make_demo_system("slow_manifold", {{"mu", -0.1}});
  CHECK(eval_dynamics(custom.sys, v2(1, 0), Vec::Zero(2), Vec::Zero(2))[0] ==
        doctest::Approx(-0.1));
}

TEST_CASE("InputBall membership, support and extremizers") {
  const InputBall ball(2, 0.5);
  CHECK(ball.contains(v2(0.3, 0.4)));
  CHECK(!ball.contains(v2(0.4, 0.4)));
  CHECK(ball.support(v2(3, 4)) == doctest::Approx(2.5));
  CHECK(ball.extremizer(v2(3, 4)).norm() == doctest::Approx(0.5));
  CHECK(ball.extremizer(Vec::Zero(2)).norm() == doctest::Approx(0.0));
  CHECK(ball.project(v2(10, 0))[0] == doctest::Approx(0.5));

  const InputBall cube(2, 1.0, InputBall::Norm::box);
  CHECK(cube.support(v2(3, -4)) == doctest::Approx(7.0));
  CHECK(cube.extremizer(v2(3, -4))[1] == doctest::Approx(-1.0));
}

TEST_CASE("zoh_signal holds the last sample") {
  const Signal sig = zoh_signal({0.0, 1.0, 2.0},
                                {Vec::Constant(1, 5.0), Vec::Constant(1, 6.0),
                                 Vec::Constant(1, 7.0)});
  CHECK(sig(-0.5)[0] == doctest::Approx(5.0));
  CHECK(sig(0.0)[0] == doctest::Approx(5.0));
  CHECK(sig(0.99)[0] == doctest::Approx(5.0));
  CHECK(sig(1.0)[0] == doctest::Approx(6.0));
  CHECK(sig(5.0)[0] == doctest::Approx(7.0));
}

TEST_CASE("Trajectory rejects non-increasing times") {
  CHECK_THROWS_AS(Trajectory({0.0, 0.0}, {Vec::Zero(1), Vec::Zero(1)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Trajectory({0.0}, {Vec::Zero(1), Vec::Zero(1)}), std::invalid_argument);
}

TEST_CASE("estimate_lipschitz dominates sampled difference quotients") {
  const DemoSystem sm = make_demo_system("slow_manifold");
  const Box box{v2(-2, -2), v2(2, 2)};
  const double lf = estimate_lipschitz(sm.sys, box, sm.u_ball, sm.d_ball);
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const Vec x = uniform_in_box(box, rng);
    const Vec y = uniform_in_box(box, rng);
    const Vec u = sm.u_ball.sample(rng);
    const Vec d = sm.d_ball.sample(rng);
    const double num = (eval_dynamics(sm.sys, x, u, d) - eval_dynamics(sm.sys, y, u, d)).norm();
    CHECK(num <= lf * (x - y).norm() + 1e-9);
  }
}
