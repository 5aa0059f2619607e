#include "liftreach/dp.hpp"

#include <cmath>

namespace liftreach {

ValueGrid solve_dp(const AffineSystem& sys, const InputBall& u_ball,
                   const InputBall& d_ball, const QuadTarget& tgt, DpSense sense,
                   const std::vector<std::vector<double>>& axes, double t, double T,
                   double cfl) {
  if (sys.n_x != 2 || axes.size() != 2) {
    throw std::invalid_argument("solve_dp: 2D systems and grids only");
  }
  if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("solve_dp: cfl must be in (0,1]");
  if (!(t < T)) throw std::invalid_argument("solve_dp: need t < T");

  ValueGrid grid;
  grid.axes = axes;
  grid.sense = sense == DpSense::reach ? "reach" : "avoid";
  grid.time = t;
  grid.cfl_used = cfl;
  const std::size_t nx = axes[0].size();
  const std::size_t ny = axes[1].size();
  const double dx = axes[0][1] - axes[0][0];
  const double dy = axes[1][1] - axes[1][0];
  grid.values.resize(nx * ny);

  // terminal condition: V(.,T) = J exactly on nodes
  std::vector<Vec> drift_cache(nx * ny);
  std::vector<double> su_row1_cache(nx * ny), su_row2_cache(nx * ny);
  std::vector<double> sd_row1_cache(nx * ny), sd_row2_cache(nx * ny);
  std::vector<Mat> h1_cache(nx * ny), h2_cache(nx * ny);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      Vec x(2);
      x << axes[0][i], axes[1][j];
      grid.at(i, j) = tgt.J(x);
      const std::size_t f = i * ny + j;
      drift_cache[f] = sys.drift(x);
      h1_cache[f] = sys.control_matrix(x);
      h2_cache[f] = sys.disturbance_matrix(x);
      su_row1_cache[f] = u_ball.support(h1_cache[f].row(0).transpose());
      su_row2_cache[f] = u_ball.support(h1_cache[f].row(1).transpose());
      sd_row1_cache[f] = d_ball.support(h2_cache[f].row(0).transpose());
      sd_row2_cache[f] = d_ball.support(h2_cache[f].row(1).transpose());
    }
  }

  // dissipation bounds |dH/dp_i| <= |f_i| + sigma_U(row_i h1) + sigma_D(row_i h2)
  double alpha_x = 0.0, alpha_y = 0.0;
  for (std::size_t f = 0; f < nx * ny; ++f) {
    alpha_x = std::max(alpha_x, std::abs(drift_cache[f][0]) + su_row1_cache[f] + sd_row1_cache[f]);
    alpha_y = std::max(alpha_y, std::abs(drift_cache[f][1]) + su_row2_cache[f] + sd_row2_cache[f]);
  }
  alpha_x *= 1.2;
  alpha_y *= 1.2;

  if (alpha_x / dx + alpha_y / dy <= 0.0) {
    return grid;  // H == 0: the terminal condition is the value at every time
  }
  const double dt_max = cfl / (alpha_x / dx + alpha_y / dy);
  const double horizon = T - t;
  const std::size_t steps = static_cast<std::size_t>(std::ceil(horizon / dt_max));
  const double dt = horizon / static_cast<double>(steps);

  const double usign = sense == DpSense::reach ? -1.0 : 1.0;  // control term sign
  std::vector<double> next(nx * ny);
  auto value = [&](long i, long j) {
    // linear extrapolation ghost cells
    long ci = i, cj = j;
    double corr = 0.0;
    if (i < 0) {
      corr += (grid.at(0, std::clamp<long>(j, 0, long(ny) - 1)) -
               grid.at(1, std::clamp<long>(j, 0, long(ny) - 1))) * double(-i);
      ci = 0;
    } else if (i >= long(nx)) {
      corr += (grid.at(nx - 1, std::clamp<long>(j, 0, long(ny) - 1)) -
               grid.at(nx - 2, std::clamp<long>(j, 0, long(ny) - 1))) * double(i - long(nx) + 1);
      ci = long(nx) - 1;
    }
    if (j < 0) {
      corr += (grid.at(ci, 0) - grid.at(ci, 1)) * double(-j);
      cj = 0;
    } else if (j >= long(ny)) {
      corr += (grid.at(ci, ny - 1) - grid.at(ci, ny - 2)) * double(j - long(ny) + 1);
      cj = long(ny) - 1;
    }
    return grid.at(ci, cj) + corr;
  };

  for (std::size_t step = 0; step < steps; ++step) {
    for (std::size_t i = 0; i < nx; ++i) {
      for (std::size_t j = 0; j < ny; ++j) {
        const double v = grid.at(i, j);
        const double vxm = value(long(i) - 1, long(j));
        const double vxp = value(long(i) + 1, long(j));
        const double vym = value(long(i), long(j) - 1);
        const double vyp = value(long(i), long(j) + 1);
        const double pxm = (v - vxm) / dx, pxp = (vxp - v) / dx;
        const double pym = (v - vym) / dy, pyp = (vyp - v) / dy;
        Vec p(2);
        p << 0.5 * (pxm + pxp), 0.5 * (pym + pyp);

        const std::size_t f = i * ny + j;
        const double su = u_ball.support(h1_cache[f].transpose() * p);
        const double sd = d_ball.support(h2_cache[f].transpose() * p);
        const double ham = p.dot(drift_cache[f]) + usign * su - usign * sd;
        next[f] = v + dt * ham + dt * (0.5 * alpha_x * (pxp - pxm) + 0.5 * alpha_y * (pyp - pym));
        if (!std::isfinite(next[f])) {
          throw NumericalError("solve_dp: non-finite value at step " + std::to_string(step));
        }
      }
    }
    grid.values = next;
  }
  return grid;
}

}  // namespace liftreach
