#pragma once

#include "liftreach/systems.hpp"
#include "liftreach/targets.hpp"
#include "liftreach/value_grid.hpp"

namespace liftreach {

enum class DpSense { reach, avoid };

/// First-order Lax-Friedrichs level-set solve of the true nonlinear game on a
/// 2D grid, backward from V(.,T) = J to time t. The inner input optimizations
/// use the input balls' support functions in closed form:
///   reach  H(x,p) = p.f_x(x) - sigma_U(h1^T p) + sigma_D(h2^T p),
///   avoid flips the input terms. Dissipation coefficients are per-axis grid
/// maxima of the |dH/dp| bounds with a 1.2 safety factor; the timestep comes
/// from the CFL number; boundaries use linearly extrapolated ghost cells.
ValueGrid solve_dp(const AffineSystem& sys, const InputBall& u_ball,
                   const InputBall& d_ball, const QuadTarget& tgt, DpSense sense,
                   const std::vector<std::vector<double>>& axes, double t, double T,
                   double cfl = 0.9);

}  // namespace liftreach
