#pragma once

#include "liftreach/common.hpp"

namespace liftreach {

/// Sampled value function over a uniform rectangular grid at one time.
/// Values are stored row-major with the last axis fastest.
struct ValueGrid {
  std::vector<std::vector<double>> axes;
  std::vector<double> values;
  double time = 0.0;
  std::string sense;  // "reach" | "avoid" | ""
  double cfl_used = 0.0;

  std::size_t size() const;
  Eigen::Index dim() const { return static_cast<Eigen::Index>(axes.size()); }
  std::size_t index(const std::vector<std::size_t>& idx) const;
  double& at(std::size_t i, std::size_t j);        // 2D convenience
  double at(std::size_t i, std::size_t j) const;
  Box hull() const;
  void validate() const;

  /// Flat binary layout (magic, dims, axes, row-major float64 payload) plus a
  /// JSON sidecar `<path>.json` carrying time/sense/cfl.
  void save(const std::string& path) const;
  static ValueGrid load(const std::string& path);
};

/// Uniform axis helper.
std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Bilinear interpolation (2D grids). Throws OutOfDomainError outside the
/// hull.
double dp_value_at(const ValueGrid& grid, const Vec& x);

/// Central differences of the interpolated field, step = half grid spacing;
/// near the hull boundary the probes extrapolate linearly instead of failing.
Vec dp_gradient_at(const ValueGrid& grid, const Vec& x);

}  // namespace liftreach
