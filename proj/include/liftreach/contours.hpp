#pragma once

#include "liftreach/value_grid.hpp"

#include <array>

namespace liftreach {

struct Polyline {
  std::vector<std::array<double, 2>> points;
  bool closed = false;
};

/// Marching-squares extraction of the level set of a 2D grid. Segments are
/// stitched into polylines; an empty result is fine (no crossing cells).
std::vector<Polyline> extract_contours(const ValueGrid& grid, double level);

/// CSV rows: polyline id, x1, x2 (one row per vertex).
void write_contours_csv(const std::string& path, const std::vector<Polyline>& polylines);

/// Symmetric point-to-polyline-vertex distance bound between two contour
/// families; infinity when exactly one family is empty, 0 when both are.
double contour_hausdorff(const std::vector<Polyline>& a, const std::vector<Polyline>& b);

}  // namespace liftreach
