#include "liftreach/contours.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <optional>

namespace liftreach {

namespace {

using Point = std::array<double, 2>;

struct Segment {
  Point a, b;
};

double lerp_crossing(double va, double vb) {
  const double d = vb - va;
  if (d == 0.0) return 0.5;
  double f = -va / d;
  return std::clamp(f, 0.0, 1.0);
}

int64_t quantize(double v, double scale) {
  return static_cast<int64_t>(std::llround(v * scale));
}

}  // namespace

std::vector<Polyline> extract_contours(const ValueGrid& grid, double level) {
  if (grid.dim() != 2) throw std::invalid_argument("extract_contours: 2D grids only");
  const auto& ax = grid.axes[0];
  const auto& ay = grid.axes[1];
  std::vector<Segment> segments;

  // corners exactly on the level are nudged outside so crossings stay in the
  // interior of cell edges (no four-way junctions)
  double value_span = 1e-300;
  for (double v : grid.values) value_span = std::max(value_span, std::abs(v - level));
  const double nudge = 1e-12 * value_span;
  auto corner = [&](std::size_t i, std::size_t j) {
    const double v = grid.at(i, j) - level;
    return v == 0.0 ? nudge : v;
  };

  for (std::size_t i = 0; i + 1 < ax.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ay.size(); ++j) {
      const double v00 = corner(i, j);
      const double v10 = corner(i + 1, j);
      const double v01 = corner(i, j + 1);
      const double v11 = corner(i + 1, j + 1);
      int code = 0;
      if (v00 < 0) code |= 1;
      if (v10 < 0) code |= 2;
      if (v11 < 0) code |= 4;
      if (v01 < 0) code |= 8;
      if (code == 0 || code == 15) continue;

      // edge midpoints by linear interpolation
      auto bottom = [&]() -> Point {
        const double f = lerp_crossing(v00, v10);
        return {ax[i] + f * (ax[i + 1] - ax[i]), ay[j]};
      };
      auto top = [&]() -> Point {
        const double f = lerp_crossing(v01, v11);
        return {ax[i] + f * (ax[i + 1] - ax[i]), ay[j + 1]};
      };
      auto left = [&]() -> Point {
        const double f = lerp_crossing(v00, v01);
        return {ax[i], ay[j] + f * (ay[j + 1] - ay[j])};
      };
      auto right = [&]() -> Point {
        const double f = lerp_crossing(v10, v11);
        return {ax[i + 1], ay[j] + f * (ay[j + 1] - ay[j])};
      };

      switch (code) {
        case 1: case 14: segments.push_back({left(), bottom()}); break;
        case 2: case 13: segments.push_back({bottom(), right()}); break;
        case 3: case 12: segments.push_back({left(), right()}); break;
        case 4: case 11: segments.push_back({right(), top()}); break;
        case 6: case 9:  segments.push_back({bottom(), top()}); break;
        case 7: case 8:  segments.push_back({top(), left()}); break;
        case 5: case 10: {
          // saddle: disambiguate with the cell-center average
          const double center = 0.25 * (v00 + v10 + v01 + v11);
          const bool flip = (center < 0) == (code == 5);
          if (flip) {
            segments.push_back({left(), top()});
            segments.push_back({bottom(), right()});
          } else {
            segments.push_back({left(), bottom()});
            segments.push_back({right(), top()});
          }
          break;
        }
        default: break;
      }
    }
  }

  // stitch segments into polylines by matching quantized endpoints
  const double diag = std::hypot(ax.back() - ax.front(), ay.back() - ay.front());
  const double scale = 1e9 / std::max(diag, 1e-12);
  using Key = std::pair<int64_t, int64_t>;
  auto key = [&](const Point& p) { return Key{quantize(p[0], scale), quantize(p[1], scale)}; };

  // drop zero-length segments (contour through a nudged corner)
  std::vector<Segment> kept;
  kept.reserve(segments.size());
  for (const Segment& s : segments) {
    if (key(s.a) != key(s.b)) kept.push_back(s);
  }
  segments = std::move(kept);

  std::multimap<Key, std::size_t> by_endpoint;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    by_endpoint.insert({key(segments[s].a), s});
    by_endpoint.insert({key(segments[s].b), s});
  }
  std::vector<bool> used(segments.size(), false);
  std::vector<Polyline> polylines;

  auto take_next = [&](const Point& tip) -> std::optional<std::pair<std::size_t, Point>> {
    auto range = by_endpoint.equal_range(key(tip));
    for (auto it = range.first; it != range.second; ++it) {
      const std::size_t s = it->second;
      if (used[s]) continue;
      used[s] = true;
      const bool from_a = key(segments[s].a) == key(tip);
      return std::make_pair(s, from_a ? segments[s].b : segments[s].a);
    }
    return std::nullopt;
  };

  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (used[s]) continue;
    used[s] = true;
    std::vector<Point> chain{segments[s].a, segments[s].b};
    // extend forward
    while (auto next = take_next(chain.back())) chain.push_back(next->second);
    // extend backward
    while (auto next = take_next(chain.front())) chain.insert(chain.begin(), next->second);
    Polyline line;
    line.points = std::move(chain);
    line.closed = key(line.points.front()) == key(line.points.back());
    polylines.push_back(std::move(line));
  }
  return polylines;
}

void write_contours_csv(const std::string& path, const std::vector<Polyline>& polylines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_contours_csv: cannot open " + path);
  out << "polyline,x1,x2\n";
  for (std::size_t id = 0; id < polylines.size(); ++id) {
    for (const auto& p : polylines[id].points) {
      out << id << "," << format_double(p[0]) << "," << format_double(p[1]) << "\n";
    }
  }
}

double contour_hausdorff(const std::vector<Polyline>& a, const std::vector<Polyline>& b) {
  auto flatten = [](const std::vector<Polyline>& lines) {
    std::vector<std::array<double, 2>> pts;
    for (const auto& line : lines) pts.insert(pts.end(), line.points.begin(), line.points.end());
    return pts;
  };
  const auto pa = flatten(a);
  const auto pb = flatten(b);
  if (pa.empty() && pb.empty()) return 0.0;
  if (pa.empty() || pb.empty()) return std::numeric_limits<double>::infinity();
  auto directed = [](const auto& from, const auto& to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) {
        best = std::min(best, std::hypot(p[0] - q[0], p[1] - q[1]));
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(pa, pb), directed(pb, pa));
}

}  // namespace liftreach
