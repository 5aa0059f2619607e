#include "liftreach/value_grid.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>

namespace liftreach {

std::size_t ValueGrid::size() const {
  std::size_t n = 1;
  for (const auto& axis : axes) n *= axis.size();
  return axes.empty() ? 0 : n;
}

std::size_t ValueGrid::index(const std::vector<std::size_t>& idx) const {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < axes.size(); ++d) flat = flat * axes[d].size() + idx[d];
  return flat;
}

double& ValueGrid::at(std::size_t i, std::size_t j) {
  return values[i * axes[1].size() + j];
}

double ValueGrid::at(std::size_t i, std::size_t j) const {
  return values[i * axes[1].size() + j];
}

Box ValueGrid::hull() const {
  Vec lo(dim()), hi(dim());
  for (Eigen::Index d = 0; d < dim(); ++d) {
    lo[d] = axes[d].front();
    hi[d] = axes[d].back();
  }
  return Box(lo, hi);
}

void ValueGrid::validate() const {
  if (axes.empty()) throw std::invalid_argument("ValueGrid: no axes");
  for (const auto& axis : axes) {
    if (axis.size() < 2) throw std::invalid_argument("ValueGrid: axis needs >= 2 points");
    for (std::size_t i = 1; i < axis.size(); ++i) {
      if (!(axis[i] > axis[i - 1])) {
        throw std::invalid_argument("ValueGrid: axis must be increasing");
      }
    }
  }
  if (values.size() != size()) {
    throw std::invalid_argument("ValueGrid: value count does not match axes");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericalError("ValueGrid: non-finite value");
  }
}

namespace {
constexpr char kMagic[8] = {'L', 'R', 'V', 'G', 'R', 'I', 'D', '\0'};
}

void ValueGrid::save(const std::string& path) const {
  validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("ValueGrid::save: cannot open " + path);
  out.write(kMagic, 8);
  const uint32_t version = 1;
  const uint32_t ndim = static_cast<uint32_t>(axes.size());
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&ndim), 4);
  for (const auto& axis : axes) {
    const uint64_t n = axis.size();
    out.write(reinterpret_cast<const char*>(&n), 8);
  }
  for (const auto& axis : axes) {
    out.write(reinterpret_cast<const char*>(axis.data()),
              static_cast<std::streamsize>(axis.size() * 8));
  }
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * 8));
  if (!out) throw std::runtime_error("ValueGrid::save: write failed for " + path);

  nlohmann::json sidecar;
  sidecar["time"] = time;
  sidecar["sense"] = sense;
  sidecar["cfl_used"] = cfl_used;
  std::ofstream meta(path + ".json");
  meta << sidecar.dump(2) << "\n";
}

ValueGrid ValueGrid::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("ValueGrid::load: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("ValueGrid::load: bad magic in " + path);
  }
  uint32_t version = 0, ndim = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&ndim), 4);
  if (version != 1) throw std::runtime_error("ValueGrid::load: unsupported version");
  std::vector<uint64_t> sizes(ndim);
  for (auto& n : sizes) in.read(reinterpret_cast<char*>(&n), 8);
  ValueGrid grid;
  grid.axes.resize(ndim);
  for (uint32_t d = 0; d < ndim; ++d) {
    grid.axes[d].resize(sizes[d]);
    in.read(reinterpret_cast<char*>(grid.axes[d].data()),
            static_cast<std::streamsize>(sizes[d] * 8));
  }
  grid.values.resize(grid.size());
  in.read(reinterpret_cast<char*>(grid.values.data()),
          static_cast<std::streamsize>(grid.values.size() * 8));
  if (!in) throw std::runtime_error("ValueGrid::load: truncated file " + path);

  std::ifstream meta(path + ".json");
  if (meta) {
    nlohmann::json sidecar = nlohmann::json::parse(meta, nullptr, false);
    if (!sidecar.is_discarded()) {
      grid.time = sidecar.value("time", 0.0);
      grid.sense = sidecar.value("sense", "");
      grid.cfl_used = sidecar.value("cfl_used", 0.0);
    }
  }
  grid.validate();
  return grid;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) throw std::invalid_argument("linspace: need n >= 2");
  std::vector<double> axis(n);
  for (std::size_t i = 0; i < n; ++i) {
    axis[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return axis;
}

namespace {

// bilinear with linear extrapolation outside the hull
double interp2_extrap(const ValueGrid& g, double x, double y) {
  const auto& ax = g.axes[0];
  const auto& ay = g.axes[1];
  const double dx = ax[1] - ax[0];
  const double dy = ay[1] - ay[0];
  auto cell = [](double v, const std::vector<double>& axis, double d) {
    long i = static_cast<long>(std::floor((v - axis.front()) / d));
    i = std::max(0L, std::min(i, static_cast<long>(axis.size()) - 2));
    return i;
  };
  const long i = cell(x, ax, dx);
  const long j = cell(y, ay, dy);
  const double fx = (x - ax[static_cast<std::size_t>(i)]) / dx;
  const double fy = (y - ay[static_cast<std::size_t>(j)]) / dy;
  const double v00 = g.at(i, j), v01 = g.at(i, j + 1);
  const double v10 = g.at(i + 1, j), v11 = g.at(i + 1, j + 1);
  return (1 - fx) * ((1 - fy) * v00 + fy * v01) + fx * ((1 - fy) * v10 + fy * v11);
}

}  // namespace

double dp_value_at(const ValueGrid& grid, const Vec& x) {
  if (grid.dim() != 2) throw std::invalid_argument("dp_value_at: 2D grids only");
  check_dim(x, 2, "dp_value_at: x");
  if (!grid.hull().contains(x, 1e-12)) {
    throw OutOfDomainError("dp_value_at: point outside grid hull");
  }
  return interp2_extrap(grid, x[0], x[1]);
}

Vec dp_gradient_at(const ValueGrid& grid, const Vec& x) {
  if (grid.dim() != 2) throw std::invalid_argument("dp_gradient_at: 2D grids only");
  check_dim(x, 2, "dp_gradient_at: x");
  if (!grid.hull().contains(x, 1e-12)) {
    throw OutOfDomainError("dp_gradient_at: point outside grid hull");
  }
  Vec gradient(2);
  const double hx = 0.5 * (grid.axes[0][1] - grid.axes[0][0]);
  const double hy = 0.5 * (grid.axes[1][1] - grid.axes[1][0]);
  gradient[0] = (interp2_extrap(grid, x[0] + hx, x[1]) -
                 interp2_extrap(grid, x[0] - hx, x[1])) / (2 * hx);
  gradient[1] = (interp2_extrap(grid, x[0], x[1] + hy) -
                 interp2_extrap(grid, x[0], x[1] - hy)) / (2 * hy);
  return gradient;
}

}  // namespace liftreach
