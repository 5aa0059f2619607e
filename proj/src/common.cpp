#include "liftreach/common.hpp"

#include <charconv>
#include <thread>

namespace liftreach {

Box::Box(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) {
    throw std::invalid_argument("Box: lo/hi dimension mismatch");
  }
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!(lo[i] <= hi[i])) {
      throw std::invalid_argument("Box: lo > hi in dimension " + std::to_string(i));
    }
  }
}

bool Box::contains(const Vec& x, double tol) const {
  if (x.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
  }
  return true;
}

bool Box::contains(const Box& other, double tol) const {
  return contains(other.lo, tol) && contains(other.hi, tol);
}

Box Box::hull(const Box& other) const {
  return Box(lo.cwiseMin(other.lo), hi.cwiseMax(other.hi));
}

Box Box::expanded(double margin) const {
  return Box(lo.array() - margin, hi.array() + margin);
}

Box Box::expanded(const Vec& margin) const {
  return Box(lo - margin, hi + margin);
}

Box Box::intersected(const Box& other) const {
  Vec l = lo.cwiseMax(other.lo);
  Vec h = hi.cwiseMin(other.hi);
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    if (l[i] > h[i]) throw std::invalid_argument("Box: empty intersection");
  }
  return Box(l, h);
}

uint64_t derive_seed(uint64_t base, uint64_t index) {
  // splitmix64 over the combined word
  uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Vec uniform_in_box(const Box& box, Rng& rng) {
  Vec x(box.dim());
  for (Eigen::Index i = 0; i < box.dim(); ++i) {
    std::uniform_real_distribution<double> dist(box.lo[i], box.hi[i]);
    x[i] = dist(rng);
  }
  return x;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace liftreach
