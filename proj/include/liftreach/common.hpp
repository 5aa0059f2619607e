#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace liftreach {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Numerical failure during a computation (overflow, NaN, non-convergent exp).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A trajectory left the representable range; message names the time.
struct DivergenceError : NumericalError {
  using NumericalError::NumericalError;
};

/// A propagated set exceeded its diameter cap; message names the time.
struct BlowUpError : NumericalError {
  using NumericalError::NumericalError;
};

/// Least-squares system is rank deficient and no ridge was requested.
struct SingularFitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Augmented target failed its sampled inner/outer validity audit.
struct InvalidTargetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A name lookup failed; message lists valid names.
struct NotFoundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Query point outside the hull of a sampled grid.
struct OutOfDomainError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// A user-supplied lift component returned a non-finite value.
struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void check_dim(const Vec& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " +
                                std::to_string(n) + ", got " +
                                std::to_string(v.size()));
  }
}

/// Axis-aligned box [lo, hi].
struct Box {
  Vec lo;
  Vec hi;

  Box() = default;
  Box(Vec lo_, Vec hi_);

  Eigen::Index dim() const { return lo.size(); }
  Vec center() const { return 0.5 * (lo + hi); }
  Vec widths() const { return hi - lo; }
  double diameter() const { return (hi - lo).norm(); }
  bool contains(const Vec& x, double tol = 0.0) const;
  bool contains(const Box& other, double tol = 0.0) const;

  /// Smallest box containing both.
  Box hull(const Box& other) const;
  /// Grown by a per-dimension margin (scalar applied to every axis).
  Box expanded(double margin) const;
  Box expanded(const Vec& margin) const;
  /// Componentwise intersection; throws std::invalid_argument if empty.
  Box intersected(const Box& other) const;
};

/// Deterministic 64-bit mix; used to derive independent per-item seeds.
uint64_t derive_seed(uint64_t base, uint64_t index);

using Rng = std::mt19937_64;

Vec uniform_in_box(const Box& box, Rng& rng);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// RFC-4180 field quoting (only quotes when needed).
std::string csv_field(const std::string& s);

/// Serial-friendly parallel map: fn(i) for i in [0, n). Thread count <= 1
/// runs inline; results must be written by index to keep runs deterministic.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace liftreach
