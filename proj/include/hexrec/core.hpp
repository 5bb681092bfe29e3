#pragma once

// Shared basics: error types, deterministic RNG helpers, numeric utilities.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hexrec {

constexpr int kDefaultFeatureDim = 8;

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

// Mesh connectivity violations: non-manifold edges, boundary edges on a mesh
// that must be closed, inconsistent orientation.
class TopologyError : public std::runtime_error {
 public:
  explicit TopologyError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input data (files, scene layout, dimensions).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: NaN loss, empty hull, no isosurface.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// splitmix64, used to stretch a single seed into well-separated stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic uniform doubles from raw 64-bit states. We avoid
// std::uniform_real_distribution because its output is implementation
// defined; this mapping is bit-stable everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

// Fixed-shape pairwise sum; result does not depend on how the caller chunks
// work across threads as long as the input order is fixed.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& xs) {
  return pairwise_sum(std::span<const double>(xs));
}

inline bool nearly_equal(double a, double b, double rel, double abs_tol = 0.0) {
  return std::abs(a - b) <= abs_tol + rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace hexrec
