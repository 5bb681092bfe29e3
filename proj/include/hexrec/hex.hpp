#pragma once

// Hexagonal second-difference regularization.
//
// For a vertex of even valence d, its cyclically ordered neighbors are paired
// opposite each other ((j, j+d/2); for d=6 that is (j, j+3)), and each pair
// contributes (2 p_i - p_k - p_k')^2 per coordinate axis. The energy is zero
// exactly when every cell is centrosymmetric: each vertex sits at the
// midpoint of all of its opposite neighbor pairs.
//
// Odd-valence vertices have no opposite pairing; they fall back to a uniform
// Laplacian term valence * |p_i - mean(neighbors)|^2 so that per-vertex
// stiffness stays comparable to the regular case.
//
// The same energy is available as a sparse quadratic form S^T K S per axis;
// K is symmetric positive semi-definite with zero row sums.

#include "hexrec/mesh.hpp"

#include <Eigen/Sparse>

#include <utility>
#include <vector>

namespace hexrec {

using RegularizerMatrix = Eigen::SparseMatrix<double>;

inline bool is_extraordinary_odd(const HexMesh& mesh, int v) {
  return mesh.valence(v) % 2 != 0;
}

// Opposite-neighbor pairs (k, k') of `v` over the cyclic one-ring order.
// Odd valence yields no pairs (Laplacian fallback applies instead).
inline std::vector<std::pair<int, int>> neighbor_pairs(const HexMesh& mesh, int v) {
  const auto& ring = mesh.neighbors(v);
  const int d = static_cast<int>(ring.size());
  std::vector<std::pair<int, int>> pairs;
  if (d % 2 != 0) return pairs;
  pairs.reserve(d / 2);
  for (int j = 0; j < d / 2; ++j) pairs.emplace_back(ring[j], ring[j + d / 2]);
  return pairs;
}

// Energy contribution of the terms centered at vertex i.
inline double hex_vertex_energy(const HexMesh& mesh, int i) {
  const auto& ring = mesh.neighbors(i);
  const int d = static_cast<int>(ring.size());
  const Vec3& pi = mesh.positions[i];
  double energy = 0.0;
  if (d % 2 == 0) {
    for (int j = 0; j < d / 2; ++j) {
      Vec3 r = 2.0 * pi - mesh.positions[ring[j]] - mesh.positions[ring[j + d / 2]];
      energy += r.squaredNorm();
    }
  } else {
    Vec3 mean = Vec3::Zero();
    for (int n : ring) mean += mesh.positions[n];
    mean /= static_cast<double>(d);
    energy += d * (pi - mean).squaredNorm();
  }
  return energy;
}

inline double hex_energy(const HexMesh& mesh) {
  double energy = 0.0;
  for (int i = 0; i < mesh.vertex_count(); ++i) energy += hex_vertex_energy(mesh, i);
  return energy;
}

// Gradient of hex_energy with respect to vertex positions, accumulated from
// the summation form in vertex index order (deterministic).
inline std::vector<Vec3> hex_energy_gradient(const HexMesh& mesh) {
  std::vector<Vec3> grad(mesh.vertex_count(), Vec3::Zero());
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const auto& ring = mesh.neighbors(i);
    const int d = static_cast<int>(ring.size());
    const Vec3& pi = mesh.positions[i];
    if (d % 2 == 0) {
      for (int j = 0; j < d / 2; ++j) {
        int k = ring[j], k2 = ring[j + d / 2];
        Vec3 r = 2.0 * pi - mesh.positions[k] - mesh.positions[k2];
        grad[i] += 4.0 * r;
        grad[k] -= 2.0 * r;
        grad[k2] -= 2.0 * r;
      }
    } else {
      Vec3 mean = Vec3::Zero();
      for (int n : ring) mean += mesh.positions[n];
      mean /= static_cast<double>(d);
      Vec3 r = pi - mean;
      grad[i] += 2.0 * d * r;
      for (int n : ring) grad[n] -= 2.0 * r;
    }
  }
  return grad;
}

// Sparse symmetric stiffness matrix K (one copy per coordinate axis; the full
// 3V x 3V form is block diagonal with three copies of K). Assembled as a sum
// of rank-1 outer products of the per-term coefficient patterns, so
// s^T K s equals the per-axis contribution to hex_energy for any axis vector s.
inline RegularizerMatrix build_regularizer_matrix(const HexMesh& mesh) {
  const int nv = mesh.vertex_count();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(nv) * 12);

  auto add_outer = [&](const std::vector<std::pair<int, double>>& pattern) {
    for (const auto& [r, wr] : pattern)
      for (const auto& [c, wc] : pattern)
        trips.emplace_back(r, c, wr * wc);
  };

  for (int i = 0; i < nv; ++i) {
    const auto& ring = mesh.neighbors(i);
    const int d = static_cast<int>(ring.size());
    if (d % 2 == 0) {
      for (int j = 0; j < d / 2; ++j)
        add_outer({{i, 2.0}, {ring[j], -1.0}, {ring[j + d / 2], -1.0}});
    } else {
      // valence * (p_i - mean)^2 = (sqrt(d) * (p_i - mean))^2
      const double sd = std::sqrt(static_cast<double>(d));
      std::vector<std::pair<int, double>> pattern;
      pattern.reserve(d + 1);
      pattern.emplace_back(i, sd);
      for (int n : ring) pattern.emplace_back(n, -sd / d);
      add_outer(pattern);
    }
  }

  Eigen::SparseMatrix<double> K(nv, nv);
  K.setFromTriplets(trips.begin(), trips.end());
  K.makeCompressed();
  return K;
}

// Quadratic-form evaluation sum_axis s_axis^T K s_axis for cross-checking
// against the summation form.
inline double hex_energy_matrix_form(const Eigen::SparseMatrix<double>& K,
                                     const HexMesh& mesh) {
  const int nv = mesh.vertex_count();
  double total = 0.0;
  Eigen::VectorXd s(nv);
  for (int axis = 0; axis < 3; ++axis) {
    for (int v = 0; v < nv; ++v) s[v] = mesh.positions[v][axis];
    total += s.dot(K * s);
  }
  return total;
}

}  // namespace hexrec
