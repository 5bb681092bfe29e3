#pragma once

// Closed reference meshes: platonic solids, geodesic spheres, torus grids.
// Used by the synthetic scene generator and as test fixtures.

#include "hexrec/mesh.hpp"
#include "hexrec/subdivide.hpp"

#include <cmath>

namespace hexrec {

inline HexMesh make_icosahedron(double radius = 1.0, int feat_dim = kDefaultFeatureDim) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  HexMesh m;
  m.positions = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& p : m.positions) p = p.normalized() * radius;
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  zero_features(m, feat_dim);
  return m;
}

inline HexMesh make_octahedron(double radius = 1.0, int feat_dim = kDefaultFeatureDim) {
  HexMesh m;
  m.positions = {{radius, 0, 0},  {-radius, 0, 0}, {0, radius, 0},
                 {0, -radius, 0}, {0, 0, radius},  {0, 0, -radius}};
  m.faces = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
             {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
  zero_features(m, feat_dim);
  return m;
}

// Icosahedron subdivided `level` times with vertices projected to the sphere.
inline HexMesh make_geodesic_sphere(int level, double radius = 1.0,
                                    const Vec3& center = Vec3::Zero(),
                                    int feat_dim = kDefaultFeatureDim) {
  HexMesh m = make_icosahedron(1.0, feat_dim);
  for (int i = 0; i < level; ++i) {
    m.build_adjacency();
    m = subdivide(m);
    for (auto& p : m.positions) p.normalize();
  }
  for (auto& p : m.positions) p = center + p * radius;
  m.invalidate_adjacency();
  return m;
}

// Closed torus grid: major radius R in the xy plane, tube radius r.
inline HexMesh make_torus(double R, double r, int n_major, int n_minor,
                          int feat_dim = kDefaultFeatureDim) {
  HexMesh m;
  m.positions.reserve(static_cast<std::size_t>(n_major) * n_minor);
  for (int i = 0; i < n_major; ++i) {
    double u = 2.0 * M_PI * i / n_major;
    for (int j = 0; j < n_minor; ++j) {
      double v = 2.0 * M_PI * j / n_minor;
      double w = R + r * std::cos(v);
      m.positions.emplace_back(w * std::cos(u), w * std::sin(u), r * std::sin(v));
    }
  }
  auto idx = [&](int i, int j) { return (i % n_major) * n_minor + (j % n_minor); };
  for (int i = 0; i < n_major; ++i) {
    for (int j = 0; j < n_minor; ++j) {
      int a = idx(i, j), b = idx(i + 1, j), c = idx(i + 1, j + 1), d = idx(i, j + 1);
      // Outward CCW orientation.
      m.faces.push_back({a, b, c});
      m.faces.push_back({a, c, d});
    }
  }
  zero_features(m, feat_dim);
  return m;
}

}  // namespace hexrec
