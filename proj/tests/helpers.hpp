#pragma once

// Shared fixtures for the test suites.

#include "hexrec/core.hpp"
#include "hexrec/mesh.hpp"
#include "hexrec/primitives.hpp"

#include <vector>

namespace hexrec::testing {

// Minimal closed mesh: one triangle seen from both sides (3 vertices, 2
// faces, 3 edges, Euler characteristic 2). Geometrically degenerate but
// combinatorially a valid closed manifold; used for tiny end-to-end scenes.
inline HexMesh make_pillow(const Vec3& a, const Vec3& b, const Vec3& c,
                           int feat_dim = kDefaultFeatureDim) {
  HexMesh m;
  m.positions = {a, b, c};
  m.faces = {{0, 1, 2}, {0, 2, 1}};
  zero_features(m, feat_dim);
  m.build_adjacency();
  return m;
}

// Regular triangular lattice patch doubled into a closed pillow. Interior
// vertices of the front sheet keep perfectly centrosymmetric planar rings.
// Lattice steps are exactly representable in binary so interior second
// differences cancel exactly.
struct LatticePillow {
  HexMesh mesh;
  std::vector<int> front_interior;  // vertex ids with exact hexagonal rings
};

inline LatticePillow make_lattice_pillow(int w, int h) {
  LatticePillow out;
  HexMesh& m = out.mesh;
  auto front = [&](int i, int j) { return j * w + i; };
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i)
      m.positions.emplace_back(i + 0.5 * j, 0.875 * j, 0.0);

  // Back-sheet copies of interior vertices; boundary vertices are shared.
  std::vector<int> back_id(static_cast<std::size_t>(w) * h);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      bool boundary = i == 0 || j == 0 || i == w - 1 || j == h - 1;
      if (boundary) {
        back_id[front(i, j)] = front(i, j);
      } else {
        back_id[front(i, j)] = static_cast<int>(m.positions.size());
        m.positions.push_back(m.positions[front(i, j)]);
        // Vertices at margin >= 2 are untouched by the corner-cell diagonal
        // flips below and keep the exact hexagonal lattice ring.
        if (i >= 2 && j >= 2 && i <= w - 3 && j <= h - 3)
          out.front_interior.push_back(front(i, j));
      }
    }

  auto on_boundary = [&](int i, int j) {
    return i == 0 || j == 0 || i == w - 1 || j == h - 1;
  };
  auto emit = [&](int x, int y, int z) {
    m.faces.push_back({x, y, z});
    m.faces.push_back({back_id[x], back_id[z], back_id[y]});
  };
  for (int j = 0; j + 1 < h; ++j)
    for (int i = 0; i + 1 < w; ++i) {
      int a = front(i, j), b = front(i + 1, j), c = front(i + 1, j + 1), d = front(i, j + 1);
      // A diagonal between two shared boundary vertices would coincide with
      // its back-sheet copy; flip the split in that case.
      if (on_boundary(i, j) && on_boundary(i + 1, j + 1)) {
        emit(a, b, d);
        emit(b, c, d);
      } else {
        emit(a, b, c);
        emit(a, c, d);
      }
    }
  zero_features(m);
  m.build_adjacency();
  return out;
}

// Geodesic sphere with vertex positions jittered by `amp` (deterministic).
inline HexMesh make_random_mesh(int level, double amp, std::uint64_t seed) {
  HexMesh m = make_geodesic_sphere(level);
  Rng rng(seed);
  for (auto& p : m.positions)
    p += amp * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  m.build_adjacency();
  return m;
}

}  // namespace hexrec::testing

#include "hexrec/scene.hpp"

namespace hexrec::testing {

// The smallest full-gradient scene: a two-faced triangle (pillow), one 8x8
// camera, generic geometry so no pixel center sits near a silhouette edge
// or an antialiasing-band threshold.
struct TinyScene {
  HexMesh mesh;
  View view;
};

inline TinyScene make_tiny_scene() {
  TinyScene out;
  out.mesh = make_pillow(Vec3(-0.83, -0.57, 0.11), Vec3(0.91, -0.42, -0.06),
                         Vec3(0.07, 0.86, 0.02));
  Rng rng(1234);
  for (int v = 0; v < out.mesh.vertex_count(); ++v)
    for (int c = 0; c < out.mesh.feature_dim(); ++c)
      out.mesh.features(v, c) = rng.uniform(-0.5, 0.5);

  Camera cam;
  cam.width = cam.height = 8;
  cam.fx = cam.fy = 12.0;
  cam.cx = cam.cy = 4.0;
  cam.rotation = Mat3::Identity();
  cam.translation = Vec3(0.03, -0.02, 4.0);  // camera near -z looking at +z
  out.view.camera = cam;

  // Reference data chosen away from the untrained render (mid gray, face
  // normal) so the L1 losses stay locally smooth.
  out.view.image = ImageF(8, 8, 3, 0.0);
  out.view.mask = ImageU8(8, 8, 1, 0);
  ImageF normals(8, 8, 3, 0.0);
  const Vec3 target_n = Vec3(0.3, 0.42, -0.85).normalized();
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      out.view.image.at(x, y, 0) = 0.05 + 0.02 * x;
      out.view.image.at(x, y, 1) = 0.93 - 0.03 * y;
      out.view.image.at(x, y, 2) = 0.10 + 0.015 * (x + y);
      // Target mask: a shifted box, deliberately not the rendered silhouette.
      out.view.mask.at(x, y) = (x >= 2 && x <= 6 && y >= 1 && y <= 5) ? 255 : 0;
      set_pixel_rgb(normals, x, y, target_n);
    }
  out.view.normals = normals;
  return out;
}

}  // namespace hexrec::testing
