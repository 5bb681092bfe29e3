#pragma once

// Isosurface extraction from a scalar field sampled on a regular grid of
// voxel centers. Each grid cell is decomposed into six tetrahedra (Kuhn
// split, uniform orientation so shared cell faces agree); the level set of
// the piecewise-linear interpolant is then a closed manifold surface by
// construction, with none of the face ambiguities of the classic cube
// tables. Triangles are oriented with normals pointing toward lower field
// values (outward for occupancy-style fields).

#include "hexrec/mesh.hpp"

#include <array>
#include <unordered_map>
#include <vector>

namespace hexrec {

struct GridSpec {
  Vec3 origin;     // center of voxel (0,0,0)
  Vec3 spacing;    // distance between adjacent voxel centers per axis
  std::array<int, 3> res;

  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * res[1] + y) * res[0] + x;
  }
  Vec3 center(int x, int y, int z) const {
    return origin + Vec3(x * spacing.x(), y * spacing.y(), z * spacing.z());
  }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(res[0]) * res[1] * res[2];
  }
};

namespace iso_detail {

// Corner offsets of a cell, indexed bit-wise (x = bit0, y = bit1, z = bit2).
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};

// Six tetrahedra of the Kuhn decomposition, all sharing the 0-7 diagonal.
// Every cube face is cut by the diagonal through its corner nearest 0 and
// the corner nearest 7, so neighboring cells tessellate consistently.
constexpr int kTets[6][4] = {{0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7},
                             {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7}};

}  // namespace iso_detail

// Extracts the `iso` level set of `field` (one value per voxel center).
// Requires the level set to avoid grid points exactly (true for occupancy
// fields at iso=0.5). Throws NumericError when the field does not cross iso.
inline HexMesh extract_isosurface(const GridSpec& grid,
                                  const std::vector<double>& field, double iso,
                                  int feat_dim = kDefaultFeatureDim) {
  if (field.size() != grid.cell_count())
    throw DataError("field size does not match grid resolution");

  HexMesh mesh;
  std::unordered_map<std::uint64_t, int> edge_vertex;

  auto vertex_on_edge = [&](std::size_t ia, std::size_t ib, const Vec3& pa,
                            const Vec3& pb, double fa, double fb) -> int {
    std::uint64_t key = ia < ib ? (static_cast<std::uint64_t>(ia) << 32 | ib)
                                : (static_cast<std::uint64_t>(ib) << 32 | ia);
    auto [it, fresh] = edge_vertex.try_emplace(key, -1);
    if (fresh) {
      const double t = (iso - fa) / (fb - fa);
      it->second = static_cast<int>(mesh.positions.size());
      mesh.positions.push_back(pa + t * (pb - pa));
    }
    return it->second;
  };

  auto emit = [&](int a, int b, int c, const Vec3& inside_to_outside) {
    Vec3 n = (mesh.positions[b] - mesh.positions[a])
                 .cross(mesh.positions[c] - mesh.positions[a]);
    if (n.dot(inside_to_outside) >= 0.0)
      mesh.faces.push_back({a, b, c});
    else
      mesh.faces.push_back({a, c, b});
  };

  for (int z = 0; z + 1 < grid.res[2]; ++z) {
    for (int y = 0; y + 1 < grid.res[1]; ++y) {
      for (int x = 0; x + 1 < grid.res[0]; ++x) {
        std::size_t cidx[8];
        Vec3 cpos[8];
        double cval[8];
        for (int c = 0; c < 8; ++c) {
          const int cx = x + iso_detail::kCorner[c][0];
          const int cy = y + iso_detail::kCorner[c][1];
          const int cz = z + iso_detail::kCorner[c][2];
          cidx[c] = grid.index(cx, cy, cz);
          cpos[c] = grid.center(cx, cy, cz);
          cval[c] = field[cidx[c]];
        }
        for (const auto& tet : iso_detail::kTets) {
          int above[4], below[4];
          int na = 0, nb = 0;
          for (int c = 0; c < 4; ++c) {
            if (cval[tet[c]] > iso)
              above[na++] = tet[c];
            else
              below[nb++] = tet[c];
          }
          if (na == 0 || nb == 0) continue;

          auto ev = [&](int hi, int lo) {
            return vertex_on_edge(cidx[hi], cidx[lo], cpos[hi], cpos[lo],
                                  cval[hi], cval[lo]);
          };
          Vec3 hi_centroid = Vec3::Zero(), lo_centroid = Vec3::Zero();
          for (int c = 0; c < na; ++c) hi_centroid += cpos[above[c]];
          for (int c = 0; c < nb; ++c) lo_centroid += cpos[below[c]];
          const Vec3 out_dir = lo_centroid / nb - hi_centroid / na;

          if (na == 1) {
            emit(ev(above[0], below[0]), ev(above[0], below[1]),
                 ev(above[0], below[2]), out_dir);
          } else if (na == 3) {
            emit(ev(above[0], below[0]), ev(above[1], below[0]),
                 ev(above[2], below[0]), out_dir);
          } else {
            // Two above, two below: quad strip split into two triangles.
            const int q00 = ev(above[0], below[0]);
            const int q01 = ev(above[0], below[1]);
            const int q11 = ev(above[1], below[1]);
            const int q10 = ev(above[1], below[0]);
            emit(q00, q01, q11, out_dir);
            emit(q00, q11, q10, out_dir);
          }
        }
      }
    }
  }

  if (mesh.faces.empty())
    throw NumericError("no isosurface: field does not cross the iso level");
  zero_features(mesh, feat_dim);
  mesh.build_adjacency();
  return mesh;
}

}  // namespace hexrec
