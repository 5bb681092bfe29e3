#pragma once

// 1-to-4 midpoint subdivision. Every edge gains a midpoint vertex whose
// position and feature vector are the averages of the edge endpoints; each
// face is replaced by four. Midpoint vertices always have valence 6, original
// vertices keep their valence, so the hexagonal structure is preserved.

#include "hexrec/mesh.hpp"

#include <unordered_map>

namespace hexrec {

inline HexMesh subdivide(const HexMesh& mesh) {
  check_mesh_basic(mesh);
  const int nv = mesh.vertex_count();
  const int fd = mesh.feature_dim();

  HexMesh out;
  out.positions = mesh.positions;
  out.features.resize(nv, fd);
  out.features.topRows(nv) = mesh.features;

  std::unordered_map<std::uint64_t, int> midpoint;
  midpoint.reserve(mesh.faces.size() * 3 / 2);
  auto mid = [&](int a, int b) -> int {
    auto [it, fresh] = midpoint.try_emplace(edge_key(a, b), -1);
    if (fresh) {
      it->second = static_cast<int>(out.positions.size());
      out.positions.push_back(0.5 * (mesh.positions[a] + mesh.positions[b]));
    }
    return it->second;
  };

  out.faces.reserve(mesh.faces.size() * 4);
  for (const auto& tri : mesh.faces) {
    int a = tri[0], b = tri[1], c = tri[2];
    int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    out.faces.push_back({a, ab, ca});
    out.faces.push_back({b, bc, ab});
    out.faces.push_back({c, ca, bc});
    out.faces.push_back({ab, bc, ca});
  }

  out.features.conservativeResize(out.vertex_count(), fd);
  for (const auto& [key, v] : midpoint) {
    int a = static_cast<int>(key >> 32);
    int b = static_cast<int>(key & 0xffffffffu);
    out.features.row(v) = 0.5 * (mesh.features.row(a) + mesh.features.row(b));
  }

  out.build_adjacency();
  return out;
}

}  // namespace hexrec
