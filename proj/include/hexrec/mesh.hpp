#pragma once

// Explicit triangle mesh with per-vertex feature vectors and cached cyclic
// one-ring adjacency. Meshes are expected to be closed, manifold and
// consistently oriented (counter-clockwise as seen from outside); adjacency
// construction verifies this and reports the offending edge otherwise.

#include "hexrec/core.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace hexrec {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// Undirected edge with its two incident faces (fa borders the a->b direction).
struct EdgeRec {
  int a, b;
  int fa, fb;
};

struct HexMesh {
  std::vector<Vec3> positions;
  std::vector<std::array<int, 3>> faces;
  Eigen::MatrixXd features;  // one row per vertex

  int vertex_count() const { return static_cast<int>(positions.size()); }
  int face_count() const { return static_cast<int>(faces.size()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }

  bool adjacency_built() const { return adjacency_valid_; }

  // Neighbors of v in counter-clockwise order around the outward normal,
  // starting from the smallest-index neighbor.
  const std::vector<int>& neighbors(int v) const {
    if (!adjacency_valid_)
      throw std::logic_error("HexMesh adjacency queried before build_adjacency()");
    return adjacency_[v];
  }

  int valence(int v) const { return static_cast<int>(neighbors(v).size()); }

  void invalidate_adjacency() {
    adjacency_valid_ = false;
    adjacency_.clear();
  }

  void build_adjacency();

 private:
  std::vector<std::vector<int>> adjacency_;
  bool adjacency_valid_ = false;
};

namespace detail {
inline std::string edge_str(int a, int b) {
  return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
}
}  // namespace detail

// Checks structural invariants that do not need adjacency: index ranges,
// degenerate faces, feature row count.
inline void check_mesh_basic(const HexMesh& mesh) {
  const int nv = mesh.vertex_count();
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& tri = mesh.faces[f];
    for (int c = 0; c < 3; ++c)
      if (tri[c] < 0 || tri[c] >= nv)
        throw TopologyError("face " + std::to_string(f) +
                            " references vertex " + std::to_string(tri[c]) +
                            " out of range");
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw TopologyError("degenerate face " + std::to_string(f));
  }
  if (mesh.features.rows() != nv)
    throw DataError("feature rows (" + std::to_string(mesh.features.rows()) +
                    ") do not match vertex count (" + std::to_string(nv) + ")");
}

inline void HexMesh::build_adjacency() {
  check_mesh_basic(*this);
  const int nv = vertex_count();

  // Directed-edge map; a closed oriented manifold has every directed edge
  // exactly once and its reverse exactly once.
  std::unordered_map<std::uint64_t, int> directed;  // (a<<32|b) -> face
  directed.reserve(faces.size() * 3);
  auto dkey = [](int a, int b) {
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int c = 0; c < 3; ++c) {
      int a = faces[f][c], b = faces[f][(c + 1) % 3];
      if (!directed.emplace(dkey(a, b), static_cast<int>(f)).second)
        throw TopologyError("non-manifold edge " + detail::edge_str(a, b) +
                            ": directed edge used by more than one face");
    }
  }
  for (const auto& [key, f] : directed) {
    int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
    if (!directed.count(dkey(b, a)))
      throw TopologyError("boundary edge " + detail::edge_str(a, b) +
                          ": mesh is not closed (edge has only one face)");
  }

  // Around vertex i, face (i, j, k) maps neighbor j to its CCW successor k.
  std::vector<std::vector<std::pair<int, int>>> succ(nv);
  for (const auto& tri : faces) {
    for (int c = 0; c < 3; ++c) {
      int i = tri[c], j = tri[(c + 1) % 3], k = tri[(c + 2) % 3];
      succ[i].emplace_back(j, k);
    }
  }

  adjacency_.assign(nv, {});
  for (int v = 0; v < nv; ++v) {
    auto& ring = succ[v];
    if (ring.empty())
      throw TopologyError("isolated vertex " + std::to_string(v));
    int start = ring[0].first;
    for (const auto& [j, k] : ring) start = std::min(start, j);
    auto next_of = [&](int j) -> int {
      for (const auto& [a, b] : ring)
        if (a == j) return b;
      return -1;
    };
    std::vector<int>& out = adjacency_[v];
    int cur = start;
    do {
      out.push_back(cur);
      cur = next_of(cur);
      if (cur < 0)
        throw TopologyError("vertex " + std::to_string(v) +
                            ": one-ring walk broke (open or non-manifold)");
      if (out.size() > ring.size())
        throw TopologyError("vertex " + std::to_string(v) +
                            ": one-ring walk does not close");
    } while (cur != start);
    if (out.size() != ring.size())
      throw TopologyError("vertex " + std::to_string(v) +
                          ": multiple fans (non-manifold vertex)");
  }
  adjacency_valid_ = true;
}

// Undirected edge list in deterministic order (sorted by (min,max) index),
// with the two incident faces. Requires a closed oriented mesh.
inline std::vector<EdgeRec> edge_list(const HexMesh& mesh) {
  std::unordered_map<std::uint64_t, EdgeRec> edges;
  edges.reserve(mesh.faces.size() * 3 / 2);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& tri = mesh.faces[f];
    for (int c = 0; c < 3; ++c) {
      int a = tri[c], b = tri[(c + 1) % 3];
      auto [it, fresh] = edges.try_emplace(edge_key(a, b),
                                           EdgeRec{std::min(a, b), std::max(a, b), -1, -1});
      // Face on the (min->max) side goes to fa, the reverse to fb.
      if (a < b) {
        if (it->second.fa >= 0)
          throw TopologyError("non-manifold edge " + detail::edge_str(a, b));
        it->second.fa = static_cast<int>(f);
      } else {
        if (it->second.fb >= 0)
          throw TopologyError("non-manifold edge " + detail::edge_str(b, a));
        it->second.fb = static_cast<int>(f);
      }
    }
  }
  std::vector<EdgeRec> out;
  out.reserve(edges.size());
  for (const auto& [k, e] : edges) {
    if (e.fa < 0 || e.fb < 0)
      throw TopologyError("boundary edge " + detail::edge_str(e.a, e.b));
    out.push_back(e);
  }
  std::sort(out.begin(), out.end(), [](const EdgeRec& x, const EdgeRec& y) {
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });
  return out;
}

inline int edge_count(const HexMesh& mesh) {
  return static_cast<int>(edge_list(mesh).size());
}

inline int euler_characteristic(const HexMesh& mesh) {
  return mesh.vertex_count() - edge_count(mesh) + mesh.face_count();
}

// Full invariant check: basics + closed-manifold adjacency. Copies the mesh
// so it can be used on const references in tests.
inline void check_mesh_valid(const HexMesh& mesh) {
  HexMesh copy = mesh;
  copy.build_adjacency();
}

inline double surface_area(const HexMesh& mesh) {
  double area = 0.0;
  for (const auto& f : mesh.faces)
    area += 0.5 * ((mesh.positions[f[1]] - mesh.positions[f[0]])
                       .cross(mesh.positions[f[2]] - mesh.positions[f[0]]))
                      .norm();
  return area;
}

inline double mean_edge_length(const HexMesh& mesh) {
  auto edges = edge_list(mesh);
  if (edges.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : edges)
    total += (mesh.positions[e.a] - mesh.positions[e.b]).norm();
  return total / static_cast<double>(edges.size());
}

inline int count_valence(const HexMesh& mesh, int target) {
  int n = 0;
  for (int v = 0; v < mesh.vertex_count(); ++v)
    if (mesh.valence(v) == target) ++n;
  return n;
}

inline void zero_features(HexMesh& mesh, int feat_dim = kDefaultFeatureDim) {
  mesh.features = Eigen::MatrixXd::Zero(mesh.vertex_count(), feat_dim);
}

// Keeps only the face-connected component with the most faces (visual hulls
// can contain detached blobs wherever no camera frustum reaches).
inline HexMesh keep_largest_component(const HexMesh& mesh) {
  const int nf = mesh.face_count();
  std::vector<int> parent(nf);
  for (int f = 0; f < nf; ++f) parent[f] = f;
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  std::unordered_map<std::uint64_t, int> first_face;
  first_face.reserve(nf * 3 / 2);
  for (int f = 0; f < nf; ++f)
    for (int c = 0; c < 3; ++c) {
      auto key = edge_key(mesh.faces[f][c], mesh.faces[f][(c + 1) % 3]);
      auto [it, fresh] = first_face.try_emplace(key, f);
      if (!fresh) parent[find(f)] = find(it->second);
    }

  std::unordered_map<int, int> count;
  for (int f = 0; f < nf; ++f) ++count[find(f)];
  int best_root = -1, best = -1;
  for (int f = 0; f < nf; ++f) {
    int r = find(f);
    if (count[r] > best || (count[r] == best && r < best_root)) {
      best = count[r];
      best_root = r;
    }
  }

  HexMesh out;
  std::vector<int> vmap(mesh.vertex_count(), -1);
  for (int f = 0; f < nf; ++f) {
    if (find(f) != best_root) continue;
    std::array<int, 3> tri;
    for (int c = 0; c < 3; ++c) {
      int v = mesh.faces[f][c];
      if (vmap[v] < 0) {
        vmap[v] = static_cast<int>(out.positions.size());
        out.positions.push_back(mesh.positions[v]);
      }
      tri[c] = vmap[v];
    }
    out.faces.push_back(tri);
  }
  out.features.resize(out.positions.size(), mesh.features.cols());
  for (int v = 0; v < mesh.vertex_count(); ++v)
    if (vmap[v] >= 0) out.features.row(vmap[v]) = mesh.features.row(v);
  return out;
}

}  // namespace hexrec
