#pragma once

// Isotropic remeshing: split long edges, collapse short edges, flip edges
// toward valence 6, tangential smoothing with reprojection onto the input
// surface. Operations are applied in rounds over length-sorted candidate
// lists with dirty-face marking, so a single pass touches each region once
// and the result is deterministic.
//
// Collapses and flips that would break the closed-manifold invariant or fold
// triangles are skipped, never an error. Features travel with the same
// interpolation as positions (midpoint averages).

#include "hexrec/bvh.hpp"
#include "hexrec/mesh.hpp"

#include <algorithm>
#include <set>
#include <vector>

namespace hexrec {

namespace remesh_detail {

struct Work {
  std::vector<Vec3> pos;
  std::vector<std::array<int, 3>> faces;
  Eigen::MatrixXd feat;
  std::vector<bool> face_alive;
  std::vector<bool> vert_alive;

  explicit Work(const HexMesh& m)
      : pos(m.positions), faces(m.faces), feat(m.features),
        face_alive(m.faces.size(), true), vert_alive(m.positions.size(), true) {}

  HexMesh finish() const {
    HexMesh out;
    std::vector<int> remap(pos.size(), -1);
    for (std::size_t v = 0; v < pos.size(); ++v)
      if (vert_alive[v]) {
        remap[v] = static_cast<int>(out.positions.size());
        out.positions.push_back(pos[v]);
      }
    out.features.resize(out.positions.size(), feat.cols());
    for (std::size_t v = 0; v < pos.size(); ++v)
      if (remap[v] >= 0) out.features.row(remap[v]) = feat.row(v);
    for (std::size_t f = 0; f < faces.size(); ++f)
      if (face_alive[f])
        out.faces.push_back({remap[faces[f][0]], remap[faces[f][1]], remap[faces[f][2]]});
    return out;
  }
};

// vertex -> incident alive faces, rebuilt per round.
inline std::vector<std::vector<int>> vertex_faces(const Work& w) {
  std::vector<std::vector<int>> vf(w.pos.size());
  for (std::size_t f = 0; f < w.faces.size(); ++f)
    if (w.face_alive[f])
      for (int c = 0; c < 3; ++c) vf[w.faces[f][c]].push_back(static_cast<int>(f));
  return vf;
}

struct Edge {
  int a, b;      // a < b
  int f0, f1;    // incident faces
  double len;
};

inline std::vector<Edge> edges_of(const Work& w) {
  std::unordered_map<std::uint64_t, Edge> map;
  map.reserve(w.faces.size() * 3 / 2);
  for (std::size_t f = 0; f < w.faces.size(); ++f) {
    if (!w.face_alive[f]) continue;
    for (int c = 0; c < 3; ++c) {
      int a = w.faces[f][c], b = w.faces[f][(c + 1) % 3];
      auto key = edge_key(a, b);
      auto [it, fresh] = map.try_emplace(key, Edge{std::min(a, b), std::max(a, b), -1, -1, 0.0});
      (it->second.f0 < 0 ? it->second.f0 : it->second.f1) = static_cast<int>(f);
    }
  }
  std::vector<Edge> out;
  out.reserve(map.size());
  for (auto& [k, e] : map) {
    e.len = (w.pos[e.a] - w.pos[e.b]).norm();
    out.push_back(e);
  }
  std::sort(out.begin(), out.end(), [](const Edge& x, const Edge& y) {
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });
  return out;
}

inline int third_vertex(const std::array<int, 3>& tri, int a, int b) {
  for (int c = 0; c < 3; ++c)
    if (tri[c] != a && tri[c] != b) return tri[c];
  return -1;
}

inline Vec3 face_normal(const Work& w, const std::array<int, 3>& tri) {
  return (w.pos[tri[1]] - w.pos[tri[0]]).cross(w.pos[tri[2]] - w.pos[tri[0]]);
}

// Would replacing `from` by position `np` fold or squash any face of `fs`
// (excluding dropped faces)?
inline bool move_folds(const Work& w, const std::vector<int>& fs, int from,
                       const Vec3& np, const std::vector<int>& dropped) {
  for (int f : fs) {
    if (std::find(dropped.begin(), dropped.end(), f) != dropped.end()) continue;
    auto tri = w.faces[f];
    Vec3 before = face_normal(w, tri);
    Vec3 after_p[3];
    for (int c = 0; c < 3; ++c)
      after_p[c] = tri[c] == from ? np : w.pos[tri[c]];
    Vec3 after = (after_p[1] - after_p[0]).cross(after_p[2] - after_p[0]);
    double b2 = before.squaredNorm();
    if (after.squaredNorm() < 1e-10 * b2 || after.dot(before) <= 0.0) return true;
  }
  return false;
}

inline int split_round(Work& w, double max_len) {
  int done = 0;
  auto edges = edges_of(w);
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.len != y.len) return x.len > y.len;
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });
  std::vector<bool> dirty(w.faces.size(), false);
  for (const auto& e : edges) {
    if (e.len <= max_len) break;
    if (e.f0 < 0 || e.f1 < 0) continue;
    if (dirty[e.f0] || dirty[e.f1]) continue;  // retry next pass
    int m = static_cast<int>(w.pos.size());
    w.pos.push_back(0.5 * (w.pos[e.a] + w.pos[e.b]));
    w.vert_alive.push_back(true);
    w.feat.conservativeResize(w.feat.rows() + 1, w.feat.cols());
    w.feat.row(m) = 0.5 * (w.feat.row(e.a) + w.feat.row(e.b));

    // Rewrite each incident face into two, preserving orientation.
    for (int f : {e.f0, e.f1}) {
      auto tri = w.faces[f];
      std::array<int, 3> first = tri, second = tri;
      for (int c = 0; c < 3; ++c) {
        int u = tri[c], v = tri[(c + 1) % 3];
        if ((u == e.a && v == e.b) || (u == e.b && v == e.a)) {
          first[(c + 1) % 3] = m;
          second[c] = m;
          break;
        }
      }
      w.faces[f] = first;
      w.face_alive[f] = true;
      w.faces.push_back(second);
      w.face_alive.push_back(true);
      dirty.push_back(true);
      dirty[f] = true;
    }
    ++done;
  }
  return done;
}

// Edges blocked by dirty marks retry in the next round; loop to quiescence.
inline void split_pass(Work& w, double max_len) {
  for (int round = 0; round < 64; ++round)
    if (split_round(w, max_len) == 0) break;
}

inline int collapse_round(Work& w, double min_len, double max_len) {
  int done = 0;
  auto vf = vertex_faces(w);
  auto edges = edges_of(w);
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.len != y.len) return x.len < y.len;
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });
  std::vector<bool> dirty_v(w.pos.size(), false);

  auto ring_of = [&](int v) {
    std::set<int> ring;
    for (int f : vf[v])
      if (w.face_alive[f])
        for (int c = 0; c < 3; ++c)
          if (w.faces[f][c] != v) ring.insert(w.faces[f][c]);
    return ring;
  };

  for (const auto& e : edges) {
    if (e.len >= min_len) break;
    if (dirty_v[e.a] || dirty_v[e.b]) continue;
    if (!w.vert_alive[e.a] || !w.vert_alive[e.b]) continue;

    auto ring_a = ring_of(e.a), ring_b = ring_of(e.b);
    bool any_dirty = false;
    for (int v : ring_a) any_dirty |= dirty_v[v];
    for (int v : ring_b) any_dirty |= dirty_v[v];
    if (any_dirty) continue;

    // Link condition: shared ring must be exactly the two opposite corners.
    std::vector<int> shared;
    std::set_intersection(ring_a.begin(), ring_a.end(), ring_b.begin(),
                          ring_b.end(), std::back_inserter(shared));
    if (shared.size() != 2) continue;

    Vec3 mid = 0.5 * (w.pos[e.a] + w.pos[e.b]);

    // Collapse must not create overlong edges.
    bool too_long = false;
    for (int v : ring_a)
      too_long |= v != e.b && (w.pos[v] - mid).norm() > max_len;
    for (int v : ring_b)
      too_long |= v != e.a && (w.pos[v] - mid).norm() > max_len;
    if (too_long) continue;

    // The two faces of the edge disappear; survivors must not fold.
    std::vector<int> dropped;
    for (int f : vf[e.a])
      if (w.face_alive[f]) {
        const auto& tri = w.faces[f];
        bool has_b = tri[0] == e.b || tri[1] == e.b || tri[2] == e.b;
        if (has_b) dropped.push_back(f);
      }
    if (dropped.size() != 2) continue;
    if (move_folds(w, vf[e.a], e.a, mid, dropped)) continue;
    if (move_folds(w, vf[e.b], e.b, mid, dropped)) continue;

    // Commit: b merges into a at the midpoint.
    w.pos[e.a] = mid;
    w.feat.row(e.a) = 0.5 * (w.feat.row(e.a) + w.feat.row(e.b));
    w.vert_alive[e.b] = false;
    for (int f : dropped) w.face_alive[f] = false;
    for (int f : vf[e.b]) {
      if (!w.face_alive[f]) continue;
      for (int c = 0; c < 3; ++c)
        if (w.faces[f][c] == e.b) w.faces[f][c] = e.a;
      vf[e.a].push_back(f);
    }
    dirty_v[e.a] = true;
    for (int v : ring_a) dirty_v[v] = true;
    for (int v : ring_b) dirty_v[v] = true;
    ++done;
  }
  return done;
}

inline void collapse_pass(Work& w, double min_len, double max_len) {
  for (int round = 0; round < 64; ++round)
    if (collapse_round(w, min_len, max_len) == 0) break;
}

inline int flip_round(Work& w) {
  int done = 0;
  std::vector<int> valence(w.pos.size(), 0);
  {
    auto edges = edges_of(w);
    for (const auto& e : edges) {
      ++valence[e.a];
      ++valence[e.b];
    }
    std::vector<bool> dirty(w.faces.size(), false);
    std::set<std::uint64_t> existing;
    for (const auto& e : edges) existing.insert(edge_key(e.a, e.b));

    auto dev = [&](int v, int delta) {
      int d = valence[v] + delta - 6;
      return d * d;
    };

    for (const auto& e : edges) {
      if (e.f0 < 0 || e.f1 < 0) continue;
      if (dirty[e.f0] || dirty[e.f1]) continue;
      int c = third_vertex(w.faces[e.f0], e.a, e.b);
      int d = third_vertex(w.faces[e.f1], e.a, e.b);
      if (c < 0 || d < 0 || c == d) continue;
      if (existing.count(edge_key(c, d))) continue;

      int before = dev(e.a, 0) + dev(e.b, 0) + dev(c, 0) + dev(d, 0);
      int after = dev(e.a, -1) + dev(e.b, -1) + dev(c, 1) + dev(d, 1);
      if (after >= before) continue;
      if (valence[e.a] <= 3 || valence[e.b] <= 3) continue;

      // Orientation bookkeeping: let f0 = (a, b, c) up to rotation; then
      // f1 = (b, a, d) and the flip produces (a, d, c) and (d, b, c).
      int a = e.a, b = e.b;
      {
        const auto& t0 = w.faces[e.f0];
        bool ab = false;
        for (int k = 0; k < 3; ++k)
          if (t0[k] == a && t0[(k + 1) % 3] == b) ab = true;
        if (!ab) std::swap(a, b);
      }
      std::array<int, 3> nf0 = {a, d, c};
      std::array<int, 3> nf1 = {d, b, c};
      Vec3 n0 = face_normal(w, nf0), n1 = face_normal(w, nf1);
      Vec3 o0 = face_normal(w, w.faces[e.f0]), o1 = face_normal(w, w.faces[e.f1]);
      Vec3 old_dir = o0 + o1;
      double scale = o0.norm() + o1.norm();
      if (n0.norm() < 1e-10 * scale || n1.norm() < 1e-10 * scale) continue;
      if (n0.dot(old_dir) <= 0.0 || n1.dot(old_dir) <= 0.0) continue;

      w.faces[e.f0] = nf0;
      w.faces[e.f1] = nf1;
      dirty[e.f0] = dirty[e.f1] = true;
      existing.erase(edge_key(a, b));
      existing.insert(edge_key(c, d));
      --valence[a];
      --valence[b];
      ++valence[c];
      ++valence[d];
      ++done;
    }
  }
  return done;
}

inline void flip_pass(Work& w) {
  for (int round = 0; round < 8; ++round)
    if (flip_round(w) == 0) break;
}

inline void smooth_pass(Work& w, const HexMesh& reference, const Bvh& ref_bvh,
                        double lambda) {
  auto vf = vertex_faces(w);
  const std::vector<Vec3> snapshot = w.pos;

  // Area-weighted vertex normals from the snapshot.
  std::vector<Vec3> vnorm(w.pos.size(), Vec3::Zero());
  for (std::size_t f = 0; f < w.faces.size(); ++f) {
    if (!w.face_alive[f]) continue;
    Vec3 n = face_normal(w, w.faces[f]);
    for (int c = 0; c < 3; ++c) vnorm[w.faces[f][c]] += n;
  }

  for (std::size_t v = 0; v < w.pos.size(); ++v) {
    if (!w.vert_alive[v] || vf[v].empty()) continue;
    std::set<int> ring;
    for (int f : vf[v])
      if (w.face_alive[f])
        for (int c = 0; c < 3; ++c)
          if (w.faces[f][c] != static_cast<int>(v)) ring.insert(w.faces[f][c]);
    if (ring.empty()) continue;
    Vec3 centroid = Vec3::Zero();
    for (int r : ring) centroid += snapshot[r];
    centroid /= static_cast<double>(ring.size());

    Vec3 n = vnorm[v];
    double len = n.norm();
    Vec3 step = centroid - snapshot[v];
    if (len > 1e-12) {
      n /= len;
      step -= n * n.dot(step);  // tangential component only
    }
    Vec3 candidate = snapshot[v] + lambda * step;
    auto cp = ref_bvh.closest_point(reference, candidate);
    candidate = cp.point;

    // Zero-area or folded incident face rejects the move.
    if (move_folds(w, vf[v], static_cast<int>(v), candidate, {})) continue;
    w.pos[v] = candidate;
  }
}

}  // namespace remesh_detail

// Botsch-style isotropic remeshing toward `target_edge_len`. The input must
// be closed and manifold; the output is too. passes = 0 returns the mesh
// unchanged.
inline HexMesh isotropic_remesh(const HexMesh& mesh, double target_edge_len,
                                int passes = 5) {
  if (target_edge_len <= 0.0) throw DataError("target edge length must be positive");
  check_mesh_valid(mesh);
  if (passes <= 0) return mesh;

  const double max_len = 4.0 / 3.0 * target_edge_len;
  const double min_len = 4.0 / 5.0 * target_edge_len;

  Bvh ref_bvh(mesh);
  remesh_detail::Work w(mesh);
  for (int pass = 0; pass < passes; ++pass) {
    remesh_detail::split_pass(w, max_len);
    remesh_detail::collapse_pass(w, min_len, max_len);
    remesh_detail::flip_pass(w);
    remesh_detail::smooth_pass(w, mesh, ref_bvh, 0.5);
  }
  HexMesh out = w.finish();
  out.build_adjacency();
  return out;
}

}  // namespace hexrec
