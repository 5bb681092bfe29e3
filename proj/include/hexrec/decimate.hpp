#pragma once

// Quadric edge-collapse decimation. Collapses the cheapest valid edge until
// the vertex budget is met; validity means the link condition holds and no
// surviving face folds, so closed manifold meshes stay closed and manifold
// and genus is preserved.

#include "hexrec/mesh.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <queue>
#include <set>
#include <vector>

namespace hexrec {

namespace decimate_detail {

using Quadric = Eigen::Matrix4d;

inline Quadric plane_quadric(const Vec3& p0, const Vec3& p1, const Vec3& p2) {
  Vec3 n = (p1 - p0).cross(p2 - p0);
  const double area2 = n.norm();  // twice the area
  if (area2 < 1e-18) return Quadric::Zero();
  n /= area2;
  Eigen::Vector4d plane(n.x(), n.y(), n.z(), -n.dot(p0));
  return 0.5 * area2 * (plane * plane.transpose());
}

inline double quadric_cost(const Quadric& Q, const Vec3& p) {
  Eigen::Vector4d v(p.x(), p.y(), p.z(), 1.0);
  return v.dot(Q * v);
}

// Position minimizing the quadric; falls back to the best of the midpoint
// and the two endpoints when the 3x3 system is ill conditioned.
inline Vec3 optimal_position(const Quadric& Q, const Vec3& a, const Vec3& b) {
  Mat3 A = Q.topLeftCorner<3, 3>();
  Vec3 rhs = -Q.topRightCorner<3, 1>();
  Eigen::FullPivLU<Mat3> lu(A);
  lu.setThreshold(1e-9);
  if (lu.isInvertible()) {
    Vec3 x = lu.solve(rhs);
    // Reject wild solutions far from the edge.
    if ((x - 0.5 * (a + b)).norm() < 4.0 * (a - b).norm() + 1e-12) return x;
  }
  Vec3 mid = 0.5 * (a + b);
  Vec3 best = mid;
  double best_cost = quadric_cost(Q, mid);
  for (const Vec3& cand : {a, b}) {
    double c = quadric_cost(Q, cand);
    if (c < best_cost) {
      best_cost = c;
      best = cand;
    }
  }
  return best;
}

}  // namespace decimate_detail

// Decimates to approximately `target_vertices` (never below 4). Features are
// carried by endpoint averaging.
inline HexMesh decimate_qem(const HexMesh& mesh, int target_vertices) {
  using namespace decimate_detail;
  if (target_vertices < 4) throw DataError("decimation target below 4 vertices");
  check_mesh_valid(mesh);

  std::vector<Vec3> pos = mesh.positions;
  Eigen::MatrixXd feat = mesh.features;
  std::vector<std::array<int, 3>> faces = mesh.faces;
  std::vector<bool> vert_alive(pos.size(), true);
  std::vector<bool> face_alive(faces.size(), true);
  std::vector<int> version(pos.size(), 0);
  std::vector<std::vector<int>> vf(pos.size());
  for (std::size_t f = 0; f < faces.size(); ++f)
    for (int c = 0; c < 3; ++c) vf[faces[f][c]].push_back(static_cast<int>(f));

  std::vector<Quadric> quadric(pos.size(), Quadric::Zero());
  for (const auto& tri : faces) {
    Quadric q = plane_quadric(pos[tri[0]], pos[tri[1]], pos[tri[2]]);
    for (int c = 0; c < 3; ++c) quadric[tri[c]] += q;
  }

  struct Cand {
    double cost;
    int a, b;          // a < b
    int va, vb;        // versions at push time
    bool operator>(const Cand& o) const {
      if (cost != o.cost) return cost > o.cost;
      if (a != o.a) return a > o.a;
      return b > o.b;
    }
  };
  std::priority_queue<Cand, std::vector<Cand>, std::greater<Cand>> heap;

  auto push_edge = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    Quadric Q = quadric[a] + quadric[b];
    Vec3 x = optimal_position(Q, pos[a], pos[b]);
    heap.push({quadric_cost(Q, x), a, b, version[a], version[b]});
  };

  {
    std::set<std::uint64_t> seen;
    for (const auto& tri : faces)
      for (int c = 0; c < 3; ++c) {
        int a = tri[c], b = tri[(c + 1) % 3];
        if (seen.insert(edge_key(a, b)).second) push_edge(a, b);
      }
  }

  auto ring_of = [&](int v) {
    std::set<int> ring;
    for (int f : vf[v])
      if (face_alive[f])
        for (int c = 0; c < 3; ++c)
          if (faces[f][c] != v) ring.insert(faces[f][c]);
    return ring;
  };

  int alive = static_cast<int>(pos.size());
  while (alive > target_vertices && !heap.empty()) {
    Cand cand = heap.top();
    heap.pop();
    int a = cand.a, b = cand.b;
    if (!vert_alive[a] || !vert_alive[b]) continue;
    if (cand.va != version[a] || cand.vb != version[b]) continue;

    auto ring_a = ring_of(a), ring_b = ring_of(b);
    if (!ring_a.count(b)) continue;  // stale: edge no longer exists
    std::vector<int> shared;
    std::set_intersection(ring_a.begin(), ring_a.end(), ring_b.begin(),
                          ring_b.end(), std::back_inserter(shared));
    if (shared.size() != 2) continue;

    Quadric Q = quadric[a] + quadric[b];
    Vec3 x = optimal_position(Q, pos[a], pos[b]);

    std::vector<int> dropped;
    for (int f : vf[a])
      if (face_alive[f]) {
        const auto& tri = faces[f];
        if (tri[0] == b || tri[1] == b || tri[2] == b) dropped.push_back(f);
      }
    if (dropped.size() != 2) continue;

    // Fold guard on all surviving faces around both endpoints.
    auto folds = [&](int center) {
      for (int f : vf[center]) {
        if (!face_alive[f]) continue;
        if (std::find(dropped.begin(), dropped.end(), f) != dropped.end()) continue;
        auto tri = faces[f];
        Vec3 q[3], r[3];
        for (int c = 0; c < 3; ++c) {
          q[c] = pos[tri[c]];
          r[c] = (tri[c] == a || tri[c] == b) ? x : pos[tri[c]];
        }
        Vec3 before = (q[1] - q[0]).cross(q[2] - q[0]);
        Vec3 after = (r[1] - r[0]).cross(r[2] - r[0]);
        if (after.squaredNorm() < 1e-12 * before.squaredNorm() ||
            after.dot(before) <= 0.0)
          return true;
      }
      return false;
    };
    if (folds(a) || folds(b)) continue;

    // Commit: b merges into a at x.
    pos[a] = x;
    feat.row(a) = 0.5 * (feat.row(a) + feat.row(b));
    quadric[a] = Q;
    vert_alive[b] = false;
    --alive;
    for (int f : dropped) face_alive[f] = false;
    for (int f : vf[b]) {
      if (!face_alive[f]) continue;
      bool has_a = false;
      for (int c = 0; c < 3; ++c) {
        if (faces[f][c] == b) faces[f][c] = a;
        has_a |= faces[f][c] == a;
      }
      if (has_a) vf[a].push_back(f);
    }
    // Only edges touching `a` change cost (its quadric and position moved);
    // entries between untouched ring vertices stay valid in the heap.
    ++version[a];
    for (int v : ring_of(a)) push_edge(a, v);
  }

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
  out.build_adjacency();
  return out;
}

}  // namespace hexrec
