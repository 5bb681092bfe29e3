#pragma once

// Median-split BVH over triangle faces: first-hit ray queries (Moller-
// Trumbore, deterministic smallest-face-index tie break) and closest-point
// queries (exact point-triangle distance). Traversal allocates nothing.

#include "hexrec/camera.hpp"
#include "hexrec/mesh.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace hexrec {

struct Hit {
  int face = -1;
  double b0 = 0, b1 = 0, b2 = 0;  // barycentric weights of the face corners
  double t = 0;                   // ray parameter, world units
};

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::max());

  void grow(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void grow(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  Vec3 extent() const { return hi - lo; }
  double diagonal() const { return extent().norm(); }

  // Slab test; returns entry distance or nothing. Rays starting inside hit
  // at entry 0.
  std::optional<double> ray_entry(const Ray& r, double t_max) const {
    double t0 = 0.0, t1 = t_max;
    for (int a = 0; a < 3; ++a) {
      const double inv = 1.0 / r.dir[a];
      double near = (lo[a] - r.origin[a]) * inv;
      double far = (hi[a] - r.origin[a]) * inv;
      if (inv < 0.0) std::swap(near, far);
      t0 = std::max(t0, near);
      t1 = std::min(t1, far);
      if (t0 > t1) return std::nullopt;
    }
    return t0;
  }

  double dist2_to_point(const Vec3& p) const {
    Vec3 d = (lo - p).cwiseMax(Vec3::Zero()).cwiseMax(p - hi);
    return d.squaredNorm();
  }
};

// Watertight enough for closed meshes at our scales: standard Moller-Trumbore
// with inclusive boundaries so edge-on hits register on both incident faces.
inline bool ray_triangle(const Ray& ray, const Vec3& p0, const Vec3& p1,
                         const Vec3& p2, double t_min, Hit& hit) {
  const Vec3 e1 = p1 - p0;
  const Vec3 e2 = p2 - p0;
  const Vec3 pvec = ray.dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-14) return false;
  const double inv_det = 1.0 / det;
  const Vec3 tvec = ray.origin - p0;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 qvec = tvec.cross(e1);
  const double v = ray.dir.dot(qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return false;
  const double t = e2.dot(qvec) * inv_det;
  if (t <= t_min) return false;
  hit.b0 = 1.0 - u - v;
  hit.b1 = u;
  hit.b2 = v;
  hit.t = t;
  return true;
}

struct ClosestPoint {
  double dist2 = std::numeric_limits<double>::max();
  int face = -1;
  Vec3 point = Vec3::Zero();
};

// Closest point on triangle (Ericson, Real-Time Collision Detection).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a,
                                      const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

class Bvh {
 public:
  Bvh() = default;

  explicit Bvh(const HexMesh& mesh) { build(mesh); }

  void build(const HexMesh& mesh) {
    if (mesh.faces.empty()) throw DataError("cannot build BVH over empty face list");
    const int nf = mesh.face_count();
    centroids_.resize(nf);
    boxes_.resize(nf);
    for (int f = 0; f < nf; ++f) {
      const auto& tri = mesh.faces[f];
      Aabb box;
      for (int c = 0; c < 3; ++c) box.grow(mesh.positions[tri[c]]);
      boxes_[f] = box;
      centroids_[f] = (mesh.positions[tri[0]] + mesh.positions[tri[1]] +
                       mesh.positions[tri[2]]) / 3.0;
    }
    order_.resize(nf);
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.clear();
    nodes_.reserve(static_cast<std::size_t>(2 * nf));
    build_node(0, nf);
    centroids_.clear();
    boxes_.clear();
    scene_diagonal_ = nodes_[0].box.diagonal();
  }

  double scene_diagonal() const { return scene_diagonal_; }
  const Aabb& root_box() const { return nodes_[0].box; }

  // First hit along the ray with t > t_min; ties (shared edges or vertices,
  // coincident faces) resolve to the smallest face index. The tie window is
  // a few ulps of the scene scale so that coincident faces whose t values
  // differ only by rounding still tie deterministically. Default t_min is
  // 1e-6 of the scene diagonal.
  std::optional<Hit> intersect(const HexMesh& mesh, const Ray& ray,
                               double t_min = -1.0) const {
    if (t_min < 0.0) t_min = 1e-6 * scene_diagonal_;
    const double tie = 1e-12 * scene_diagonal_;
    Hit best;
    best.t = std::numeric_limits<double>::max();
    int stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
      const Node& node = nodes_[stack[--sp]];
      auto entry = node.box.ray_entry(ray, best.t);
      if (!entry || *entry > best.t + tie) continue;
      if (node.count > 0) {
        for (int i = node.first; i < node.first + node.count; ++i) {
          const int f = order_[i];
          const auto& tri = mesh.faces[f];
          Hit h;
          if (ray_triangle(ray, mesh.positions[tri[0]], mesh.positions[tri[1]],
                           mesh.positions[tri[2]], t_min, h)) {
            h.face = f;
            if (best.face < 0 || h.t < best.t - tie ||
                (h.t <= best.t + tie && f < best.face))
              best = h;
          }
        }
      } else {
        stack[sp++] = node.right;
        stack[sp++] = node.left;
      }
    }
    if (best.face < 0) return std::nullopt;
    return best;
  }

  ClosestPoint closest_point(const HexMesh& mesh, const Vec3& p) const {
    ClosestPoint best;
    closest_rec(mesh, p, 0, best);
    return best;
  }

 private:
  struct Node {
    Aabb box;
    int left = -1, right = -1;  // internal
    int first = 0, count = 0;   // leaf when count > 0
  };

  int build_node(int begin, int end) {
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    Aabb box;
    for (int i = begin; i < end; ++i) box.grow(boxes_[order_[i]]);
    nodes_[idx].box = box;
    const int count = end - begin;
    if (count <= 4) {
      // Deterministic leaf contents regardless of partition history.
      std::sort(order_.begin() + begin, order_.begin() + end);
      nodes_[idx].first = begin;
      nodes_[idx].count = count;
      return idx;
    }
    Aabb cbox;
    for (int i = begin; i < end; ++i) cbox.grow(centroids_[order_[i]]);
    int axis = 0;
    cbox.extent().maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end, [&](int a, int b) {
                       double ca = centroids_[a][axis], cb = centroids_[b][axis];
                       return ca != cb ? ca < cb : a < b;
                     });
    const int l = build_node(begin, mid);
    const int r = build_node(mid, end);
    nodes_[idx].left = l;
    nodes_[idx].right = r;
    return idx;
  }

  void closest_rec(const HexMesh& mesh, const Vec3& p, int idx,
                   ClosestPoint& best) const {
    const Node& node = nodes_[idx];
    if (node.box.dist2_to_point(p) >= best.dist2) return;
    if (node.count > 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const int f = order_[i];
        const auto& tri = mesh.faces[f];
        Vec3 q = closest_point_on_triangle(p, mesh.positions[tri[0]],
                                           mesh.positions[tri[1]],
                                           mesh.positions[tri[2]]);
        double d2 = (q - p).squaredNorm();
        if (d2 < best.dist2) {
          best.dist2 = d2;
          best.face = f;
          best.point = q;
        }
      }
      return;
    }
    const double dl = nodes_[node.left].box.dist2_to_point(p);
    const double dr = nodes_[node.right].box.dist2_to_point(p);
    if (dl < dr) {
      closest_rec(mesh, p, node.left, best);
      closest_rec(mesh, p, node.right, best);
    } else {
      closest_rec(mesh, p, node.right, best);
      closest_rec(mesh, p, node.left, best);
    }
  }

  std::vector<Node> nodes_;
  std::vector<int> order_;
  std::vector<Vec3> centroids_;
  std::vector<Aabb> boxes_;
  double scene_diagonal_ = 0.0;
};

}  // namespace hexrec
