#pragma once

// Antialiased silhouette coverage with screen-space gradients.
//
// Interior pixels (ray hits) have coverage 1, exterior 0. Pixels whose
// center lies within half a pixel of a projected silhouette edge get
// fractional coverage clamp(0.5 + sd, 0, 1), where sd is the signed distance
// in pixels from the pixel center to the nearest silhouette edge (positive
// inside). Coverage is differentiable with respect to the 3D positions of
// the silhouette edge endpoints through the projected point-to-segment
// distance; the inside/outside sign is locally constant and carries no
// gradient.

#include "hexrec/bvh.hpp"
#include "hexrec/camera.hpp"
#include "hexrec/image.hpp"
#include "hexrec/interpolate.hpp"
#include "hexrec/mesh.hpp"

#include <vector>

namespace hexrec {

struct SilhouetteEdge {
  int va, vb;
};

// Edges whose two incident faces face opposite ways relative to the camera.
inline std::vector<SilhouetteEdge> silhouette_edges(
    const HexMesh& mesh, const std::vector<Vec3>& face_norms, const Camera& cam) {
  const Vec3 eye = cam.center();
  std::vector<SilhouetteEdge> out;
  for (const auto& e : edge_list(mesh)) {
    auto front = [&](int f) {
      const auto& tri = mesh.faces[f];
      const Vec3 c = (mesh.positions[tri[0]] + mesh.positions[tri[1]] +
                      mesh.positions[tri[2]]) / 3.0;
      return face_norms[f].dot(c - eye) < 0.0;
    };
    if (front(e.fa) != front(e.fb)) out.push_back({e.a, e.b});
  }
  return out;
}

struct CoverageResult {
  ImageF coverage;            // single channel in [0,1]
  std::vector<int> band_edge; // per pixel: nearest silhouette edge, -1 outside the band
  std::vector<double> band_sign;
};

namespace silhouette_detail {

struct Seg2 {
  Vec2 a, b;
  bool valid = false;
};

inline std::vector<Seg2> project_edges(const HexMesh& mesh,
                                       const std::vector<SilhouetteEdge>& edges,
                                       const Camera& cam) {
  std::vector<Seg2> segs(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    auto pa = cam.project(mesh.positions[edges[i].va]);
    auto pb = cam.project(mesh.positions[edges[i].vb]);
    if (!pa.in_front || !pb.in_front) continue;  // behind-camera edges skipped
    segs[i] = {Vec2(pa.u, pa.v), Vec2(pb.u, pb.v), true};
  }
  return segs;
}

// Distance from q to segment (a,b) plus the clamped parameter s.
inline double point_segment_distance(const Vec2& q, const Vec2& a, const Vec2& b,
                                     double& s) {
  const Vec2 w = b - a;
  const double len2 = w.squaredNorm();
  s = len2 > 0.0 ? std::clamp((q - a).dot(w) / len2, 0.0, 1.0) : 0.0;
  return (q - (a + s * w)).norm();
}

}  // namespace silhouette_detail

// Coverage from a precomputed hit mask (1 = ray hits the mesh at that pixel).
inline CoverageResult silhouette_coverage_from_hits(
    const HexMesh& mesh, const std::vector<SilhouetteEdge>& edges,
    const Camera& cam, const ImageU8& hit_mask) {
  using namespace silhouette_detail;
  const int W = cam.width, H = cam.height;
  CoverageResult out;
  out.coverage = ImageF(W, H, 1, 0.0);
  out.band_edge.assign(static_cast<std::size_t>(W) * H, -1);
  out.band_sign.assign(static_cast<std::size_t>(W) * H, 0.0);

  auto segs = project_edges(mesh, edges, cam);

  // Conservative rasterization of each segment into per-pixel candidate
  // buckets with a 2-pixel apron.
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(W) * H);
  for (std::size_t e = 0; e < segs.size(); ++e) {
    if (!segs[e].valid) continue;
    const Vec2 a = segs[e].a, b = segs[e].b;
    const double len = (b - a).norm();
    const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.5)));
    for (int i = 0; i <= steps; ++i) {
      const Vec2 p = a + (b - a) * (static_cast<double>(i) / steps);
      const int cx = static_cast<int>(std::floor(p.x()));
      const int cy = static_cast<int>(std::floor(p.y()));
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
          const int x = cx + dx, y = cy + dy;
          if (x < 0 || x >= W || y < 0 || y >= H) continue;
          auto& bucket = buckets[static_cast<std::size_t>(y) * W + x];
          if (bucket.empty() || bucket.back() != static_cast<int>(e))
            bucket.push_back(static_cast<int>(e));
        }
    }
  }

  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * W + x;
      const bool hit = hit_mask.at(x, y) != 0;
      double cov = hit ? 1.0 : 0.0;
      const auto& bucket = buckets[idx];
      if (!bucket.empty()) {
        const Vec2 q(x + 0.5, y + 0.5);
        double best = std::numeric_limits<double>::max();
        int best_edge = -1;
        for (int e : bucket) {
          double s;
          double d = point_segment_distance(q, segs[e].a, segs[e].b, s);
          if (d < best) {
            best = d;
            best_edge = e;
          }
        }
        const double sign = hit ? 1.0 : -1.0;
        const double sd = sign * best;
        if (sd > -0.5 && sd < 0.5) {
          cov = 0.5 + sd;
          out.band_edge[idx] = best_edge;
          out.band_sign[idx] = sign;
        }
      }
      out.coverage.at(x, y) = cov;
    }
  }
  return out;
}

// Standalone form: casts one ray per pixel to build the hit mask.
inline CoverageResult silhouette_coverage(const HexMesh& mesh, const Bvh& bvh,
                                          const Camera& cam) {
  ImageU8 hits(cam.width, cam.height, 1, 0);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x)
      if (bvh.intersect(mesh, cam.ray_for_pixel(x, y))) hits.at(x, y) = 1;
  auto fn = face_normals_unnormalized(mesh);
  return silhouette_coverage_from_hits(mesh, silhouette_edges(mesh, fn, cam), cam,
                                       hits);
}

// Accumulates d(loss)/d(vertex positions) given d(loss)/d(coverage).
// Band pixels only; everything else has zero screen-space derivative.
inline void coverage_backward(const HexMesh& mesh,
                              const std::vector<SilhouetteEdge>& edges,
                              const Camera& cam, const CoverageResult& cov,
                              const ImageF& d_coverage,
                              std::vector<Vec3>& d_positions) {
  using namespace silhouette_detail;
  const int W = cov.coverage.width, H = cov.coverage.height;
  auto segs = project_edges(mesh, edges, cam);

  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * W + x;
      const int e = cov.band_edge[idx];
      if (e < 0) continue;
      const double up = d_coverage.at(x, y);
      if (up == 0.0) continue;
      if (!segs[e].valid) continue;

      const Vec2 q(x + 0.5, y + 0.5);
      double s;
      const double dist = point_segment_distance(q, segs[e].a, segs[e].b, s);
      if (dist < 1e-9) continue;  // pixel center exactly on the edge
      // coverage = 0.5 + sign * dist; d(dist)/da = -(1-s) u, d/db = -s u
      // with u the unit vector from the closest point toward q.
      const Vec2 closest = segs[e].a + s * (segs[e].b - segs[e].a);
      const Vec2 u = (q - closest) / dist;
      const double scale = up * cov.band_sign[idx];
      const Vec2 da = -(1.0 - s) * scale * u;
      const Vec2 db = -s * scale * u;

      d_positions[edges[e].va] +=
          cam.projection_jacobian(mesh.positions[edges[e].va]).transpose() * da;
      d_positions[edges[e].vb] +=
          cam.projection_jacobian(mesh.positions[edges[e].vb]).transpose() * db;
    }
  }
}

}  // namespace hexrec
