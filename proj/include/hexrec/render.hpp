#pragma once

// Full-frame rendering: one ray per pixel, first intersection, barycentric
// attribute interpolation, shading network. Misses render black with zero
// coverage. Pixel work is data-parallel over fixed row chunks; every output
// cell is written by exactly one pixel, so results do not depend on the
// thread count.

#include "hexrec/bvh.hpp"
#include "hexrec/interpolate.hpp"
#include "hexrec/mlp.hpp"
#include "hexrec/parallel.hpp"
#include "hexrec/scene.hpp"
#include "hexrec/silhouette.hpp"

#include <vector>

namespace hexrec {

struct RenderResult {
  ImageF rgb;             // shaded color, black on miss
  ImageF normals;         // interpolated unit normals, zero on miss
  ImageU8 hit_mask;       // 1 where a ray hit
  std::vector<Hit> hits;  // per pixel, face = -1 on miss
};

// Core pass shared by training and the CLI. Assumes adjacency-independent
// data (BVH, vertex normals) prepared by the caller.
inline RenderResult render_pass(const HexMesh& mesh, const Bvh& bvh,
                                const std::vector<Vec3>& vnorms,
                                const MlpParams& params, const ShaderConfig& cfg,
                                const Camera& cam) {
  const int W = cam.width, H = cam.height;
  RenderResult out;
  out.rgb = ImageF(W, H, 3, 0.0);
  out.normals = ImageF(W, H, 3, 0.0);
  out.hit_mask = ImageU8(W, H, 1, 0);
  out.hits.assign(static_cast<std::size_t>(W) * H, Hit{});

  parallel_chunks(static_cast<std::int64_t>(W) * H,
                  [&](int, std::int64_t begin, std::int64_t end) {
    MlpWorkspace ws;
    for (std::int64_t i = begin; i < end; ++i) {
      const int x = static_cast<int>(i % W);
      const int y = static_cast<int>(i / W);
      const Ray ray = cam.ray_for_pixel(x, y);
      auto hit = bvh.intersect(mesh, ray);
      if (!hit) continue;
      out.hits[i] = *hit;
      out.hit_mask.at(x, y) = 1;
      const SurfacePoint sp = interpolate_attributes(mesh, vnorms, *hit);
      set_pixel_rgb(out.normals, x, y, sp.n);
      set_pixel_rgb(out.rgb, x, y, shade(params, cfg, sp.x, sp.n, sp.h, ray.dir, ws));
    }
  });
  return out;
}

struct RenderedView {
  ImageF rgb;
  ImageF coverage;  // antialiased silhouette coverage in [0,1]
};

// Standalone render of one view, building the acceleration structures.
inline RenderedView render_view(const HexMesh& mesh, const MlpParams& params,
                                const ShaderConfig& cfg, const Camera& cam) {
  Bvh bvh(mesh);
  auto fn = face_normals_unnormalized(mesh);
  auto vn = vertex_normals(mesh, fn);
  RenderResult pass = render_pass(mesh, bvh, vn, params, cfg, cam);
  auto cov = silhouette_coverage_from_hits(mesh, silhouette_edges(mesh, fn, cam),
                                           cam, pass.hit_mask);
  return {std::move(pass.rgb), std::move(cov.coverage)};
}

}  // namespace hexrec
