#pragma once

// Synthetic ground-truth scenes: an analytic shape (sphere, torus or a
// smooth-union blob) rendered by sphere tracing its signed distance field
// under a fixed Lambertian-plus-highlight shading with a procedural albedo.
// Masks and normal maps are exact (analytic gradients, solver tolerance
// 1e-10); cameras sit on a Fibonacci spiral looking at the origin. The same
// seed always produces bit-identical scenes.

#include "hexrec/isosurface.hpp"
#include "hexrec/parallel.hpp"
#include "hexrec/primitives.hpp"
#include "hexrec/scene.hpp"

#include <functional>
#include <string>

namespace hexrec {

enum class SyntheticShape { Sphere, Torus, Blob };

inline SyntheticShape shape_from_name(const std::string& name) {
  if (name == "sphere") return SyntheticShape::Sphere;
  if (name == "torus") return SyntheticShape::Torus;
  if (name == "blob") return SyntheticShape::Blob;
  throw DataError("unknown shape: " + name + " (expected sphere|torus|blob)");
}

namespace synth_detail {

struct Sdf {
  std::function<double(const Vec3&)> value;
  std::function<Vec3(const Vec3&)> gradient;
  double bound;  // radius of a ball containing the shape
};

inline Sdf sphere_sdf() {
  return {[](const Vec3& p) { return p.norm() - 1.0; },
          [](const Vec3& p) { return p.normalized(); }, 1.2};
}

inline Sdf torus_sdf(double R = 1.0, double r = 0.4) {
  return {[R, r](const Vec3& p) {
            return std::hypot(std::hypot(p.x(), p.y()) - R, p.z()) - r;
          },
          [R, r](const Vec3& p) {
            const double rho = std::hypot(p.x(), p.y());
            const double qx = rho - R;
            const double qn = std::hypot(qx, p.z());
            if (rho < 1e-12 || qn < 1e-12) return Vec3(0, 0, 1);
            return Vec3(qx * p.x() / rho / qn, qx * p.y() / rho / qn, p.z() / qn);
          },
          R + r + 0.2};
}

// Smooth union of four spheres via the exponential soft-min; the gradient is
// the softmax-weighted blend of the member gradients.
inline Sdf blob_sdf(std::uint64_t seed) {
  struct Ball {
    Vec3 c;
    double r;
  };
  auto balls = std::make_shared<std::vector<Ball>>();
  Rng rng(seed ^ 0xb10bb10bULL);
  balls->push_back({Vec3(0, 0, 0), 0.75});
  for (int i = 0; i < 3; ++i) {
    Vec3 dir(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    balls->push_back({0.55 * dir.normalized(), rng.uniform(0.35, 0.55)});
  }
  const double k = 8.0;
  auto value = [balls, k](const Vec3& p) {
    double acc = 0.0;
    for (const auto& b : *balls) acc += std::exp(-k * ((p - b.c).norm() - b.r));
    return -std::log(acc) / k;
  };
  auto gradient = [balls, k](const Vec3& p) {
    double acc = 0.0;
    Vec3 g = Vec3::Zero();
    for (const auto& b : *balls) {
      const double d = (p - b.c).norm();
      const double w = std::exp(-k * (d - b.r));
      acc += w;
      if (d > 1e-12) g += w * (p - b.c) / d;
    }
    return Vec3(g / acc);
  };
  return {value, gradient, 1.6};
}

inline Sdf make_sdf(SyntheticShape shape, std::uint64_t seed) {
  switch (shape) {
    case SyntheticShape::Sphere: return sphere_sdf();
    case SyntheticShape::Torus: return torus_sdf();
    case SyntheticShape::Blob: return blob_sdf(seed);
  }
  throw DataError("unknown shape");
}

// Sphere tracing with bisection refinement; returns the hit parameter or a
// negative value on miss.
inline double trace(const Sdf& sdf, const Ray& ray, double t_max) {
  double t = 0.0;
  double prev_t = 0.0;
  for (int i = 0; i < 512 && t < t_max; ++i) {
    const double d = sdf.value(ray.at(t));
    if (d < 0.0) {
      // Bracketed a crossing between prev_t and t.
      double lo = prev_t, hi = t;
      for (int j = 0; j < 60; ++j) {
        const double mid = 0.5 * (lo + hi);
        (sdf.value(ray.at(mid)) > 0.0 ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    if (d < 1e-10) return t;
    prev_t = t;
    t += std::max(d, 1e-6);
  }
  return -1.0;
}

struct Shading {
  Vec3 light = Vec3(0.45, 0.25, 0.86).normalized();
  double ambient = 0.25, diffuse = 0.65, specular = 0.25;
  double shininess = 10.0;
  Vec3 stripe_dir[3];
  double stripe_freq[3];
  double stripe_phase[3];

  explicit Shading(std::uint64_t seed) {
    Rng rng(seed ^ 0x7e57ab1e5eedULL);
    // One low-, one mid-, one higher-frequency stripe field: fitting the
    // last needs a few positional-encoding octaves.
    const double freq_lo[3] = {2.5, 4.0, 5.5};
    const double freq_hi[3] = {3.5, 5.0, 7.5};
    for (int c = 0; c < 3; ++c) {
      Vec3 d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      stripe_dir[c] = d.normalized();
      stripe_freq[c] = rng.uniform(freq_lo[c], freq_hi[c]);
      stripe_phase[c] = rng.uniform(0, 2 * M_PI);
    }
  }

  Vec3 albedo(const Vec3& x) const {
    Vec3 a;
    for (int c = 0; c < 3; ++c)
      a[c] = 0.55 + 0.35 * std::sin(stripe_freq[c] * x.dot(stripe_dir[c]) +
                                    stripe_phase[c]);
    return a;
  }

  Vec3 shade(const Vec3& x, const Vec3& n, const Vec3& view_dir) const {
    const double lambert = std::max(0.0, n.dot(light));
    const Vec3 half = (light - view_dir).normalized();  // view_dir points at the surface
    const double spec = std::pow(std::max(0.0, n.dot(half)), shininess);
    Vec3 c = albedo(x) * (ambient + diffuse * lambert) +
             Vec3::Constant(specular * spec);
    return c.cwiseMin(1.0).cwiseMax(0.0);
  }
};

}  // namespace synth_detail

inline Camera fibonacci_camera(int index, int n_views, int res, double radius) {
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  const double z = 1.0 - 2.0 * (index + 0.5) / n_views;
  const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = golden * index;
  const Vec3 eye = radius * Vec3(rho * std::cos(phi), rho * std::sin(phi), z);

  Camera cam;
  cam.width = cam.height = res;
  cam.fx = cam.fy = 1.1 * res;
  cam.cx = cam.cy = res / 2.0;
  const Vec3 fwd = (-eye).normalized();
  const Vec3 up_hint = std::abs(fwd.z()) > 0.99 ? Vec3(0, 1, 0) : Vec3(0, 0, 1);
  const Vec3 right = fwd.cross(up_hint).normalized();
  const Vec3 down = fwd.cross(right).normalized();
  cam.rotation.row(0) = right;
  cam.rotation.row(1) = down;
  cam.rotation.row(2) = fwd;
  cam.translation = -cam.rotation * eye;
  return cam;
}

struct SyntheticScene {
  Scene scene;
  HexMesh gt_mesh;
};

inline SyntheticScene generate_synthetic(SyntheticShape shape, int n_views,
                                         int res, std::uint64_t seed) {
  if (n_views < 4) throw DataError("synthetic scenes need at least 4 views");
  using namespace synth_detail;
  const Sdf sdf = make_sdf(shape, seed);
  const Shading shading(seed);
  const double cam_radius = 3.0;
  const double t_max = cam_radius + sdf.bound + 1.0;

  // Spiral indices are shuffled per seed so an index-based train/test split
  // is not geometrically biased (raw Fibonacci index tracks the polar
  // angle).
  std::vector<int> spiral(n_views);
  for (int i = 0; i < n_views; ++i) spiral[i] = i;
  Rng order_rng(seed ^ 0x0b5e7a71a5ULL);
  for (std::size_t i = spiral.size(); i > 1; --i)
    std::swap(spiral[i - 1], spiral[order_rng.next_below(i)]);

  SyntheticScene out;
  for (int v = 0; v < n_views; ++v) {
    View view;
    view.camera = fibonacci_camera(spiral[v], n_views, res, cam_radius);
    view.image = ImageF(res, res, 3, 0.0);
    view.mask = ImageU8(res, res, 1, 0);
    view.normals = ImageF(res, res, 3, 0.0);

    parallel_chunks(res, [&](int, std::int64_t y0, std::int64_t y1) {
      for (int y = static_cast<int>(y0); y < y1; ++y) {
        for (int x = 0; x < res; ++x) {
          const Ray ray = view.camera.ray_for_pixel(x, y);
          const double t = trace(sdf, ray, t_max);
          if (t < 0.0) continue;
          const Vec3 p = ray.at(t);
          const Vec3 n = sdf.gradient(p).normalized();
          view.mask.at(x, y) = 255;
          set_pixel_rgb(view.image, x, y, shading.shade(p, n, ray.dir));
          set_pixel_rgb(*view.normals, x, y, n);
        }
      }
    });
    out.scene.views.push_back(std::move(view));
  }

  switch (shape) {
    case SyntheticShape::Sphere:
      out.gt_mesh = make_geodesic_sphere(5);
      break;
    case SyntheticShape::Torus:
      out.gt_mesh = make_torus(1.0, 0.4, 160, 64);
      break;
    case SyntheticShape::Blob: {
      const int n = 96;
      GridSpec spec;
      spec.res = {n, n, n};
      const double half = sdf.bound;
      spec.spacing = Vec3::Constant(2.0 * half / (n - 1));
      spec.origin = Vec3::Constant(-half);
      std::vector<double> field(spec.cell_count());
      for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
          for (int x = 0; x < n; ++x)
            field[spec.index(x, y, z)] = -sdf.value(spec.center(x, y, z));
      out.gt_mesh = keep_largest_component(extract_isosurface(spec, field, 0.0));
      out.gt_mesh.build_adjacency();
      break;
    }
  }
  out.scene.gt_mesh = out.gt_mesh;
  return out;
}

}  // namespace hexrec
