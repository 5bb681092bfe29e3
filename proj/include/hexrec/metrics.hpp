#pragma once

// Evaluation metrics: symmetric Chamfer distance between meshes via
// area-weighted surface sampling and exact point-to-triangle distances,
// PSNR over (optionally masked) pixels, and binary IoU.

#include "hexrec/bvh.hpp"
#include "hexrec/image.hpp"
#include "hexrec/mesh.hpp"
#include "hexrec/parallel.hpp"

#include <vector>

namespace hexrec {

// `n` area-weighted surface samples, deterministic per (mesh, seed).
inline std::vector<Vec3> sample_surface(const HexMesh& mesh, int n,
                                        std::uint64_t seed) {
  std::vector<double> cdf(mesh.face_count());
  double acc = 0.0;
  for (int f = 0; f < mesh.face_count(); ++f) {
    const auto& tri = mesh.faces[f];
    acc += 0.5 * ((mesh.positions[tri[1]] - mesh.positions[tri[0]])
                      .cross(mesh.positions[tri[2]] - mesh.positions[tri[0]]))
                     .norm();
    cdf[f] = acc;
  }
  if (acc <= 0.0) throw NumericError("cannot sample a zero-area mesh");

  Rng rng(seed);
  std::vector<Vec3> points;
  points.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double target = rng.next_double() * acc;
    const int f = static_cast<int>(
        std::lower_bound(cdf.begin(), cdf.end(), target) - cdf.begin());
    const auto& tri = mesh.faces[std::min(f, mesh.face_count() - 1)];
    // Uniform barycentric sample via the square-root trick.
    const double su = std::sqrt(rng.next_double());
    const double v = rng.next_double();
    const double b0 = 1.0 - su, b1 = su * (1.0 - v), b2 = su * v;
    points.push_back(b0 * mesh.positions[tri[0]] + b1 * mesh.positions[tri[1]] +
                     b2 * mesh.positions[tri[2]]);
  }
  return points;
}

namespace metrics_detail {

inline double mean_point_to_surface(const std::vector<Vec3>& points,
                                    const HexMesh& target, const Bvh& bvh) {
  std::vector<double> dists(points.size());
  parallel_chunks(static_cast<std::int64_t>(points.size()),
                  [&](int, std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i)
      dists[i] = std::sqrt(bvh.closest_point(target, points[i]).dist2);
  });
  return pairwise_sum(dists) / static_cast<double>(dists.size());
}

}  // namespace metrics_detail

// Symmetric mean point-to-surface distance. Both directions use the same
// seed, so chamfer(a, b) == chamfer(b, a) exactly.
inline double chamfer(const HexMesh& a, const HexMesh& b, int n_samples,
                      std::uint64_t seed) {
  if (a.faces.empty() || b.faces.empty())
    throw DataError("chamfer: empty mesh");
  Bvh bvh_a(a), bvh_b(b);
  const double ab = metrics_detail::mean_point_to_surface(
      sample_surface(a, n_samples, seed), b, bvh_b);
  const double ba = metrics_detail::mean_point_to_surface(
      sample_surface(b, n_samples, seed), a, bvh_a);
  return 0.5 * (ab + ba);
}

constexpr double kPsnrCap = 99.0;

// 10 log10(1 / MSE) over (masked) pixels for [0,1] images; identical images
// report the 99 dB cap.
inline double psnr(const ImageF& a, const ImageF& b, const ImageU8* mask = nullptr) {
  if (!a.same_size(b.width, b.height) || a.channels != b.channels)
    throw DataError("psnr: image dimensions disagree");
  if (mask && !a.same_size(mask->width, mask->height))
    throw DataError("psnr: mask dimensions disagree");
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      if (mask && !mask_foreground(mask->at(x, y))) continue;
      for (int c = 0; c < a.channels; ++c) {
        const double d = a.at(x, y, c) - b.at(x, y, c);
        sum += d * d;
      }
      ++count;
    }
  if (count == 0) throw DataError("psnr: empty mask");
  const double mse = sum / static_cast<double>(count * a.channels);
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

inline double iou_binary(const ImageU8& a, const ImageU8& b) {
  if (!a.same_size(b.width, b.height))
    throw DataError("iou: image dimensions disagree");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const bool fa = mask_foreground(a.data[i]);
    const bool fb = mask_foreground(b.data[i]);
    inter += fa && fb;
    uni += fa || fb;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Object scale for relative thresholds: twice the largest centroid-to-vertex
// distance.
inline double mesh_diameter(const HexMesh& mesh) {
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : mesh.positions) centroid += p;
  centroid /= static_cast<double>(mesh.vertex_count());
  double r = 0.0;
  for (const auto& p : mesh.positions) r = std::max(r, (p - centroid).norm());
  return 2.0 * r;
}

}  // namespace hexrec
