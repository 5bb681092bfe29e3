#pragma once

// Barycentric attribute interpolation at ray-mesh intersections and the
// backward rules that let image-space losses reach vertex positions and
// features.
//
// Two distinct derivative contracts exist side by side:
//  - interpolate_attributes treats the Hit as fixed; its backward is exactly
//    linear in vertex data (positions enter x_m with weight b_i, etc).
//  - hit_backward differentiates the intersection itself: with the ray held
//    fixed, (t, b1, b2) solve o + t d = sum_i b_i p_i, so their Jacobian with
//    respect to corner k is b_k M^{-1} with M = [d | -(p1-p0) | -(p2-p0)].

#include "hexrec/bvh.hpp"
#include "hexrec/mesh.hpp"

#include <vector>

namespace hexrec {

constexpr double kDegenerateNormalEps = 1e-12;

// Per-face cross products (p1-p0) x (p2-p0); length twice the face area.
inline std::vector<Vec3> face_normals_unnormalized(const HexMesh& mesh) {
  std::vector<Vec3> fn(mesh.face_count());
  for (int f = 0; f < mesh.face_count(); ++f) {
    const auto& tri = mesh.faces[f];
    fn[f] = (mesh.positions[tri[1]] - mesh.positions[tri[0]])
                .cross(mesh.positions[tri[2]] - mesh.positions[tri[0]]);
  }
  return fn;
}

// Area-weighted vertex normals, normalized per vertex. A vertex whose
// incident face normals cancel exactly gets the zero vector; interpolation
// then falls back to the geometric face normal.
inline std::vector<Vec3> vertex_normals(const HexMesh& mesh,
                                        const std::vector<Vec3>& face_norms) {
  std::vector<Vec3> vn(mesh.vertex_count(), Vec3::Zero());
  for (int f = 0; f < mesh.face_count(); ++f)
    for (int c = 0; c < 3; ++c) vn[mesh.faces[f][c]] += face_norms[f];
  for (auto& n : vn) {
    const double len = n.norm();
    n = len < kDegenerateNormalEps ? Vec3::Zero() : Vec3(n / len);
  }
  return vn;
}

inline std::vector<Vec3> vertex_normals(const HexMesh& mesh) {
  return vertex_normals(mesh, face_normals_unnormalized(mesh));
}

struct SurfacePoint {
  Vec3 x = Vec3::Zero();        // interpolated position
  Vec3 n = Vec3::Zero();        // unit shading normal
  Eigen::VectorXd h;            // interpolated feature vector
  bool normal_fallback = false; // true when the geometric face normal was used
};

inline SurfacePoint interpolate_attributes(const HexMesh& mesh,
                                           const std::vector<Vec3>& vnorms,
                                           const Hit& hit) {
  const auto& tri = mesh.faces[hit.face];
  SurfacePoint s;
  s.x = hit.b0 * mesh.positions[tri[0]] + hit.b1 * mesh.positions[tri[1]] +
        hit.b2 * mesh.positions[tri[2]];
  Vec3 raw = hit.b0 * vnorms[tri[0]] + hit.b1 * vnorms[tri[1]] +
             hit.b2 * vnorms[tri[2]];
  const double len = raw.norm();
  if (len < kDegenerateNormalEps) {
    s.normal_fallback = true;
    Vec3 fn = (mesh.positions[tri[1]] - mesh.positions[tri[0]])
                  .cross(mesh.positions[tri[2]] - mesh.positions[tri[0]]);
    s.n = fn.normalized();
  } else {
    s.n = raw / len;
  }
  s.h = hit.b0 * mesh.features.row(tri[0]) + hit.b1 * mesh.features.row(tri[1]) +
        hit.b2 * mesh.features.row(tri[2]);
  return s;
}

// d(v/|v|)^T applied to an upstream gradient.
inline Vec3 normalize_backward(const Vec3& raw, const Vec3& unit, double len,
                               const Vec3& d_unit) {
  return (d_unit - unit * unit.dot(d_unit)) / len;
}

// Backward of the cross product n = u x v.
inline void cross_backward(const Vec3& u, const Vec3& v, const Vec3& dn,
                           Vec3& du, Vec3& dv) {
  du += v.cross(dn);
  dv += dn.cross(u);
}

// Gradient sinks for the interpolation backward; all accumulators are dense
// per-vertex arrays owned by the caller.
struct InterpGrads {
  std::vector<Vec3>* d_positions = nullptr;       // required
  std::vector<Vec3>* d_vertex_normals = nullptr;  // unit-normal gradients
  Eigen::MatrixXd* d_features = nullptr;
  // Gradients with respect to the barycentric weights (b1, b2), for chaining
  // through hit_backward. b0 = 1 - b1 - b2 is eliminated.
  double db1 = 0, db2 = 0;
};

// Backward of interpolate_attributes. dn flows to the stored unit vertex
// normals (or, on the degenerate fallback, directly to the face corner
// positions); dh flows to features. When route_x_to_positions is set (the
// fixed-hit contract) dx flows to positions with the barycentric weights;
// a caller chaining through the moving intersection instead disables it and
// feeds d.dot(dx) into hit_backward as dt. Barycentric gradients from the
// normal and feature chains accumulate into db1/db2 for that same chain.
inline void interpolate_backward(const HexMesh& mesh,
                                 const std::vector<Vec3>& vnorms, const Hit& hit,
                                 const Vec3& dx, const Vec3& dn,
                                 const Eigen::VectorXd& dh, InterpGrads& out,
                                 bool route_x_to_positions = true) {
  const auto& tri = mesh.faces[hit.face];
  const double b[3] = {hit.b0, hit.b1, hit.b2};

  if (out.d_positions && route_x_to_positions)
    for (int c = 0; c < 3; ++c) (*out.d_positions)[tri[c]] += b[c] * dx;

  if (out.d_features && dh.size() > 0)
    for (int c = 0; c < 3; ++c) out.d_features->row(tri[c]) += b[c] * dh.transpose();

  double dbary[3] = {0, 0, 0};
  if (dh.size() > 0)
    for (int c = 0; c < 3; ++c) dbary[c] += mesh.features.row(tri[c]).dot(dh);

  // Normal chain.
  Vec3 raw = b[0] * vnorms[tri[0]] + b[1] * vnorms[tri[1]] + b[2] * vnorms[tri[2]];
  const double len = raw.norm();
  if (len < kDegenerateNormalEps) {
    // Fallback: n = normalize((p1-p0) x (p2-p0)); route dn to positions.
    if (out.d_positions) {
      const Vec3 u = mesh.positions[tri[1]] - mesh.positions[tri[0]];
      const Vec3 v = mesh.positions[tri[2]] - mesh.positions[tri[0]];
      const Vec3 fn = u.cross(v);
      const double flen = fn.norm();
      if (flen >= kDegenerateNormalEps) {
        Vec3 d_fn = normalize_backward(fn, fn / flen, flen, dn);
        Vec3 du = Vec3::Zero(), dv = Vec3::Zero();
        cross_backward(u, v, d_fn, du, dv);
        (*out.d_positions)[tri[1]] += du;
        (*out.d_positions)[tri[2]] += dv;
        (*out.d_positions)[tri[0]] -= du + dv;
      }
    }
  } else {
    const Vec3 unit = raw / len;
    const Vec3 d_raw = normalize_backward(raw, unit, len, dn);
    if (out.d_vertex_normals)
      for (int c = 0; c < 3; ++c) (*out.d_vertex_normals)[tri[c]] += b[c] * d_raw;
    for (int c = 0; c < 3; ++c) dbary[c] += vnorms[tri[c]].dot(d_raw);
  }

  out.db1 += dbary[1] - dbary[0];
  out.db2 += dbary[2] - dbary[0];
}

// Backward through the unit vertex normals into positions: every incident
// face's cross product receives the (normalize-adjusted) vertex-normal
// gradient of its three corners.
inline void vertex_normals_backward(const HexMesh& mesh,
                                    const std::vector<Vec3>& face_norms,
                                    const std::vector<Vec3>& d_unit_normals,
                                    std::vector<Vec3>& d_positions) {
  const int nv = mesh.vertex_count();
  std::vector<Vec3> raw(nv, Vec3::Zero());
  for (int f = 0; f < mesh.face_count(); ++f)
    for (int c = 0; c < 3; ++c) raw[mesh.faces[f][c]] += face_norms[f];

  std::vector<Vec3> d_raw(nv, Vec3::Zero());
  for (int v = 0; v < nv; ++v) {
    const double len = raw[v].norm();
    if (len < kDegenerateNormalEps) continue;  // zero normal stays zero
    d_raw[v] = normalize_backward(raw[v], raw[v] / len, len, d_unit_normals[v]);
  }

  for (int f = 0; f < mesh.face_count(); ++f) {
    const auto& tri = mesh.faces[f];
    const Vec3 d_fn = d_raw[tri[0]] + d_raw[tri[1]] + d_raw[tri[2]];
    if (d_fn.isZero(0.0)) continue;
    const Vec3 u = mesh.positions[tri[1]] - mesh.positions[tri[0]];
    const Vec3 v = mesh.positions[tri[2]] - mesh.positions[tri[0]];
    Vec3 du = Vec3::Zero(), dv = Vec3::Zero();
    cross_backward(u, v, d_fn, du, dv);
    d_positions[tri[1]] += du;
    d_positions[tri[2]] += dv;
    d_positions[tri[0]] -= du + dv;
  }
}

// Ray-constrained derivative of the intersection: distributes upstream
// gradients on (t, b1, b2) to the three face corners. Returns false when the
// local system is numerically singular (grazing or degenerate triangle).
inline bool hit_backward(const HexMesh& mesh, const Ray& ray, const Hit& hit,
                         double dt, double db1, double db2,
                         std::vector<Vec3>& d_positions) {
  const auto& tri = mesh.faces[hit.face];
  const Vec3& p0 = mesh.positions[tri[0]];
  Mat3 Mt;  // transpose of [d | p0-p1 | p0-p2]
  Mt.row(0) = ray.dir;
  Mt.row(1) = p0 - mesh.positions[tri[1]];
  Mt.row(2) = p0 - mesh.positions[tri[2]];
  Eigen::FullPivLU<Mat3> lu(Mt);
  if (!lu.isInvertible()) return false;
  const Vec3 y = lu.solve(Vec3(dt, db1, db2));
  const double b[3] = {hit.b0, hit.b1, hit.b2};
  for (int c = 0; c < 3; ++c) d_positions[tri[c]] += b[c] * y;
  return true;
}

}  // namespace hexrec
