#include "hexrec/bvh.hpp"
#include "hexrec/camera.hpp"
#include "hexrec/interpolate.hpp"
#include "hexrec/primitives.hpp"

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

using namespace hexrec;

namespace {

// Independent intersection oracle: plane intersection followed by a
// sign-consistency barycentric test, deliberately a different formulation
// from the Moller-Trumbore routine inside the BVH.
std::optional<Hit> oracle_ray_triangle(const Ray& ray, const Vec3& a,
                                       const Vec3& b, const Vec3& c,
                                       double t_min) {
  const Vec3 n = (b - a).cross(c - a);
  const double denom = n.dot(ray.dir);
  if (std::abs(denom) < 1e-14) return std::nullopt;
  const double t = n.dot(a - ray.origin) / denom;
  if (t <= t_min) return std::nullopt;
  const Vec3 p = ray.at(t);
  const double area2 = n.squaredNorm();
  const double b0 = n.dot((b - p).cross(c - p)) / area2;
  const double b1 = n.dot((c - p).cross(a - p)) / area2;
  const double b2 = n.dot((a - p).cross(b - p)) / area2;
  if (b0 < -1e-12 || b1 < -1e-12 || b2 < -1e-12) return std::nullopt;
  Hit h;
  h.b0 = b0;
  h.b1 = b1;
  h.b2 = b2;
  h.t = t;
  return h;
}

std::optional<Hit> oracle_intersect(const HexMesh& mesh, const Ray& ray,
                                    double t_min) {
  std::optional<Hit> best;
  for (int f = 0; f < mesh.face_count(); ++f) {
    const auto& tri = mesh.faces[f];
    auto h = oracle_ray_triangle(ray, mesh.positions[tri[0]],
                                 mesh.positions[tri[1]], mesh.positions[tri[2]],
                                 t_min);
    if (h && (!best || h->t < best->t)) {
      h->face = f;
      best = h;
    }
  }
  return best;
}

Camera look_at_camera(const Vec3& eye, const Vec3& target, int res,
                      double focal_px) {
  Camera cam;
  cam.width = cam.height = res;
  cam.fx = cam.fy = focal_px;
  cam.cx = cam.cy = res / 2.0;
  Vec3 fwd = (target - eye).normalized();
  Vec3 up_hint = std::abs(fwd.z()) > 0.99 ? Vec3(0, 1, 0) : Vec3(0, 0, 1);
  Vec3 right = fwd.cross(up_hint).normalized();
  Vec3 down = fwd.cross(right).normalized();
  cam.rotation.row(0) = right;
  cam.rotation.row(1) = down;
  cam.rotation.row(2) = fwd;
  cam.translation = -cam.rotation * eye;
  return cam;
}

}  // namespace

TEST_CASE("principal-point ray follows the optical axis") {
  Camera cam = look_at_camera(Vec3(0, 0, -3), Vec3(0, 0, 0), 100, 120.0);
  // Pixel whose center is the principal point: (cx - 0.5, cy - 0.5).
  Ray r = cam.ray_for_pixel(cam.cx - 0.5, cam.cy - 0.5);
  CHECK((r.dir - cam.view_axis_world()).norm() < 1e-12);
  CHECK((r.origin - Vec3(0, 0, -3)).norm() < 1e-12);
}

TEST_CASE("identity pose back-projection algebra") {
  Camera cam;
  cam.fx = cam.fy = 1.0;
  cam.cx = cam.cy = 0.0;
  cam.width = cam.height = 4;
  Ray r = cam.ray_for_pixel(-0.5, -0.5);
  CHECK((r.dir - Vec3(0, 0, 1)).norm() < 1e-15);
  CHECK_THROWS_AS(cam.ray_for_pixel(4, 0), DataError);
}

TEST_CASE("project: axis point, behind-camera flag, round trip") {
  Camera cam = look_at_camera(Vec3(1, -2, 0.5), Vec3(0.2, 0.1, -0.3), 128, 150.0);

  Vec3 axis_pt = cam.center() + 2.0 * cam.view_axis_world();
  auto p = cam.project(axis_pt);
  REQUIRE(p.in_front);
  CHECK(std::abs(p.u - cam.cx) < 1e-9);
  CHECK(std::abs(p.v - cam.cy) < 1e-9);
  CHECK(std::abs(p.depth - 2.0) < 1e-12);

  auto behind = cam.project(cam.center() - cam.view_axis_world());
  CHECK(!behind.in_front);

  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    double px = rng.uniform(0, cam.width - 1);
    double py = rng.uniform(0, cam.height - 1);
    Ray r = cam.ray_for_pixel(px, py);
    auto q = cam.project(r.at(rng.uniform(0.5, 5.0)));
    REQUIRE(q.in_front);
    CHECK(std::abs(q.u - (px + 0.5)) < 1e-6);
    CHECK(std::abs(q.v - (py + 0.5)) < 1e-6);
  }
}

TEST_CASE("projection jacobian matches finite differences") {
  Camera cam = look_at_camera(Vec3(2, 1, -2), Vec3(0, 0, 0), 64, 80.0);
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    Vec3 p(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    auto J = cam.projection_jacobian(p);
    const double h = 1e-6;
    for (int a = 0; a < 3; ++a) {
      Vec3 dp = Vec3::Zero();
      dp[a] = h;
      auto plus = cam.project(p + dp), minus = cam.project(p - dp);
      CHECK(std::abs((plus.u - minus.u) / (2 * h) - J(0, a)) < 1e-4 * (1 + std::abs(J(0, a))));
      CHECK(std::abs((plus.v - minus.v) / (2 * h) - J(1, a)) < 1e-4 * (1 + std::abs(J(1, a))));
    }
  }
}

TEST_CASE("camera JSON round trip and validation") {
  std::vector<Camera> cams;
  cams.push_back(look_at_camera(Vec3(3, 0, 0), Vec3(0, 0, 0), 64, 70.0));
  cams.push_back(look_at_camera(Vec3(0, 3, 1), Vec3(0, 0, 0), 128, 140.0));
  auto path = std::filesystem::temp_directory_path() / "hexrec_cams.json";
  save_cameras_json(cams, path.string());
  auto back = load_cameras_json(path.string());
  REQUIRE(back.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK((back[i].rotation - cams[i].rotation).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back[i].translation - cams[i].translation).norm() < 1e-12);
    CHECK(back[i].width == cams[i].width);
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_cameras_json("/nonexistent/cams.json"), DataError);
}

TEST_CASE("BVH equals brute force on random rays (three meshes)") {
  std::vector<HexMesh> meshes;
  meshes.push_back(make_geodesic_sphere(3));
  meshes.push_back(make_torus(1.0, 0.35, 48, 24));
  meshes.push_back(testing::make_random_mesh(3, 0.05, 5));

  Rng rng(99);
  for (const auto& mesh : meshes) {
    Bvh bvh(mesh);
    const double t_min = 1e-6 * bvh.scene_diagonal();
    int hits = 0;
    for (int i = 0; i < 2000; ++i) {
      Vec3 o(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
      Vec3 d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      if (d.norm() < 1e-6) continue;
      Ray ray{o, d.normalized()};
      auto got = bvh.intersect(mesh, ray);
      auto expect = oracle_intersect(mesh, ray, t_min);
      REQUIRE(got.has_value() == expect.has_value());
      if (got) {
        ++hits;
        CHECK(got->face == expect->face);
        CHECK(std::abs(got->t - expect->t) < 1e-9 * (1 + expect->t));
        CHECK(std::abs(got->b0 + got->b1 + got->b2 - 1.0) < 1e-6);
        CHECK(got->b0 >= -1e-12);
        CHECK(got->b1 >= -1e-12);
        CHECK(got->b2 >= -1e-12);
        CHECK(got->t > 0);
      }
    }
    CHECK(hits > 100);  // the sampling actually exercises hits
  }
}

TEST_CASE("single-face BVH and miss cases") {
  HexMesh m;
  m.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.faces = {{0, 1, 2}};
  zero_features(m);
  Bvh bvh(m);
  auto hit = bvh.intersect(m, Ray{{0.2, 0.2, -1}, {0, 0, 1}});
  REQUIRE(hit);
  CHECK(hit->face == 0);
  CHECK(std::abs(hit->t - 1.0) < 1e-12);
  CHECK(!bvh.intersect(m, Ray{{2, 2, -1}, {0, 0, 1}}));          // outside
  CHECK(!bvh.intersect(m, Ray{{0.2, 0.2, -1}, {1, 0, 0}}));      // parallel, outside
}

TEST_CASE("sphere mesh: central ray distance matches analytic sphere") {
  HexMesh sphere = make_geodesic_sphere(4);  // fine tessellation
  Bvh bvh(sphere);
  Ray ray{{0, 0, -3}, {0, 0, 1}};
  auto hit = bvh.intersect(sphere, ray);
  REQUIRE(hit);
  // Chord sag of the tessellation bounds the deviation from t = 2.
  double edge = mean_edge_length(sphere);
  CHECK(std::abs(hit->t - 2.0) < edge * edge / 2.0);
}

TEST_CASE("shared-edge hit resolves to the smaller face index") {
  HexMesh m;
  m.positions = {{0, -1, 0}, {0, 1, 0}, {-1, 0, 1}, {1, 0, 1}};
  // Faces share edge (0,1); the ray passes exactly through it.
  m.faces = {{0, 1, 2}, {1, 0, 3}};
  zero_features(m);
  Bvh bvh(m);
  auto hit = bvh.intersect(m, Ray{{0, 0, -1}, {0, 0, 1}});
  REQUIRE(hit);
  CHECK(hit->face == 0);
  CHECK(hit->t == 1.0);
}

TEST_CASE("closest-point query matches brute force") {
  HexMesh mesh = testing::make_random_mesh(2, 0.1, 8);
  Bvh bvh(mesh);
  Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    Vec3 p(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    auto got = bvh.closest_point(mesh, p);
    double best = std::numeric_limits<double>::max();
    for (int f = 0; f < mesh.face_count(); ++f) {
      const auto& tri = mesh.faces[f];
      Vec3 q = closest_point_on_triangle(p, mesh.positions[tri[0]],
                                         mesh.positions[tri[1]],
                                         mesh.positions[tri[2]]);
      best = std::min(best, (q - p).squaredNorm());
    }
    CHECK(std::abs(std::sqrt(got.dist2) - std::sqrt(best)) < 1e-12);
  }
}

TEST_CASE("interpolation at a vertex and at a centroid") {
  HexMesh m = make_geodesic_sphere(1);
  Rng rng(2);
  for (int v = 0; v < m.vertex_count(); ++v)
    for (int c = 0; c < m.feature_dim(); ++c) m.features(v, c) = rng.uniform(-1, 1);
  auto vn = vertex_normals(m);

  Hit at_vertex;
  at_vertex.face = 7;
  at_vertex.b0 = 1.0;
  at_vertex.b1 = at_vertex.b2 = 0.0;
  auto s = interpolate_attributes(m, vn, at_vertex);
  int v0 = m.faces[7][0];
  CHECK((s.x - m.positions[v0]).norm() == 0.0);
  CHECK((s.n - vn[v0]).norm() < 1e-15);
  CHECK((s.h.transpose() - m.features.row(v0)).cwiseAbs().maxCoeff() == 0.0);

  HexMesh flat = m;
  flat.features.setConstant(0.25);
  Hit centroid;
  centroid.face = 3;
  centroid.b0 = centroid.b1 = centroid.b2 = 1.0 / 3.0;
  auto sc = interpolate_attributes(flat, vn, centroid);
  CHECK((sc.h.array() - 0.25).abs().maxCoeff() < 1e-15);
}

TEST_CASE("fixed-hit gradient of x_m matches finite differences") {
  HexMesh m = testing::make_random_mesh(1, 0.1, 31);
  auto vn = vertex_normals(m);
  Hit hit;
  hit.face = 5;
  hit.b0 = 0.2;
  hit.b1 = 0.5;
  hit.b2 = 0.3;

  // Analytic: dx_m/dp_c = b_c * I. Probe with random upstream vectors.
  Rng rng(44);
  Vec3 dx(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  std::vector<Vec3> dpos(m.vertex_count(), Vec3::Zero());
  InterpGrads grads;
  grads.d_positions = &dpos;
  interpolate_backward(m, vn, hit, dx, Vec3::Zero(), Eigen::VectorXd(), grads);

  const double h = 1e-6;
  for (int c = 0; c < 3; ++c) {
    int v = m.faces[hit.face][c];
    for (int axis = 0; axis < 3; ++axis) {
      HexMesh plus = m, minus = m;
      plus.positions[v][axis] += h;
      minus.positions[v][axis] -= h;
      double fp = interpolate_attributes(plus, vn, hit).x.dot(dx);
      double fm = interpolate_attributes(minus, vn, hit).x.dot(dx);
      double fd = (fp - fm) / (2 * h);
      CHECK(std::abs(fd - dpos[v][axis]) < 1e-6 * (1 + std::abs(fd)));
    }
  }
}

TEST_CASE("interpolation is linear: superposition in positions and features") {
  HexMesh base = testing::make_random_mesh(1, 0.05, 61);
  auto vn = vertex_normals(base);
  Rng rng(7);
  HexMesh pa = base, pb = base, pab = base;
  for (int v = 0; v < base.vertex_count(); ++v) {
    Vec3 da(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    Vec3 db(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    pa.positions[v] = da;
    pb.positions[v] = db;
    pab.positions[v] = da + db;
    for (int c = 0; c < base.feature_dim(); ++c) {
      double fa = rng.uniform(-1, 1), fb = rng.uniform(-1, 1);
      pa.features(v, c) = fa;
      pb.features(v, c) = fb;
      pab.features(v, c) = fa + fb;
    }
  }
  Hit hit;
  hit.face = 2;
  hit.b0 = 0.6;
  hit.b1 = 0.1;
  hit.b2 = 0.3;
  auto sa = interpolate_attributes(pa, vn, hit);
  auto sb = interpolate_attributes(pb, vn, hit);
  auto sab = interpolate_attributes(pab, vn, hit);
  CHECK((sab.x - sa.x - sb.x).norm() < 1e-12);
  CHECK((sab.h - sa.h - sb.h).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("degenerate interpolated normal falls back to the face normal") {
  HexMesh pillow = testing::make_pillow({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
  auto vn = vertex_normals(pillow);
  for (const auto& n : vn) CHECK(n.norm() == 0.0);  // opposite sheets cancel
  Hit hit;
  hit.face = 0;
  hit.b0 = hit.b1 = 0.25;
  hit.b2 = 0.5;
  auto s = interpolate_attributes(pillow, vn, hit);
  CHECK(s.normal_fallback);
  CHECK((s.n - Vec3(0, 0, 1)).norm() < 1e-15);
}

TEST_CASE("ray-constrained hit backward matches re-intersection finite differences") {
  HexMesh m = testing::make_random_mesh(1, 0.08, 77);
  Bvh bvh(m);
  Ray ray{{0.1, -0.2, -3.0}, Vec3(0.05, 0.02, 1.0).normalized()};
  auto hit = bvh.intersect(m, ray);
  REQUIRE(hit);

  Rng rng(5);
  double dt = rng.uniform(-1, 1), db1 = rng.uniform(-1, 1), db2 = rng.uniform(-1, 1);
  std::vector<Vec3> dpos(m.vertex_count(), Vec3::Zero());
  REQUIRE(hit_backward(m, ray, *hit, dt, db1, db2, dpos));

  const double h = 1e-7;
  for (int c = 0; c < 3; ++c) {
    int v = m.faces[hit->face][c];
    for (int axis = 0; axis < 3; ++axis) {
      auto probe = [&](double delta) {
        HexMesh pm = m;
        pm.positions[v][axis] += delta;
        Bvh pb(pm);
        auto ph = pb.intersect(pm, ray);
        REQUIRE(ph);
        REQUIRE(ph->face == hit->face);
        return dt * ph->t + db1 * ph->b1 + db2 * ph->b2;
      };
      double fd = (probe(h) - probe(-h)) / (2 * h);
      CHECK(std::abs(fd - dpos[v][axis]) < 1e-5 * (1 + std::abs(fd)));
    }
  }
}
