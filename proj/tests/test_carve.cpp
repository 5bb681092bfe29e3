#include "hexrec/carve.hpp"
#include "hexrec/primitives.hpp"

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

using namespace hexrec;

namespace {

Camera orbit_camera(double azimuth, double elevation, double radius, int res,
                    double focal_px) {
  Vec3 eye(radius * std::cos(elevation) * std::cos(azimuth),
           radius * std::cos(elevation) * std::sin(azimuth),
           radius * std::sin(elevation));
  Camera cam;
  cam.width = cam.height = res;
  cam.fx = cam.fy = focal_px;
  cam.cx = cam.cy = res / 2.0;
  Vec3 fwd = (-eye).normalized();
  Vec3 up_hint = std::abs(fwd.z()) > 0.99 ? Vec3(0, 1, 0) : Vec3(0, 0, 1);
  Vec3 right = fwd.cross(up_hint).normalized();
  Vec3 down = fwd.cross(right).normalized();
  cam.rotation.row(0) = right;
  cam.rotation.row(1) = down;
  cam.rotation.row(2) = fwd;
  cam.translation = -cam.rotation * eye;
  return cam;
}

// Exact silhouette of the unit sphere: pixel is foreground iff its center
// ray passes within distance 1 of the origin.
ImageU8 sphere_mask(const Camera& cam, double radius = 1.0) {
  ImageU8 mask(cam.width, cam.height, 1, 0);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      Ray r = cam.ray_for_pixel(x, y);
      double closest = (Vec3::Zero() - r.origin).cross(r.dir).norm();
      if (closest <= radius) mask.at(x, y) = 255;
    }
  return mask;
}

struct SphereSetup {
  std::vector<Camera> cameras;
  std::vector<ImageU8> masks;
};

SphereSetup sphere_setup(int n_views, int res) {
  SphereSetup s;
  for (int i = 0; i < n_views; ++i) {
    double az = 2.0 * M_PI * i / n_views;
    double el = 0.6 * std::sin(2.1 * i + 0.4);
    Camera cam = orbit_camera(az, el, 3.0, res, 1.2 * res);
    s.cameras.push_back(cam);
    s.masks.push_back(sphere_mask(cam));
  }
  return s;
}

}  // namespace

TEST_CASE("visual hull contains the sphere voxel-wise") {
  auto setup = sphere_setup(20, 128);
  Vec3 lo(-1.3, -1.3, -1.3), hi(1.3, 1.3, 1.3);
  VoxelGrid grid = carve(setup.masks, setup.cameras, lo, hi, {64, 64, 64}, 1);
  std::size_t interior = 0, missing = 0;
  for (int z = 0; z < 64; ++z)
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x)
        if (grid.voxel_center(x, y, z).norm() < 1.0) {
          ++interior;
          if (!grid.occupancy[grid.index(x, y, z)]) ++missing;
        }
  REQUIRE(interior > 1000);
  CHECK(missing == 0);
}

TEST_CASE("single view: hull is the silhouette cone clipped to the bbox") {
  Camera cam = orbit_camera(0.3, 0.2, 3.0, 96, 110.0);
  std::vector<ImageU8> masks = {sphere_mask(cam)};
  Vec3 lo(-1.2, -1.2, -1.2), hi(1.2, 1.2, 1.2);
  VoxelGrid grid = carve(masks, {cam}, lo, hi, {48, 48, 48}, 0);
  // Every voxel whose center projects into the silhouette must be occupied,
  // regardless of depth along the ray.
  std::size_t checked = 0;
  for (int z = 0; z < 48; z += 3)
    for (int y = 0; y < 48; y += 3)
      for (int x = 0; x < 48; x += 3) {
        Vec3 p = grid.voxel_center(x, y, z);
        auto proj = cam.project(p);
        if (!proj.in_front) continue;
        int px = static_cast<int>(std::floor(proj.u));
        int py = static_cast<int>(std::floor(proj.v));
        if (!masks[0].in_bounds(px, py)) continue;
        ++checked;
        CHECK(grid.occupancy[grid.index(x, y, z)] ==
              (mask_foreground(masks[0].at(px, py)) ? 1 : 0));
      }
  REQUIRE(checked > 500);
}

TEST_CASE("carving errors: empty masks, count mismatch, bad resolution") {
  auto setup = sphere_setup(4, 64);
  // Box small enough that every voxel is inside every view's frustum, so a
  // zero mask carves everything.
  Vec3 lo(-0.6, -0.6, -0.6), hi(0.6, 0.6, 0.6);

  auto zeroed = setup.masks;
  zeroed[2] = ImageU8(64, 64, 1, 0);
  CHECK_THROWS_AS(carve(zeroed, setup.cameras, lo, hi, {16, 16, 16}, 0),
                  NumericError);

  auto fewer = setup.masks;
  fewer.pop_back();
  CHECK_THROWS_AS(carve(fewer, setup.cameras, lo, hi, {16, 16, 16}, 0), DataError);

  CHECK_THROWS_AS(carve(setup.masks, setup.cameras, lo, hi, {4, 16, 16}, 0),
                  DataError);
  CHECK_THROWS_AS(carve(setup.masks, setup.cameras, hi, lo, {16, 16, 16}, 0),
                  DataError);
}

TEST_CASE("monotonicity: more views never add voxels, dilation never removes") {
  auto setup = sphere_setup(8, 64);
  Vec3 lo(-1.4, -1.4, -1.4), hi(1.4, 1.4, 1.4);
  std::array<int, 3> res = {24, 24, 24};

  std::vector<ImageU8> m4(setup.masks.begin(), setup.masks.begin() + 4);
  std::vector<Camera> c4(setup.cameras.begin(), setup.cameras.begin() + 4);
  VoxelGrid hull4 = carve(m4, c4, lo, hi, res, 1);
  VoxelGrid hull8 = carve(setup.masks, setup.cameras, lo, hi, res, 1);
  for (std::size_t i = 0; i < hull4.occupancy.size(); ++i)
    CHECK(hull8.occupancy[i] <= hull4.occupancy[i]);

  VoxelGrid dil0 = carve(setup.masks, setup.cameras, lo, hi, res, 0);
  VoxelGrid dil2 = carve(setup.masks, setup.cameras, lo, hi, res, 2);
  for (std::size_t i = 0; i < dil0.occupancy.size(); ++i)
    CHECK(dil0.occupancy[i] <= dil2.occupancy[i]);
}

TEST_CASE("occupancy surface of a sphere hull stays within 2 voxel diagonals") {
  auto setup = sphere_setup(16, 128);
  Vec3 lo(-1.3, -1.3, -1.3), hi(1.3, 1.3, 1.3);
  VoxelGrid grid = carve(setup.masks, setup.cameras, lo, hi, {64, 64, 64}, 1);
  // The hull legitimately keeps blobs wherever no frustum reaches (bbox
  // corners); the sphere is the dominant component.
  HexMesh surf = keep_largest_component(extract_occupancy_surface(grid));
  check_mesh_valid(surf);
  CHECK(euler_characteristic(surf) == 2);
  const double diag = grid.voxel_size().norm();
  for (const auto& p : surf.positions)
    CHECK(std::abs(p.norm() - 1.0) < 2.0 * diag);
}

TEST_CASE("single occupied voxel extracts to a closed genus-0 blob") {
  VoxelGrid grid;
  grid.bbox_min = Vec3(-1, -1, -1);
  grid.bbox_max = Vec3(1, 1, 1);
  grid.res = {9, 9, 9};
  grid.occupancy.assign(grid.voxel_count(), 0);
  grid.occupancy[grid.index(4, 4, 4)] = 1;
  HexMesh surf = extract_occupancy_surface(grid);
  check_mesh_valid(surf);
  CHECK(euler_characteristic(surf) == 2);
}

TEST_CASE("fully occupied or empty grids refuse extraction") {
  VoxelGrid grid;
  grid.bbox_min = Vec3(-1, -1, -1);
  grid.bbox_max = Vec3(1, 1, 1);
  grid.res = {8, 8, 8};
  grid.occupancy.assign(grid.voxel_count(), 1);
  CHECK_THROWS_AS(extract_occupancy_surface(grid), NumericError);
  grid.occupancy.assign(grid.voxel_count(), 0);
  CHECK_THROWS_AS(extract_occupancy_surface(grid), NumericError);
}

TEST_CASE("coarse init: vertex budget, hexagon dominance, manifoldness") {
  auto setup = sphere_setup(16, 128);
  Vec3 lo(-1.3, -1.3, -1.3), hi(1.3, 1.3, 1.3);
  VoxelGrid grid = carve(setup.masks, setup.cameras, lo, hi, {64, 64, 64}, 1);
  HexMesh coarse = init_coarse_mesh(grid, 2500);
  check_mesh_valid(coarse);
  CHECK(coarse.vertex_count() >= 2000);
  CHECK(coarse.vertex_count() <= 3000);
  CHECK(euler_characteristic(coarse) == 2);
  CHECK(count_valence(coarse, 6) >= (8 * coarse.vertex_count()) / 10);
  CHECK(coarse.features.rows() == coarse.vertex_count());
  CHECK(coarse.features.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(init_coarse_mesh(grid, 50), DataError);
}

TEST_CASE("torus hull keeps genus 1 through coarse init") {
  // Analytic torus masks: R=1, r=0.45, silhouette via dense ray sampling of
  // the implicit surface.
  auto torus_sdf = [](const Vec3& p) {
    double q = std::hypot(std::hypot(p.x(), p.y()) - 1.0, p.z());
    return q - 0.45;
  };
  std::vector<Camera> cams;
  std::vector<ImageU8> masks;
  auto add_view = [&](double az, double el) {
    Camera cam = orbit_camera(az, el, 3.2, 128, 120.0);
    ImageU8 mask(128, 128, 1, 0);
    for (int y = 0; y < 128; ++y)
      for (int x = 0; x < 128; ++x) {
        Ray r = cam.ray_for_pixel(x, y);
        double t = 0.5;
        for (int it = 0; it < 160 && t < 7.0; ++it) {
          double d = torus_sdf(r.at(t));
          if (d < 1e-4) break;
          t += std::max(d, 1e-3);
        }
        if (t < 7.0 && torus_sdf(r.at(t)) < 1e-3) mask.at(x, y) = 255;
      }
    cams.push_back(cam);
    masks.push_back(mask);
  };
  // Equatorial ring for the outline plus near-axial views that see through
  // the hole (silhouettes can only carve the tunnel along such rays).
  for (int i = 0; i < 10; ++i) add_view(2.0 * M_PI * i / 10, 0.05);
  for (int i = 0; i < 6; ++i) add_view(2.0 * M_PI * i / 6 + 0.3, 1.15);
  for (int i = 0; i < 6; ++i) add_view(2.0 * M_PI * i / 6 - 0.3, -1.15);
  Vec3 lo(-1.6, -1.6, -0.8), hi(1.6, 1.6, 0.8);
  VoxelGrid grid = carve(masks, cams, lo, hi, {80, 80, 40}, 1);
  HexMesh coarse = init_coarse_mesh(grid, 1200);
  check_mesh_valid(coarse);
  CHECK(euler_characteristic(coarse) == 0);
}

TEST_CASE("grid dump round trip") {
  auto setup = sphere_setup(6, 64);
  Vec3 lo(-1.2, -1.2, -1.2), hi(1.2, 1.2, 1.2);
  VoxelGrid grid = carve(setup.masks, setup.cameras, lo, hi, {16, 16, 16}, 1);
  auto path = std::filesystem::temp_directory_path() / "hexrec_grid.bin";
  save_grid(grid, path.string());
  VoxelGrid back = load_grid(path.string());
  CHECK(back.res == grid.res);
  CHECK((back.bbox_min - grid.bbox_min).norm() == 0.0);
  CHECK(back.occupancy == grid.occupancy);
  std::filesystem::remove(path);
}

TEST_CASE("default bbox from cameras surrounds the fixation point") {
  auto setup = sphere_setup(8, 64);
  Vec3 lo, hi;
  default_carve_bbox(setup.cameras, lo, hi);
  CHECK((lo.array() < -0.9).all());
  CHECK((hi.array() > 0.9).all());
}
