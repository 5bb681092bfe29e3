#include "hexrec/decimate.hpp"
#include "hexrec/hex.hpp"
#include "hexrec/primitives.hpp"
#include "hexrec/remesh.hpp"

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace hexrec;

namespace {

// Degrade valence regularity by applying legal but pointless edge flips.
HexMesh degrade_valences(HexMesh m, int n_flips, std::uint64_t seed) {
  Rng rng(seed);
  for (int k = 0; k < n_flips; ++k) {
    auto edges = edge_list(m);
    const auto& e = edges[rng.next_below(edges.size())];
    const auto& f0 = m.faces[e.fa];
    const auto& f1 = m.faces[e.fb];
    int c = -1, d = -1;
    for (int i = 0; i < 3; ++i) {
      if (f0[i] != e.a && f0[i] != e.b) c = f0[i];
      if (f1[i] != e.a && f1[i] != e.b) d = f1[i];
    }
    bool adjacent = false;
    for (const auto& e2 : edges)
      if ((e2.a == std::min(c, d)) && (e2.b == std::max(c, d))) adjacent = true;
    if (adjacent) continue;
    int a = e.a, b = e.b;
    bool ab = false;
    for (int i = 0; i < 3; ++i)
      if (f0[i] == a && f0[(i + 1) % 3] == b) ab = true;
    if (!ab) std::swap(a, b);
    m.faces[e.fa] = {a, d, c};
    m.faces[e.fb] = {d, b, c};
  }
  m.invalidate_adjacency();
  m.build_adjacency();
  return m;
}

}  // namespace

TEST_CASE("passes=0 returns the identical mesh") {
  HexMesh m = make_geodesic_sphere(2);
  HexMesh out = isotropic_remesh(m, 0.5 * mean_edge_length(m), 0);
  REQUIRE(out.vertex_count() == m.vertex_count());
  REQUIRE(out.faces == m.faces);
  for (int v = 0; v < m.vertex_count(); ++v)
    CHECK(out.positions[v] == m.positions[v]);
}

TEST_CASE("uniform geodesic sphere at target length barely drifts") {
  HexMesh m = make_geodesic_sphere(3);
  const double target = mean_edge_length(m);
  HexMesh out = isotropic_remesh(m, target, 3);
  check_mesh_valid(out);
  // Same resolution, no splits or collapses expected.
  CHECK(out.vertex_count() == m.vertex_count());
  Bvh bvh(m);
  double max_drift = 0.0;
  for (const auto& p : out.positions)
    max_drift = std::max(max_drift, std::sqrt(bvh.closest_point(m, p).dist2));
  CHECK(max_drift < 0.05 * target);
}

TEST_CASE("remeshing to a coarser target stays closed and manifold") {
  HexMesh m = make_geodesic_sphere(3);
  const double target = 2.2 * mean_edge_length(m);
  HexMesh out = isotropic_remesh(m, target, 5);
  check_mesh_valid(out);
  CHECK(euler_characteristic(out) == 2);
  double mean = mean_edge_length(out);
  CHECK(std::abs(mean - target) < 0.25 * target);
}

TEST_CASE("remeshing to a finer target stays closed and manifold") {
  HexMesh m = make_geodesic_sphere(2);
  const double target = 0.45 * mean_edge_length(m);
  HexMesh out = isotropic_remesh(m, target, 5);
  check_mesh_valid(out);
  CHECK(euler_characteristic(out) == 2);
  double mean = mean_edge_length(out);
  CHECK(std::abs(mean - target) < 0.25 * target);
  // Surface preserved: all vertices near the unit sphere.
  for (const auto& p : out.positions) CHECK(std::abs(p.norm() - 1.0) < 0.05);
}

TEST_CASE("valence-6 fraction strictly increases on an irregular mesh") {
  HexMesh m = degrade_valences(make_geodesic_sphere(3), 220, 17);
  double before = static_cast<double>(count_valence(m, 6)) / m.vertex_count();
  HexMesh out = isotropic_remesh(m, mean_edge_length(m), 4);
  double after = static_cast<double>(count_valence(out, 6)) / out.vertex_count();
  CHECK(after > before);
}

TEST_CASE("torus remeshing preserves genus") {
  HexMesh m = make_torus(1.0, 0.4, 36, 18);
  HexMesh out = isotropic_remesh(m, 1.3 * mean_edge_length(m), 4);
  check_mesh_valid(out);
  CHECK(euler_characteristic(out) == 0);
}

TEST_CASE("remeshing carries features by the same interpolation") {
  HexMesh m = make_geodesic_sphere(2);
  // Feature 0 = x coordinate: midpoint interpolation keeps the relation up
  // to smoothing drift, which stays under one target edge length.
  for (int v = 0; v < m.vertex_count(); ++v)
    m.features(v, 0) = m.positions[v].x();
  const double target = 0.6 * mean_edge_length(m);
  HexMesh out = isotropic_remesh(m, target, 3);
  for (int v = 0; v < out.vertex_count(); ++v)
    CHECK(std::abs(out.features(v, 0) - out.positions[v].x()) < target);
}

TEST_CASE("invalid target edge length is rejected") {
  HexMesh m = make_icosahedron();
  CHECK_THROWS_AS(isotropic_remesh(m, 0.0, 1), DataError);
}

TEST_CASE("QEM decimation hits the vertex budget and keeps the surface") {
  HexMesh m = make_geodesic_sphere(4);  // 2562 vertices
  HexMesh out = decimate_qem(m, 300);
  check_mesh_valid(out);
  CHECK(out.vertex_count() <= 310);
  CHECK(out.vertex_count() >= 250);
  CHECK(euler_characteristic(out) == 2);
  for (const auto& p : out.positions) CHECK(std::abs(p.norm() - 1.0) < 0.05);
}

TEST_CASE("QEM decimation preserves torus genus") {
  HexMesh m = make_torus(1.0, 0.4, 48, 24);
  HexMesh out = decimate_qem(m, 200);
  check_mesh_valid(out);
  CHECK(euler_characteristic(out) == 0);
}

TEST_CASE("decimation is deterministic") {
  HexMesh m = testing::make_random_mesh(3, 0.03, 23);
  HexMesh a = decimate_qem(m, 500);
  HexMesh b = decimate_qem(m, 500);
  REQUIRE(a.vertex_count() == b.vertex_count());
  REQUIRE(a.faces == b.faces);
  for (int v = 0; v < a.vertex_count(); ++v) CHECK(a.positions[v] == b.positions[v]);
}
