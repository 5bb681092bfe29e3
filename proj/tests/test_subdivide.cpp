#include "hexrec/hex.hpp"
#include "hexrec/primitives.hpp"
#include "hexrec/subdivide.hpp"

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace hexrec;

TEST_CASE("midpoint split counts: icosahedron") {
  HexMesh m = make_icosahedron();
  m.build_adjacency();
  HexMesh s = subdivide(m);
  CHECK(s.vertex_count() == 42);  // V + E = 12 + 30
  CHECK(s.face_count() == 80);    // 4F
  CHECK(edge_count(s) == 120);    // 2E + 3F
  CHECK(euler_characteristic(s) == 2);
}

TEST_CASE("octahedron: original valences preserved, extraordinary count constant") {
  HexMesh m = make_octahedron();
  m.build_adjacency();
  HexMesh s = subdivide(m);
  CHECK(s.vertex_count() == 18);
  CHECK(s.face_count() == 32);
  int extraordinary = 0;
  for (int v = 0; v < s.vertex_count(); ++v)
    if (s.valence(v) != 6) ++extraordinary;
  CHECK(extraordinary == 6);
}

TEST_CASE("torus: Euler characteristic preserved") {
  HexMesh m = make_torus(1.0, 0.3, 10, 6);
  m.build_adjacency();
  HexMesh s = subdivide(m);
  CHECK(euler_characteristic(s) == 0);
  CHECK(s.face_count() == 4 * m.face_count());
  CHECK(s.vertex_count() == m.vertex_count() + edge_count(m));
}

TEST_CASE("geodesic sphere: chord midpoints stay inside the sphere") {
  HexMesh m = make_geodesic_sphere(2);
  m.build_adjacency();
  HexMesh s = subdivide(m);
  for (const auto& p : s.positions) CHECK(p.norm() <= 1.0 + 1e-12);
}

TEST_CASE("midpoint features are endpoint averages") {
  HexMesh m = make_icosahedron();
  Rng rng(4);
  for (int v = 0; v < m.vertex_count(); ++v)
    for (int c = 0; c < m.feature_dim(); ++c) m.features(v, c) = rng.uniform(-2, 2);
  m.build_adjacency();
  HexMesh s = subdivide(m);

  // Recover each midpoint's source edge from its position.
  for (int v = m.vertex_count(); v < s.vertex_count(); ++v) {
    bool matched = false;
    for (const auto& e : edge_list(m)) {
      Vec3 mid = 0.5 * (m.positions[e.a] + m.positions[e.b]);
      if ((mid - s.positions[v]).norm() < 1e-12) {
        Eigen::RowVectorXd expect = 0.5 * (m.features.row(e.a) + m.features.row(e.b));
        CHECK((s.features.row(v) - expect).cwiseAbs().maxCoeff() < 1e-12);
        matched = true;
        break;
      }
    }
    CHECK(matched);
  }
}

TEST_CASE("subdivision does not change the centrosymmetry null space") {
  // A subdivided lattice pillow still has exactly-zero interior terms.
  auto lattice = testing::make_lattice_pillow(6, 6);
  HexMesh s = subdivide(lattice.mesh);
  // Midpoints of interior lattice edges have centrosymmetric rings too;
  // check the original interior vertices stay exactly at zero energy.
  for (int v : lattice.front_interior)
    CHECK(hex_vertex_energy(s, v) == 0.0);
}
