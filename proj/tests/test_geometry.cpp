// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>

#include "curlforge/geometry.hpp"
#include "doctest.h"

using namespace curlforge;

TEST_CASE("box mesh counts at resolution 2") {
  Mesh m = build_canonical_mesh(MeshKind::Box, 2);
  CHECK(m.num_vertices() == 27);
  CHECK(m.num_tets() == 48);  // 6 tets per hex cell, 2x2x2 cells
  TopologyInfo t = topology_of(m);
  CHECK(t.m == 0);
  CHECK(t.N == 0);
  CHECK(t.euler_characteristic == 1);  // ball
}

TEST_CASE("shell and torus topology") {
  Mesh shell = build_canonical_mesh(MeshKind::SphericalShell, 3);
  TopologyInfo ts = topology_of(shell);
  CHECK(ts.m == 1);
  CHECK(ts.N == 0);
  CHECK(ts.boundary_components == 2);
  CHECK(ts.euler_characteristic == 2);  // retracts to S^2

  Mesh torus = build_canonical_mesh(MeshKind::SolidTorus, 3);
  TopologyInfo tt = topology_of(torus);
  CHECK(tt.m == 0);
  CHECK(tt.N == 1);
  CHECK(tt.euler_characteristic == 0);  // retracts to S^1
}

TEST_CASE("parameter validation") {
  GeometryParams p;
  p.inner_radius = 2.0;
  p.outer_radius = 1.0;
  CHECK_THROWS_AS(build_canonical_mesh(MeshKind::SphericalShell, 3, p), ParameterError);
  GeometryParams q;
  q.major_radius = 0.5;
  q.minor_radius = 1.0;
  CHECK_THROWS_AS(build_canonical_mesh(MeshKind::SolidTorus, 3, q), ParameterError);
  CHECK_THROWS_AS(build_canonical_mesh(MeshKind::Box, 1), ParameterError);
}

TEST_CASE("positive volumes and closed-surface normal sums") {
  for (MeshKind k : {MeshKind::Box, MeshKind::SphericalShell, MeshKind::SolidTorus}) {
    Mesh m = build_canonical_mesh(k, 3);
    for (int t = 0; t < m.num_tets(); ++t) CHECK(m.tet_volume(t) > 0);

    // sum of area-weighted normals over each closed component vanishes
    std::map<int, Vec3> sums;
    std::map<int, double> areas;
    for (const auto& f : m.boundary_faces) {
      Vec3 a = m.vertices[f.v[0]], b = m.vertices[f.v[1]], c = m.vertices[f.v[2]];
      Vec3 n = 0.5 * (b - a).cross(c - a);
      sums[f.label] += n;
      areas[f.label] += n.norm();
    }
    for (const auto& [label, s] : sums) CHECK(s.norm() <= 1e-10 * areas[label]);
  }
}

TEST_CASE("quality report: Kuhn angles and h behavior") {
  Mesh m = build_canonical_mesh(MeshKind::Box, 2);
  MeshQualityReport q = mesh_quality_report(m);
  // path simplices of the cube: dihedral angles between 45 and 90 degrees
  CHECK(q.min_dihedral_angle == doctest::Approx(M_PI / 4).epsilon(1e-10));
  CHECK(q.max_dihedral_angle == doctest::Approx(M_PI / 2).epsilon(1e-10));
  CHECK(q.h == doctest::Approx(std::sqrt(3.0) / 2));  // cell diagonal

  Mesh m2 = build_canonical_mesh(MeshKind::Box, 4);
  MeshQualityReport q2 = mesh_quality_report(m2);
  CHECK(std::abs(q2.h - q.h / 2) <= 0.01 * q.h);

  Mesh t4 = build_canonical_mesh(MeshKind::SolidTorus, 4);
  Mesh t8 = build_canonical_mesh(MeshKind::SolidTorus, 8);
  double h4 = mesh_quality_report(t4).h, h8 = mesh_quality_report(t8).h;
  CHECK(std::abs(h8 - h4 / 2) <= 0.06 * h4);
}

TEST_CASE("cut surface conformity and side classification") {
  Mesh m = build_canonical_mesh(MeshKind::SolidTorus, 3);
  REQUIRE(m.cuts.size() == 1);
  CutIncidence inc = classify_cut_sides(m, 0);
  CHECK(!inc.plus_corners.empty());
  // each plus corner references a tet actually containing the vertex
  for (auto [t, c] : inc.plus_corners) {
    CHECK(t >= 0);
    CHECK(t < m.num_tets());
    CHECK(c >= 0);
    CHECK(c < 4);
  }
}

TEST_CASE("mesh file round trip is bit exact") {
  Mesh m = build_canonical_mesh(MeshKind::SolidTorus, 3);
  std::ostringstream out1;
  write_mesh(m, out1);
  std::istringstream in(out1.str());
  Mesh m2 = read_mesh(in);
  std::ostringstream out2;
  write_mesh(m2, out2);
  CHECK(out1.str() == out2.str());
  CHECK(m2.num_vertices() == m.num_vertices());
  CHECK(m2.cuts.size() == m.cuts.size());
  TopologyInfo t = topology_of(m2);
  CHECK(t.N == 1);
}

TEST_CASE("bad labels rejected") {
  Mesh m = build_canonical_mesh(MeshKind::Box, 2);
  for (auto& f : m.boundary_faces) f.label = 2;  // not contiguous from 1
  CHECK_THROWS_AS(topology_of(m), FormatError);
}
