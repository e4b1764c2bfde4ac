// SPDX-License-Identifier: Apache-2.0

#ifndef CURLFORGE_GEOMETRY_HPP
#define CURLFORGE_GEOMETRY_HPP

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace curlforge {

using Vec3 = Eigen::Vector3d;

struct ParameterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TopologyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct QualityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class MeshKind { Box, SphericalShell, SolidTorus, Imported };

std::string to_string(MeshKind k);

struct BoundaryFace {
  std::array<int, 3> v{};  // oriented so the right-hand normal points outward
  int label = 0;           // component label in 1..m+1, outer boundary last
  int tet = -1;
};

// Oriented interior facet set. Facets are listed so the right-hand normal of
// (v0,v1,v2) is the positive crossing direction.
struct CutSurface {
  std::vector<std::array<int, 3>> facets;
};

struct Mesh {
  MeshKind kind = MeshKind::Imported;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;  // positively oriented
  std::vector<BoundaryFace> boundary_faces;
  std::vector<CutSurface> cuts;
  double characteristic_size = 0.0;  // h = max edge length

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_tets() const { return static_cast<int>(tets.size()); }
  double tet_volume(int t) const;
  Vec3 tet_centroid(int t) const;
};

struct TopologyInfo {
  int m = 0;  // inner boundary components
  int N = 0;  // cutting surfaces
  int boundary_components = 0;
  long euler_characteristic = 0;
};

struct GeometryParams {
  // box
  Vec3 extents = Vec3(1.0, 1.0, 1.0);
  // spherical shell 0 < inner_radius < outer_radius
  double inner_radius = 1.0;
  double outer_radius = 2.0;
  // solid torus 0 < minor_radius < major_radius
  double major_radius = 2.0;
  double minor_radius = 1.0;
};

Mesh build_canonical_mesh(MeshKind kind, int resolution, const GeometryParams& params = {});

TopologyInfo topology_of(const Mesh& mesh);

struct MeshQualityReport {
  double h = 0.0;
  double min_edge = 0.0;
  double min_dihedral_angle = 0.0;  // radians
  double max_dihedral_angle = 0.0;
  double min_radius_ratio = 0.0;    // 3*inradius/circumradius, 1 for regular tet
  double min_volume = 0.0;
};

MeshQualityReport mesh_quality_report(const Mesh& mesh);

// Plain-text mesh format, sections VERTICES / TETS / BOUNDARY / CUTS.
// Writer and reader round-trip bit-exactly (17 significant digits).
void write_mesh(const Mesh& mesh, std::ostream& out);
Mesh read_mesh(std::istream& in);
void write_mesh_file(const Mesh& mesh, const std::string& path);
Mesh read_mesh_file(const std::string& path);

// Which vertices of which tets see the "plus" copy of cut surface i when the
// domain is cut open along it. Entries are (tet, local vertex) pairs.
struct CutIncidence {
  std::vector<std::pair<int, int>> plus_corners;
};
CutIncidence classify_cut_sides(const Mesh& mesh, int cut_index);

}  // namespace curlforge

#endif
