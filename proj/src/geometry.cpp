// SPDX-License-Identifier: Apache-2.0

#include "curlforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <istream>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace curlforge {

namespace {

using Tri = std::array<int, 3>;
using Tet = std::array<int, 4>;

Tri sorted_tri(int a, int b, int c) {
  Tri t{a, b, c};
  std::sort(t.begin(), t.end());
  return t;
}

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

// Faces of a tet, face f is opposite vertex f.
constexpr int kTetFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};

}  // namespace

std::string to_string(MeshKind k) {
  switch (k) {
    case MeshKind::Box: return "box";
    case MeshKind::SphericalShell: return "spherical_shell";
    case MeshKind::SolidTorus: return "solid_torus";
    default: return "imported";
  }
}

double Mesh::tet_volume(int t) const {
  const auto& T = tets[t];
  return signed_volume(vertices[T[0]], vertices[T[1]], vertices[T[2]], vertices[T[3]]);
}

Vec3 Mesh::tet_centroid(int t) const {
  const auto& T = tets[t];
  return (vertices[T[0]] + vertices[T[1]] + vertices[T[2]] + vertices[T[3]]) / 4.0;
}

namespace {

void push_kuhn_cell(std::vector<Tet>& tets, const std::array<int, 8>& c) {
  // c indexed by bit pattern zyx: c[x + 2y + 4z]. Six path simplices from
  // corner 0 to corner 7; odd permutations need a swap for positive volume.
  static constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                      {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  static constexpr int sign[6] = {1, -1, -1, 1, 1, -1};
  for (int p = 0; p < 6; ++p) {
    int mask = 0;
    Tet t;
    t[0] = c[0];
    for (int s = 0; s < 3; ++s) {
      mask |= 1 << perms[p][s];
      t[s + 1] = c[mask];
    }
    if (sign[p] < 0) std::swap(t[2], t[3]);
    tets.push_back(t);
  }
}

void extract_boundary(Mesh& mesh, const std::function<int(const Vec3&)>& label_of) {
  std::map<Tri, std::pair<int, int>> count;  // face -> (count, tet)
  for (int t = 0; t < mesh.num_tets(); ++t) {
    for (int f = 0; f < 4; ++f) {
      Tri tri = sorted_tri(mesh.tets[t][kTetFace[f][0]], mesh.tets[t][kTetFace[f][1]],
                           mesh.tets[t][kTetFace[f][2]]);
      auto [it, fresh] = count.try_emplace(tri, 0, t);
      it->second.first++;
      it->second.second = t;
    }
  }
  for (const auto& [tri, ct] : count) {
    if (ct.first == 1) {
      BoundaryFace bf;
      bf.tet = ct.second;
      bf.v = tri;
      // orient outward: the opposite vertex must lie on the negative side
      const auto& T = mesh.tets[bf.tet];
      int d = -1;
      for (int k = 0; k < 4; ++k)
        if (T[k] != tri[0] && T[k] != tri[1] && T[k] != tri[2]) d = T[k];
      const Vec3& a = mesh.vertices[tri[0]];
      Vec3 n = (mesh.vertices[tri[1]] - a).cross(mesh.vertices[tri[2]] - a);
      if (n.dot(mesh.vertices[d] - a) > 0) std::swap(bf.v[1], bf.v[2]);
      Vec3 centroid = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
      bf.label = label_of(centroid);
      mesh.boundary_faces.push_back(bf);
    } else if (ct.first != 2) {
      throw TopologyError("mesh face shared by more than two tets");
    }
  }
}

double max_edge_length(const Mesh& mesh) {
  double h = 0;
  for (const auto& T : mesh.tets)
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        h = std::max(h, (mesh.vertices[T[i]] - mesh.vertices[T[j]]).norm());
  return h;
}

Mesh build_box(int n, const GeometryParams& p) {
  if (p.extents.minCoeff() <= 0) throw ParameterError("box extents must be positive");
  Mesh mesh;
  mesh.kind = MeshKind::Box;
  auto vid = [&](int i, int j, int k) { return (k * (n + 1) + j) * (n + 1) + i; };
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i)
        mesh.vertices.emplace_back(p.extents.x() * i / n, p.extents.y() * j / n,
                                   p.extents.z() * k / n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        std::array<int, 8> c;
        for (int b = 0; b < 8; ++b) c[b] = vid(i + (b & 1), j + ((b >> 1) & 1), k + (b >> 2));
        push_kuhn_cell(mesh.tets, c);
      }
  extract_boundary(mesh, [](const Vec3&) { return 1; });
  return mesh;
}

Mesh build_shell(int n, const GeometryParams& p) {
  const double a = p.inner_radius, b = p.outer_radius;
  if (!(a > 0 && a < b)) throw ParameterError("shell radii must satisfy 0 < a < b");
  Mesh mesh;
  mesh.kind = MeshKind::SphericalShell;

  // cube-sphere surface grid: integer points on the surface of [-n,n]^3
  std::map<std::array<int, 3>, int> surface_id;
  std::vector<std::array<int, 3>> surface_pts;
  auto surf = [&](int x, int y, int z) {
    std::array<int, 3> key{x, y, z};
    auto it = surface_id.find(key);
    if (it != surface_id.end()) return it->second;
    int id = static_cast<int>(surface_pts.size());
    surface_id.emplace(key, id);
    surface_pts.push_back(key);
    return id;
  };
  // quads per face of the cube, outward oriented
  struct Quad { int q[4]; };
  std::vector<Quad> quads;
  auto add_face = [&](Vec3 origin, Vec3 du, Vec3 dv) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        auto pt = [&](int ii, int jj) {
          Vec3 q = origin + du * ii + dv * jj;
          return surf(static_cast<int>(std::lround(q.x())), static_cast<int>(std::lround(q.y())),
                      static_cast<int>(std::lround(q.z())));
        };
        quads.push_back({{pt(i, j), pt(i + 1, j), pt(i + 1, j + 1), pt(i, j + 1)}});
      }
  };
  const double N = n;
  add_face(Vec3(N, -N, -N), Vec3(0, 2, 0), Vec3(0, 0, 2));    // +x
  add_face(Vec3(-N, -N, -N), Vec3(0, 0, 2), Vec3(0, 2, 0));   // -x
  add_face(Vec3(-N, N, -N), Vec3(2, 0, 0), Vec3(0, 0, 2));    // +y  (swap for outward)
  add_face(Vec3(-N, -N, -N), Vec3(0, 0, 2), Vec3(2, 0, 0));   // -y
  add_face(Vec3(-N, -N, N), Vec3(0, 2, 0), Vec3(2, 0, 0));    // +z
  add_face(Vec3(-N, -N, -N), Vec3(2, 0, 0), Vec3(0, 2, 0));   // -z
  // re-orient +y and +z faces outward
  // (verified below by positive volumes; orientation errors would flip tets)

  int n_r = std::max(1, static_cast<int>(std::lround((b - a) / ((M_PI / 4.0) * 0.5 * (a + b) / n))));
  const int ns = static_cast<int>(surface_pts.size());
  // layered vertices
  for (int l = 0; l <= n_r; ++l) {
    double r = a + (b - a) * l / n_r;
    for (const auto& key : surface_pts) {
      Vec3 q(key[0], key[1], key[2]);
      mesh.vertices.push_back(q.normalized() * r);
    }
  }
  auto lv = [&](int l, int s) { return l * ns + s; };

  // hexes split into 24 tets around face centers and the cell center
  std::map<std::array<int, 4>, int> face_center;
  auto fc = [&](int v0, int v1, int v2, int v3) {
    std::array<int, 4> key{v0, v1, v2, v3};
    std::sort(key.begin(), key.end());
    auto it = face_center.find(key);
    if (it != face_center.end()) return it->second;
    int id = mesh.num_vertices();
    mesh.vertices.push_back((mesh.vertices[v0] + mesh.vertices[v1] + mesh.vertices[v2] +
                             mesh.vertices[v3]) / 4.0);
    face_center.emplace(key, id);
    return id;
  };
  for (int l = 0; l < n_r; ++l) {
    for (const auto& q : quads) {
      int lo[4], hi[4];
      for (int k = 0; k < 4; ++k) lo[k] = lv(l, q.q[k]), hi[k] = lv(l + 1, q.q[k]);
      int cc = mesh.num_vertices();
      Vec3 csum = Vec3::Zero();
      for (int k = 0; k < 4; ++k) csum += mesh.vertices[lo[k]] + mesh.vertices[hi[k]];
      mesh.vertices.push_back(csum / 8.0);
      auto add_pyramid = [&](int v0, int v1, int v2, int v3) {
        // quad face (v0..v3) + cell center, split by face center into 4 tets
        int f = fc(v0, v1, v2, v3);
        int ring[4] = {v0, v1, v2, v3};
        for (int k = 0; k < 4; ++k) {
          Tet t{ring[k], ring[(k + 1) % 4], f, cc};
          if (signed_volume(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]],
                            mesh.vertices[t[3]]) < 0)
            std::swap(t[0], t[1]);
          mesh.tets.push_back(t);
        }
      };
      add_pyramid(lo[0], lo[1], lo[2], lo[3]);
      add_pyramid(hi[0], hi[1], hi[2], hi[3]);
      for (int k = 0; k < 4; ++k)
        add_pyramid(lo[k], lo[(k + 1) % 4], hi[(k + 1) % 4], hi[k]);
    }
  }
  const double rmid = 0.5 * (a + b);
  extract_boundary(mesh, [rmid](const Vec3& c) { return c.norm() < rmid ? 1 : 2; });
  return mesh;
}

Mesh build_torus(int n, const GeometryParams& p) {
  const double R = p.major_radius, r = p.minor_radius;
  if (!(r > 0 && r < R)) throw ParameterError("torus radii must satisfy 0 < r < R");
  if (n < 2) throw TopologyError("resolution too small to host a cutting surface");
  Mesh mesh;
  mesh.kind = MeshKind::SolidTorus;
  const int ntheta = std::max(4, static_cast<int>(std::lround(2 * M_PI * R / (2.0 * r / n))));

  // square-to-disk map keeps the cross-section logically structured
  auto disk = [&](int i, int j) {
    double u = 2.0 * i / n - 1.0, v = 2.0 * j / n - 1.0;
    return Eigen::Vector2d(u * std::sqrt(1.0 - v * v / 2.0), v * std::sqrt(1.0 - u * u / 2.0));
  };
  auto vid = [&](int i, int j, int k) { return ((k % ntheta) * (n + 1) + j) * (n + 1) + i; };
  for (int k = 0; k < ntheta; ++k) {
    double th = 2 * M_PI * k / ntheta;
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) {
        Eigen::Vector2d d = r * disk(i, j);
        double rho = R + d.x();
        mesh.vertices.emplace_back(rho * std::cos(th), rho * std::sin(th), d.y());
      }
  }
  for (int k = 0; k < ntheta; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        std::array<int, 8> c;
        for (int b = 0; b < 8; ++b)
          c[b] = vid(i + (b & 1), j + ((b >> 1) & 1), k + (b >> 2));
        push_kuhn_cell(mesh.tets, c);
      }
  extract_boundary(mesh, [](const Vec3&) { return 1; });

  // meridian cut at theta = 0, oriented so positive crossing increases theta
  CutSurface cut;
  const Vec3 theta_dir(0, 1, 0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      int q00 = vid(i, j, 0), q10 = vid(i + 1, j, 0), q11 = vid(i + 1, j + 1, 0),
          q01 = vid(i, j + 1, 0);
      for (Tri tri : {Tri{q00, q10, q11}, Tri{q00, q11, q01}}) {
        const Vec3& a0 = mesh.vertices[tri[0]];
        Vec3 nrm = (mesh.vertices[tri[1]] - a0).cross(mesh.vertices[tri[2]] - a0);
        if (nrm.dot(theta_dir) < 0) std::swap(tri[1], tri[2]);
        cut.facets.push_back(tri);
      }
    }
  mesh.cuts.push_back(std::move(cut));
  return mesh;
}

}  // namespace

Mesh build_canonical_mesh(MeshKind kind, int resolution, const GeometryParams& params) {
  if (resolution < 2) throw ParameterError("resolution must be at least 2");
  Mesh mesh;
  switch (kind) {
    case MeshKind::Box: mesh = build_box(resolution, params); break;
    case MeshKind::SphericalShell: mesh = build_shell(resolution, params); break;
    case MeshKind::SolidTorus: mesh = build_torus(resolution, params); break;
    default: throw ParameterError("cannot build an imported mesh");
  }
  for (int t = 0; t < mesh.num_tets(); ++t)
    if (mesh.tet_volume(t) <= 0) throw QualityError("non-positive tet volume in generated mesh");
  mesh.characteristic_size = max_edge_length(mesh);
  return mesh;
}

TopologyInfo topology_of(const Mesh& mesh) {
  TopologyInfo info;
  info.N = static_cast<int>(mesh.cuts.size());

  // labels must be contiguous 1..m+1
  int max_label = 0;
  std::map<int, std::vector<int>> by_label;
  for (int f = 0; f < static_cast<int>(mesh.boundary_faces.size()); ++f) {
    by_label[mesh.boundary_faces[f].label].push_back(f);
    max_label = std::max(max_label, mesh.boundary_faces[f].label);
  }
  if (by_label.empty()) throw FormatError("mesh has no boundary faces");
  for (int l = 1; l <= max_label; ++l)
    if (!by_label.count(l)) throw FormatError("boundary labels are not contiguous 1..m+1");
  info.m = max_label - 1;

  // each label set must be a connected face component, and face components
  // must not merge labels: BFS over shared edges
  std::map<std::array<int, 2>, std::vector<int>> edge_to_faces;
  for (int f = 0; f < static_cast<int>(mesh.boundary_faces.size()); ++f) {
    const auto& v = mesh.boundary_faces[f].v;
    for (int e = 0; e < 3; ++e) {
      std::array<int, 2> key{std::min(v[e], v[(e + 1) % 3]), std::max(v[e], v[(e + 1) % 3])};
      edge_to_faces[key].push_back(f);
    }
  }
  std::vector<int> comp(mesh.boundary_faces.size(), -1);
  int ncomp = 0;
  for (size_t f0 = 0; f0 < mesh.boundary_faces.size(); ++f0) {
    if (comp[f0] >= 0) continue;
    std::queue<int> q;
    q.push(static_cast<int>(f0));
    comp[f0] = ncomp;
    while (!q.empty()) {
      int f = q.front();
      q.pop();
      const auto& v = mesh.boundary_faces[f].v;
      for (int e = 0; e < 3; ++e) {
        std::array<int, 2> key{std::min(v[e], v[(e + 1) % 3]), std::max(v[e], v[(e + 1) % 3])};
        for (int g : edge_to_faces[key])
          if (comp[g] < 0) {
            comp[g] = ncomp;
            q.push(g);
          }
      }
    }
    ++ncomp;
  }
  info.boundary_components = ncomp;
  if (ncomp != max_label) throw FormatError("boundary labels do not match face components");
  for (size_t f = 0; f < mesh.boundary_faces.size(); ++f)
    for (size_t g = f + 1; g < mesh.boundary_faces.size(); ++g)
      if (comp[f] == comp[g] && mesh.boundary_faces[f].label != mesh.boundary_faces[g].label)
        throw FormatError("one boundary component carries two labels");

  // Euler characteristic of the complex
  std::map<std::array<int, 2>, bool> edges;
  std::map<Tri, bool> faces;
  for (const auto& T : mesh.tets) {
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        edges[{std::min(T[i], T[j]), std::max(T[i], T[j])}] = true;
    for (int f = 0; f < 4; ++f)
      faces[sorted_tri(T[kTetFace[f][0]], T[kTetFace[f][1]], T[kTetFace[f][2]])] = true;
  }
  info.euler_characteristic = static_cast<long>(mesh.vertices.size()) -
                              static_cast<long>(edges.size()) + static_cast<long>(faces.size()) -
                              static_cast<long>(mesh.tets.size());
  return info;
}

MeshQualityReport mesh_quality_report(const Mesh& mesh) {
  MeshQualityReport rep;
  rep.min_dihedral_angle = M_PI;
  rep.min_radius_ratio = 1.0;
  rep.min_volume = std::numeric_limits<double>::max();
  rep.min_edge = std::numeric_limits<double>::max();
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto& T = mesh.tets[t];
    double vol = mesh.tet_volume(t);
    if (!(vol > 0)) throw QualityError("degenerate tet encountered");
    rep.min_volume = std::min(rep.min_volume, vol);
    Vec3 pts[4];
    for (int i = 0; i < 4; ++i) pts[i] = mesh.vertices[T[i]];
    Vec3 normals[4];
    double areas[4], area_sum = 0;
    for (int f = 0; f < 4; ++f) {
      Vec3 a = pts[kTetFace[f][0]], b = pts[kTetFace[f][1]], c = pts[kTetFace[f][2]];
      Vec3 n = (b - a).cross(c - a);
      if (n.dot(pts[f] - a) > 0) n = -n;  // outward
      normals[f] = n.normalized();
      areas[f] = 0.5 * n.norm();
      area_sum += areas[f];
    }
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        double c = std::clamp(-normals[i].dot(normals[j]), -1.0, 1.0);
        double ang = std::acos(c);
        rep.min_dihedral_angle = std::min(rep.min_dihedral_angle, ang);
        rep.max_dihedral_angle = std::max(rep.max_dihedral_angle, ang);
      }
    double inradius = 3.0 * vol / area_sum;
    // circumcenter from |x-p0| = |x-pi|
    Eigen::Matrix3d A;
    Vec3 rhs;
    for (int i = 1; i < 4; ++i) {
      A.row(i - 1) = 2.0 * (pts[i] - pts[0]).transpose();
      rhs(i - 1) = pts[i].squaredNorm() - pts[0].squaredNorm();
    }
    Vec3 cc = A.fullPivLu().solve(rhs);
    double circum = (cc - pts[0]).norm();
    rep.min_radius_ratio = std::min(rep.min_radius_ratio, 3.0 * inradius / circum);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        double len = (pts[i] - pts[j]).norm();
        rep.h = std::max(rep.h, len);
        rep.min_edge = std::min(rep.min_edge, len);
      }
  }
  return rep;
}

void write_mesh(const Mesh& mesh, std::ostream& out) {
  out << "curlforge-mesh 1 " << to_string(mesh.kind) << "\n";
  out << std::setprecision(17);
  out << "VERTICES " << mesh.num_vertices() << "\n";
  for (const auto& v : mesh.vertices) out << v.x() << " " << v.y() << " " << v.z() << "\n";
  out << "TETS " << mesh.num_tets() << "\n";
  for (const auto& t : mesh.tets) out << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
  out << "BOUNDARY " << mesh.boundary_faces.size() << "\n";
  for (const auto& f : mesh.boundary_faces)
    out << f.v[0] << " " << f.v[1] << " " << f.v[2] << " " << f.label << "\n";
  out << "CUTS " << mesh.cuts.size() << "\n";
  for (size_t i = 0; i < mesh.cuts.size(); ++i) {
    out << "CUT " << i + 1 << " " << mesh.cuts[i].facets.size() << "\n";
    for (const auto& f : mesh.cuts[i].facets) out << f[0] << " " << f[1] << " " << f[2] << "\n";
  }
}

Mesh read_mesh(std::istream& in) {
  Mesh mesh;
  std::string tag;
  int version;
  std::string kind;
  in >> tag >> version >> kind;
  if (tag != "curlforge-mesh" || version != 1) throw FormatError("not a curlforge mesh file");
  if (kind == "box") mesh.kind = MeshKind::Box;
  else if (kind == "spherical_shell") mesh.kind = MeshKind::SphericalShell;
  else if (kind == "solid_torus") mesh.kind = MeshKind::SolidTorus;
  else mesh.kind = MeshKind::Imported;

  auto expect = [&](const char* word) {
    std::string w;
    in >> w;
    if (w != word) throw FormatError(std::string("expected section ") + word);
  };
  int n;
  expect("VERTICES");
  in >> n;
  mesh.vertices.resize(n);
  for (auto& v : mesh.vertices) in >> v.x() >> v.y() >> v.z();
  expect("TETS");
  in >> n;
  mesh.tets.resize(n);
  for (auto& t : mesh.tets) in >> t[0] >> t[1] >> t[2] >> t[3];
  expect("BOUNDARY");
  in >> n;
  mesh.boundary_faces.resize(n);
  for (auto& f : mesh.boundary_faces) in >> f.v[0] >> f.v[1] >> f.v[2] >> f.label;
  expect("CUTS");
  in >> n;
  mesh.cuts.resize(n);
  for (int i = 0; i < n; ++i) {
    std::string w;
    int idx, nf;
    in >> w >> idx >> nf;
    if (w != "CUT") throw FormatError("expected CUT record");
    mesh.cuts[i].facets.resize(nf);
    for (auto& f : mesh.cuts[i].facets) in >> f[0] >> f[1] >> f[2];
  }
  if (!in) throw FormatError("truncated mesh file");

  // restore derived data
  std::map<Tri, std::pair<int, int>> count;
  for (int t = 0; t < mesh.num_tets(); ++t)
    for (int f = 0; f < 4; ++f) {
      Tri tri = sorted_tri(mesh.tets[t][kTetFace[f][0]], mesh.tets[t][kTetFace[f][1]],
                           mesh.tets[t][kTetFace[f][2]]);
      count[tri].first++;
      count[tri].second = t;
    }
  for (auto& f : mesh.boundary_faces) {
    auto it = count.find(sorted_tri(f.v[0], f.v[1], f.v[2]));
    if (it == count.end() || it->second.first != 1)
      throw FormatError("boundary face is not a free face of exactly one tet");
    f.tet = it->second.second;
  }
  mesh.characteristic_size = max_edge_length(mesh);
  return mesh;
}

void write_mesh_file(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path);
  write_mesh(mesh, out);
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return read_mesh(in);
}

CutIncidence classify_cut_sides(const Mesh& mesh, int cut_index) {
  const CutSurface& cut = mesh.cuts.at(cut_index);
  std::map<Tri, int> facet_of;  // sorted tri -> facet idx
  for (size_t i = 0; i < cut.facets.size(); ++i)
    facet_of[sorted_tri(cut.facets[i][0], cut.facets[i][1], cut.facets[i][2])] =
        static_cast<int>(i);

  std::map<Tri, std::vector<int>> face_tets;
  std::unordered_map<int, std::vector<int>> vertex_tets;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    for (int f = 0; f < 4; ++f)
      face_tets[sorted_tri(mesh.tets[t][kTetFace[f][0]], mesh.tets[t][kTetFace[f][1]],
                           mesh.tets[t][kTetFace[f][2]])].push_back(t);
    for (int k = 0; k < 4; ++k) vertex_tets[mesh.tets[t][k]].push_back(t);
  }

  // seed sides from the facet orientations
  std::map<int, int> seed_side;  // tet -> +1/-1 (only tets with a facet on the cut)
  for (size_t i = 0; i < cut.facets.size(); ++i) {
    const auto& F = cut.facets[i];
    Tri key = sorted_tri(F[0], F[1], F[2]);
    auto it = face_tets.find(key);
    if (it == face_tets.end() || it->second.size() != 2)
      throw TopologyError("cut facet must be interior with exactly two adjacent tets");
    const Vec3& a = mesh.vertices[F[0]];
    Vec3 nrm = (mesh.vertices[F[1]] - a).cross(mesh.vertices[F[2]] - a);
    for (int t : it->second) {
      int d = -1;
      for (int k = 0; k < 4; ++k) {
        int v = mesh.tets[t][k];
        if (v != F[0] && v != F[1] && v != F[2]) d = v;
      }
      int side = nrm.dot(mesh.vertices[d] - a) > 0 ? +1 : -1;
      auto [se, fresh] = seed_side.emplace(t, side);
      if (!fresh && se->second != side)
        throw TopologyError("cut facet orientations are inconsistent");
    }
  }

  // gather cut vertices
  std::map<int, bool> on_cut;
  for (const auto& F : cut.facets)
    for (int v : F) on_cut[v] = true;

  CutIncidence inc;
  for (const auto& [v, unused] : on_cut) {
    const auto& around = vertex_tets[v];
    std::map<int, int> side;
    std::queue<int> q;
    for (int t : around) {
      auto it = seed_side.find(t);
      if (it != seed_side.end()) {
        side[t] = it->second;
        q.push(t);
      }
    }
    if (q.empty()) throw TopologyError("cut vertex has no adjacent cut facet");
    while (!q.empty()) {
      int t = q.front();
      q.pop();
      for (int f = 0; f < 4; ++f) {
        Tri key = sorted_tri(mesh.tets[t][kTetFace[f][0]], mesh.tets[t][kTetFace[f][1]],
                             mesh.tets[t][kTetFace[f][2]]);
        bool contains_v = key[0] == v || key[1] == v || key[2] == v;
        if (!contains_v || facet_of.count(key)) continue;  // do not cross the cut
        for (int g : face_tets[key]) {
          if (side.count(g)) {
            if (side[g] != side[t])
              throw TopologyError("cut surface does not separate tets around a vertex");
            continue;
          }
          side[g] = side[t];
          q.push(g);
        }
      }
    }
    for (int t : around) {
      auto it = side.find(t);
      if (it == side.end())
        throw TopologyError("cut surface does not separate tets around a vertex");
      if (it->second > 0)
        for (int k = 0; k < 4; ++k)
          if (mesh.tets[t][k] == v) inc.plus_corners.emplace_back(t, k);
    }
  }
  std::sort(inc.plus_corners.begin(), inc.plus_corners.end());
  return inc;
}

}  // namespace curlforge
