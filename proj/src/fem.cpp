// SPDX-License-Identifier: Apache-2.0

#include "curlforge/fem.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <map>

namespace curlforge {

namespace {

constexpr int kLocalEdge[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

// degree-2 rule, 4 interior points
constexpr double kQa = 0.5854101966249685;
constexpr double kQb = 0.1381966011250105;
constexpr double kQuadLambda[4][4] = {{kQa, kQb, kQb, kQb},
                                      {kQb, kQa, kQb, kQb},
                                      {kQb, kQb, kQa, kQb},
                                      {kQb, kQb, kQb, kQa}};

// Gauss-Legendre 5 on [0,1]
constexpr double kG5x[5] = {0.046910077030668, 0.230765344947158, 0.5,
                            0.769234655052841, 0.953089922969332};
constexpr double kG5w[5] = {0.118463442528095, 0.239314335249683, 0.284444444444444,
                            0.239314335249683, 0.118463442528095};

}  // namespace

int FemSpaces::edge_index(int a, int b) const {
  // edges are sorted lexicographically, binary search
  std::array<int, 2> key{std::min(a, b), std::max(a, b)};
  auto it = std::lower_bound(edges.begin(), edges.end(), key);
  if (it == edges.end() || *it != key) return -1;
  return static_cast<int>(it - edges.begin());
}

FemSpaces build_spaces(const Mesh& mesh) {
  FemSpaces sp;
  sp.mesh = &mesh;
  const int T = mesh.num_tets();
  const int V = mesh.num_vertices();

  // global edges, sorted so edge_index can bisect
  {
    std::vector<std::array<int, 2>> all;
    all.reserve(6 * T);
    for (const auto& t : mesh.tets)
      for (const auto& le : kLocalEdge) {
        int a = t[le[0]], b = t[le[1]];
        all.push_back({std::min(a, b), std::max(a, b)});
      }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    sp.edges = std::move(all);
  }
  sp.tet_edges.resize(T);
  sp.tet_edge_sign.resize(T);
  sp.grad_lambda.resize(T);
  sp.volume.resize(T);
  sp.edge_curl.resize(T);
  sp.edge_basis.resize(T);
  sp.quad_x.resize(4 * T, 3);
  sp.quad_w.resize(4 * T);

  for (int t = 0; t < T; ++t) {
    const auto& tet = mesh.tets[t];
    Vec3 p[4];
    for (int i = 0; i < 4; ++i) p[i] = mesh.vertices[tet[i]];
    Eigen::Matrix3d J;
    for (int i = 0; i < 3; ++i) J.col(i) = p[i + 1] - p[0];
    double vol = J.determinant() / 6.0;
    sp.volume[t] = vol;
    sp.domain_volume += vol;
    Eigen::Matrix3d Jinv = J.inverse();
    Eigen::Matrix<double, 3, 4> G;
    G.col(0).setZero();
    for (int i = 0; i < 3; ++i) G.col(i + 1) = Jinv.row(i).transpose();
    G.col(0) = -(G.col(1) + G.col(2) + G.col(3));
    sp.grad_lambda[t] = G;

    for (int k = 0; k < 6; ++k) {
      int li = kLocalEdge[k][0], lj = kLocalEdge[k][1];
      int a = tet[li], b = tet[lj];
      sp.tet_edges[t][k] = sp.edge_index(a, b);
      sp.tet_edge_sign[t][k] = a < b ? 1.0 : -1.0;
      Vec3 gi = G.col(li), gj = G.col(lj);
      sp.edge_curl[t][k] = sp.tet_edge_sign[t][k] * 2.0 * gi.cross(gj);
    }
    for (int q = 0; q < 4; ++q) {
      Vec3 x = Vec3::Zero();
      for (int i = 0; i < 4; ++i) x += kQuadLambda[q][i] * p[i];
      sp.quad_x.row(4 * t + q) = x.transpose();
      sp.quad_w(4 * t + q) = vol / 4.0;
      for (int k = 0; k < 6; ++k) {
        int li = kLocalEdge[k][0], lj = kLocalEdge[k][1];
        sp.edge_basis[t][q][k] =
            sp.tet_edge_sign[t][k] * (kQuadLambda[q][li] * G.col(lj) - kQuadLambda[q][lj] * G.col(li));
      }
    }
  }

  sp.vertex_on_boundary.assign(V, 0);
  sp.edge_on_boundary.assign(sp.edges.size(), 0);
  sp.edge_boundary_index.assign(sp.edges.size(), -1);
  for (const auto& bf : mesh.boundary_faces) {
    FemSpaces::BFace f;
    f.v = bf.v;
    f.label = bf.label;
    f.tet = bf.tet;
    sp.num_labels = std::max(sp.num_labels, bf.label);
    Vec3 a = mesh.vertices[bf.v[0]], b = mesh.vertices[bf.v[1]], c = mesh.vertices[bf.v[2]];
    Vec3 n = (b - a).cross(c - a);
    f.area = 0.5 * n.norm();
    f.normal = n.normalized();
    for (int e = 0; e < 3; ++e) {
      int va = bf.v[e], vb = bf.v[(e + 1) % 3];
      f.edge[e] = sp.edge_index(va, vb);
      f.edge_sign[e] = va < vb ? 1.0 : -1.0;
      f.mid[e] = 0.5 * (mesh.vertices[va] + mesh.vertices[vb]);
      sp.vertex_on_boundary[va] = 1;
      sp.edge_on_boundary[f.edge[e]] = 1;
    }
    sp.bfaces.push_back(f);
  }
  for (size_t e = 0; e < sp.edges.size(); ++e)
    if (sp.edge_on_boundary[e]) {
      sp.edge_boundary_index[e] = static_cast<int>(sp.boundary_edges.size());
      sp.boundary_edges.push_back(static_cast<int>(e));
    }
  return sp;
}

Eigen::VectorXd grad_of(const FemSpaces& sp, const Eigen::VectorXd& nodal) {
  if (nodal.size() != sp.num_vertices()) throw DimensionError("grad_of: nodal size mismatch");
  Eigen::VectorXd g(sp.num_edges());
  for (int e = 0; e < sp.num_edges(); ++e)
    g(e) = nodal(sp.edges[e][1]) - nodal(sp.edges[e][0]);
  return g;
}

CellMat curl_of(const FemSpaces& sp, const Eigen::VectorXd& edge) {
  if (edge.size() != sp.num_edges()) throw DimensionError("curl_of: edge size mismatch");
  CellMat c(sp.num_tets(), 3);
  for (int t = 0; t < sp.num_tets(); ++t) {
    Vec3 v = Vec3::Zero();
    for (int k = 0; k < 6; ++k) v += edge(sp.tet_edges[t][k]) * sp.edge_curl[t][k];
    c.row(t) = v.transpose();
  }
  return c;
}

QuadMat eval_edge(const FemSpaces& sp, const Eigen::VectorXd& edge) {
  QuadMat q(sp.num_quad(), 3);
  for (int t = 0; t < sp.num_tets(); ++t)
    for (int p = 0; p < 4; ++p) {
      Vec3 v = Vec3::Zero();
      for (int k = 0; k < 6; ++k) v += edge(sp.tet_edges[t][k]) * sp.edge_basis[t][p][k];
      q.row(4 * t + p) = v.transpose();
    }
  return q;
}

QuadMat eval_nodal_grad(const FemSpaces& sp, const Eigen::VectorXd& nodal) {
  QuadMat q(sp.num_quad(), 3);
  for (int t = 0; t < sp.num_tets(); ++t) {
    Vec3 g = Vec3::Zero();
    for (int i = 0; i < 4; ++i) g += nodal(sp.mesh->tets[t][i]) * sp.grad_lambda[t].col(i);
    for (int p = 0; p < 4; ++p) q.row(4 * t + p) = g.transpose();
  }
  return q;
}

Eigen::VectorXd eval_nodal(const FemSpaces& sp, const Eigen::VectorXd& nodal) {
  Eigen::VectorXd q(sp.num_quad());
  for (int t = 0; t < sp.num_tets(); ++t)
    for (int p = 0; p < 4; ++p) {
      double v = 0;
      for (int i = 0; i < 4; ++i) v += nodal(sp.mesh->tets[t][i]) * kQuadLambda[p][i];
      q(4 * t + p) = v;
    }
  return q;
}

QuadMat cell_to_quad(const FemSpaces& sp, const CellMat& c) {
  QuadMat q(sp.num_quad(), 3);
  for (int t = 0; t < sp.num_tets(); ++t)
    for (int p = 0; p < 4; ++p) q.row(4 * t + p) = c.row(t);
  return q;
}

CellMat quad_to_cell(const FemSpaces& sp, const QuadMat& q) {
  CellMat c(sp.num_tets(), 3);
  for (int t = 0; t < sp.num_tets(); ++t)
    c.row(t) = 0.25 * (q.row(4 * t) + q.row(4 * t + 1) + q.row(4 * t + 2) + q.row(4 * t + 3));
  return c;
}

Vec3 eval_edge_at(const FemSpaces& sp, const Eigen::VectorXd& edge, int t, const Vec3& x) {
  const auto& tet = sp.mesh->tets[t];
  const auto& G = sp.grad_lambda[t];
  Vec3 p0 = sp.mesh->vertices[tet[0]];
  double lam[4];
  for (int i = 1; i < 4; ++i) lam[i] = G.col(i).dot(x - p0);
  lam[0] = 1.0 - lam[1] - lam[2] - lam[3];
  Vec3 v = Vec3::Zero();
  for (int k = 0; k < 6; ++k) {
    int li = kLocalEdge[k][0], lj = kLocalEdge[k][1];
    v += edge(sp.tet_edges[t][k]) * sp.tet_edge_sign[t][k] *
         (lam[li] * G.col(lj) - lam[lj] * G.col(li));
  }
  return v;
}

double l2_inner(const FemSpaces& sp, const QuadMat& a, const QuadMat& b) {
  if (a.rows() != b.rows()) throw DimensionError("l2_inner: quad size mismatch");
  double s = 0;
  for (int r = 0; r < a.rows(); ++r) s += sp.quad_w(r) * a.row(r).dot(b.row(r));
  return s;
}

double l2_norm(const FemSpaces& sp, const QuadMat& a) { return std::sqrt(std::max(0.0, l2_inner(sp, a, a))); }

double l2_inner_edge(const FemSpaces& sp, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double s = 0;
  for (int t = 0; t < sp.num_tets(); ++t)
    for (int p = 0; p < 4; ++p) {
      Vec3 va = Vec3::Zero(), vb = Vec3::Zero();
      for (int k = 0; k < 6; ++k) {
        va += a(sp.tet_edges[t][k]) * sp.edge_basis[t][p][k];
        vb += b(sp.tet_edges[t][k]) * sp.edge_basis[t][p][k];
      }
      s += sp.quad_w(4 * t + p) * va.dot(vb);
    }
  return s;
}

double l2_norm_edge(const FemSpaces& sp, const Eigen::VectorXd& a) {
  return std::sqrt(std::max(0.0, l2_inner_edge(sp, a, a)));
}

double l2_norm_cell(const FemSpaces& sp, const CellMat& a) {
  double s = 0;
  for (int t = 0; t < sp.num_tets(); ++t) s += sp.volume[t] * a.row(t).squaredNorm();
  return std::sqrt(s);
}

double l2_norm_nodal(const FemSpaces& sp, const Eigen::VectorXd& a) {
  Eigen::VectorXd q = eval_nodal(sp, a);
  double s = 0;
  for (int r = 0; r < q.size(); ++r) s += sp.quad_w(r) * q(r) * q(r);
  return std::sqrt(s);
}

double nodal_mean(const FemSpaces& sp, const Eigen::VectorXd& a) {
  Eigen::VectorXd q = eval_nodal(sp, a);
  double s = 0;
  for (int r = 0; r < q.size(); ++r) s += sp.quad_w(r) * q(r);
  return s / sp.domain_volume;
}

Eigen::VectorXd grad_test_functional(const FemSpaces& sp, const QuadMat& q) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(sp.num_vertices());
  for (int t = 0; t < sp.num_tets(); ++t) {
    Vec3 acc = Vec3::Zero();
    for (int p = 0; p < 4; ++p) acc += sp.quad_w(4 * t + p) * Vec3(q.row(4 * t + p));
    for (int i = 0; i < 4; ++i) r(sp.mesh->tets[t][i]) += acc.dot(sp.grad_lambda[t].col(i));
  }
  return r;
}

Eigen::VectorXd edge_test_functional(const FemSpaces& sp, const QuadMat& q) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(sp.num_edges());
  for (int t = 0; t < sp.num_tets(); ++t)
    for (int p = 0; p < 4; ++p) {
      Vec3 v = sp.quad_w(4 * t + p) * Vec3(q.row(4 * t + p));
      for (int k = 0; k < 6; ++k) r(sp.tet_edges[t][k]) += v.dot(sp.edge_basis[t][p][k]);
    }
  return r;
}

Eigen::VectorXd curl_test_functional(const FemSpaces& sp, const CellMat& c) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(sp.num_edges());
  for (int t = 0; t < sp.num_tets(); ++t) {
    Vec3 v = sp.volume[t] * Vec3(c.row(t));
    for (int k = 0; k < 6; ++k) r(sp.tet_edges[t][k]) += v.dot(sp.edge_curl[t][k]);
  }
  return r;
}

double weak_div_residual(const FemSpaces& sp, const QuadMat& u, bool include_boundary_tests) {
  Eigen::VectorXd r = grad_test_functional(sp, u);
  double s = 0;
  for (int v = 0; v < sp.num_vertices(); ++v)
    if (include_boundary_tests || !sp.vertex_on_boundary[v]) s += r(v) * r(v);
  return std::sqrt(s);
}

SpMat assemble_mass_scalar(const FemSpaces& sp) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(16 * sp.num_tets());
  for (int t = 0; t < sp.num_tets(); ++t)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        trip.emplace_back(sp.mesh->tets[t][i], sp.mesh->tets[t][j],
                          sp.volume[t] * (i == j ? 0.1 : 0.05));
  SpMat M(sp.num_vertices(), sp.num_vertices());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

SpMat assemble_stiffness(const FemSpaces& sp) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(16 * sp.num_tets());
  for (int t = 0; t < sp.num_tets(); ++t)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        trip.emplace_back(sp.mesh->tets[t][i], sp.mesh->tets[t][j],
                          sp.volume[t] * sp.grad_lambda[t].col(i).dot(sp.grad_lambda[t].col(j)));
  SpMat K(sp.num_vertices(), sp.num_vertices());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

SpMat assemble_weighted_stiffness(const FemSpaces& sp, const std::vector<Mat3>& quad_weight) {
  if (static_cast<int>(quad_weight.size()) != sp.num_quad())
    throw DimensionError("weighted_stiffness: need one 3x3 weight per quadrature point");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(16 * sp.num_tets());
  for (int t = 0; t < sp.num_tets(); ++t) {
    Mat3 K = Mat3::Zero();
    for (int p = 0; p < 4; ++p) K += sp.quad_w(4 * t + p) * quad_weight[4 * t + p];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        trip.emplace_back(sp.mesh->tets[t][i], sp.mesh->tets[t][j],
                          sp.grad_lambda[t].col(i).dot(K * sp.grad_lambda[t].col(j)));
  }
  SpMat A(sp.num_vertices(), sp.num_vertices());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

SpMat assemble_mass_vector(const FemSpaces& sp, const Eigen::VectorXd* quad_coeff) {
  if (quad_coeff && quad_coeff->size() != sp.num_quad())
    throw DimensionError("mass_vector: coefficient field size mismatch");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(36 * sp.num_tets());
  for (int t = 0; t < sp.num_tets(); ++t) {
    double loc[6][6] = {};
    for (int p = 0; p < 4; ++p) {
      double w = sp.quad_w(4 * t + p) * (quad_coeff ? (*quad_coeff)(4 * t + p) : 1.0);
      for (int a = 0; a < 6; ++a)
        for (int b = a; b < 6; ++b)
          loc[a][b] += w * sp.edge_basis[t][p][a].dot(sp.edge_basis[t][p][b]);
    }
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b)
        trip.emplace_back(sp.tet_edges[t][a], sp.tet_edges[t][b], b >= a ? loc[a][b] : loc[b][a]);
  }
  SpMat M(sp.num_edges(), sp.num_edges());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

SpMat assemble_curlcurl(const FemSpaces& sp, const std::vector<Mat3>* cell_weight) {
  if (cell_weight && static_cast<int>(cell_weight->size()) != sp.num_tets())
    throw DimensionError("curlcurl: need one aggregated 3x3 weight per tet");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(36 * sp.num_tets());
  for (int t = 0; t < sp.num_tets(); ++t) {
    for (int a = 0; a < 6; ++a) {
      Vec3 wa = cell_weight ? Vec3((*cell_weight)[t] * sp.edge_curl[t][a])
                            : Vec3(sp.volume[t] * sp.edge_curl[t][a]);
      for (int b = 0; b < 6; ++b)
        trip.emplace_back(sp.tet_edges[t][a], sp.tet_edges[t][b], wa.dot(sp.edge_curl[t][b]));
    }
  }
  SpMat A(sp.num_edges(), sp.num_edges());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

SpMat assemble_grad_coupling(const FemSpaces& sp) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(24 * sp.num_tets());
  for (int t = 0; t < sp.num_tets(); ++t) {
    for (int k = 0; k < 6; ++k) {
      Vec3 acc = Vec3::Zero();
      for (int p = 0; p < 4; ++p) acc += sp.quad_w(4 * t + p) * sp.edge_basis[t][p][k];
      for (int i = 0; i < 4; ++i)
        trip.emplace_back(sp.tet_edges[t][k], sp.mesh->tets[t][i],
                          acc.dot(sp.grad_lambda[t].col(i)));
    }
  }
  SpMat B(sp.num_edges(), sp.num_vertices());
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

SparseOperator assemble(FormKind kind, const FemSpaces& sp, const Eigen::VectorXd* quad_coeff) {
  SparseOperator op;
  switch (kind) {
    case FormKind::MassScalar: op.mat = assemble_mass_scalar(sp); op.symmetric = true; break;
    case FormKind::Stiffness: op.mat = assemble_stiffness(sp); op.symmetric = true; break;
    case FormKind::MassVector: op.mat = assemble_mass_vector(sp); op.symmetric = true; break;
    case FormKind::CurlCurl: op.mat = assemble_curlcurl(sp); op.symmetric = true; break;
    case FormKind::GradCoupling: op.mat = assemble_grad_coupling(sp); op.symmetric = false; break;
    case FormKind::WeightedMass:
      if (!quad_coeff) throw DimensionError("weighted_mass needs a coefficient field");
      op.mat = assemble_mass_vector(sp, quad_coeff);
      op.symmetric = true;
      break;
    default: throw DimensionError("unknown form tag");
  }
  return op;
}

namespace {
Vec3 tangential(const Vec3& v, const Vec3& n) { return v - v.dot(n) * n; }
}  // namespace

double boundary_cross_pair(const FemSpaces& sp, const Eigen::VectorXd& A,
                           const Eigen::VectorXd& B) {
  double s = 0;
  for (const auto& f : sp.bfaces)
    for (int m = 0; m < 3; ++m) {
      Vec3 a = tangential(eval_edge_at(sp, A, f.tet, f.mid[m]), f.normal);
      Vec3 b = tangential(eval_edge_at(sp, B, f.tet, f.mid[m]), f.normal);
      s += (f.area / 3.0) * f.normal.cross(a).dot(b);
    }
  return s;
}

Eigen::VectorXd boundary_cross_functional(const FemSpaces& sp, const Eigen::VectorXd& A) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(sp.num_edges());
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(sp.num_edges());
  for (const auto& f : sp.bfaces)
    for (int m = 0; m < 3; ++m) {
      Vec3 a = tangential(eval_edge_at(sp, A, f.tet, f.mid[m]), f.normal);
      Vec3 na = f.normal.cross(a);
      for (int k = 0; k < 3; ++k) {
        unit(f.edge[k]) = 1.0;
        Vec3 w = tangential(eval_edge_at(sp, unit, f.tet, f.mid[m]), f.normal);
        unit(f.edge[k]) = 0.0;
        r(f.edge[k]) += (f.area / 3.0) * na.dot(w);
      }
    }
  return r;
}

Eigen::VectorXd boundary_cross_functional(const FemSpaces& sp,
                                          const std::function<Vec3(const Vec3&)>& A) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(sp.num_edges());
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(sp.num_edges());
  for (const auto& f : sp.bfaces)
    for (int m = 0; m < 3; ++m) {
      Vec3 na = f.normal.cross(A(f.mid[m]));
      for (int k = 0; k < 3; ++k) {
        unit(f.edge[k]) = 1.0;
        Vec3 w = tangential(eval_edge_at(sp, unit, f.tet, f.mid[m]), f.normal);
        unit(f.edge[k]) = 0.0;
        r(f.edge[k]) += (f.area / 3.0) * na.dot(w);
      }
    }
  return r;
}

Eigen::VectorXd boundary_scalar_functional(const FemSpaces& sp,
                                           const Eigen::VectorXd& face_totals) {
  if (face_totals.size() != static_cast<int>(sp.bfaces.size()))
    throw DimensionError("boundary_scalar_functional: one total per boundary face");
  Eigen::VectorXd r = Eigen::VectorXd::Zero(sp.num_vertices());
  for (size_t f = 0; f < sp.bfaces.size(); ++f)
    for (int k = 0; k < 3; ++k) r(sp.bfaces[f].v[k]) += face_totals(f) / 3.0;
  return r;
}

Eigen::VectorXd boundary_scalar_functional(const FemSpaces& sp,
                                           const std::function<double(const Vec3&)>& g) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(sp.num_vertices());
  for (const auto& f : sp.bfaces)
    for (int m = 0; m < 3; ++m) {
      double val = (f.area / 3.0) * g(f.mid[m]);
      // hat functions at the midpoint of edge m: corners m and m+1 have 1/2
      r(f.v[m]) += 0.5 * val;
      r(f.v[(m + 1) % 3]) += 0.5 * val;
    }
  return r;
}

Eigen::VectorXd face_circulations(const FemSpaces& sp, const Eigen::VectorXd& edge) {
  Eigen::VectorXd c(sp.bfaces.size());
  for (size_t f = 0; f < sp.bfaces.size(); ++f) {
    double s = 0;
    for (int k = 0; k < 3; ++k) s += sp.bfaces[f].edge_sign[k] * edge(sp.bfaces[f].edge[k]);
    c(f) = s;
  }
  return c;
}

Eigen::VectorXd boundary_edge_circulations(const FemSpaces& sp,
                                           const std::function<Vec3(const Vec3&)>& A) {
  Eigen::VectorXd c(sp.boundary_edges.size());
  for (size_t i = 0; i < sp.boundary_edges.size(); ++i) {
    const auto& e = sp.edges[sp.boundary_edges[i]];
    Vec3 a = sp.mesh->vertices[e[0]], b = sp.mesh->vertices[e[1]];
    Vec3 d = b - a;
    double s = 0;
    for (int g = 0; g < 5; ++g) s += kG5w[g] * A(a + kG5x[g] * d).dot(d);
    c(i) = s;
  }
  return c;
}

Eigen::VectorXd interpolate_edge(const FemSpaces& sp, const std::function<Vec3(const Vec3&)>& A) {
  Eigen::VectorXd c(sp.num_edges());
  for (int e = 0; e < sp.num_edges(); ++e) {
    Vec3 a = sp.mesh->vertices[sp.edges[e][0]], b = sp.mesh->vertices[sp.edges[e][1]];
    Vec3 d = b - a;
    double s = 0;
    for (int g = 0; g < 5; ++g) s += kG5w[g] * A(a + kG5x[g] * d).dot(d);
    c(e) = s;
  }
  return c;
}

Eigen::VectorXd interpolate_nodal(const FemSpaces& sp,
                                  const std::function<double(const Vec3&)>& g) {
  Eigen::VectorXd c(sp.num_vertices());
  for (int v = 0; v < sp.num_vertices(); ++v) c(v) = g(sp.mesh->vertices[v]);
  return c;
}

Eigen::VectorXd component_fluxes(const FemSpaces& sp, const CellMat& c) {
  Eigen::VectorXd flux = Eigen::VectorXd::Zero(sp.num_labels);
  for (const auto& f : sp.bfaces)
    flux(f.label - 1) += f.area * f.normal.dot(Vec3(c.row(f.tet)));
  return flux;
}

CgResult solve_spd(const SpMat& A, const Eigen::VectorXd& b, const CgOptions& opt) {
  const int n = static_cast<int>(A.rows());
  auto masked = [&](Eigen::VectorXd& v) {
    if (opt.free_mask)
      for (int i = 0; i < n; ++i)
        if (!(*opt.free_mask)[i]) v(i) = 0;
  };
  auto deflate = [&](Eigen::VectorXd& v) {
    if (opt.nullspace_constants) v.array() -= v.mean();
  };
  Eigen::VectorXd diag(n);
  for (int i = 0; i < n; ++i) {
    double d = A.coeff(i, i);
    diag(i) = d > 0 ? d : 1.0;
  }
  Eigen::VectorXd r = b;
  masked(r);
  deflate(r);
  double bnorm = r.norm();
  CgResult res;
  res.x = Eigen::VectorXd::Zero(n);
  if (bnorm == 0) {
    res.converged = true;
    return res;
  }
  Eigen::VectorXd z = r.cwiseQuotient(diag);
  masked(z);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (int it = 0; it < opt.max_iterations; ++it) {
    Eigen::VectorXd Ap = A * p;
    masked(Ap);
    deflate(Ap);
    double pAp = p.dot(Ap);
    if (pAp <= 0) break;
    double alpha = rz / pAp;
    res.x += alpha * p;
    r -= alpha * Ap;
    res.iterations = it + 1;
    res.rel_residual = r.norm() / bnorm;
    if (res.rel_residual < opt.tol) {
      res.converged = true;
      break;
    }
    z = r.cwiseQuotient(diag);
    masked(z);
    double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  if (opt.nullspace_constants) res.x.array() -= res.x.mean();
  return res;
}

FieldVector solve_spd(const SparseOperator& A, const FieldVector& b, double tol) {
  CgOptions opt;
  opt.tol = tol;
  CgResult r = solve_spd(A.mat, b.data, opt);
  if (!r.converged)
    throw SolverError("solve_spd: no convergence, relative residual " +
                      std::to_string(r.rel_residual));
  return FieldVector{b.tag, r.x};
}

SaddleResult solve_saddle(const SpMat& A, const SpMat& C, const Eigen::VectorXd& f,
                          const Eigen::VectorXd& g) {
  const int n = static_cast<int>(A.rows());
  const int k = static_cast<int>(C.rows());
  double scale = 0;
  for (int i = 0; i < n; ++i) scale += std::abs(A.coeff(i, i));
  scale = scale > 0 ? scale / n : 1.0;
  const double shift = 1e-10 * scale;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(A.nonZeros() + 2 * C.nonZeros() + n + k);
  for (int j = 0; j < A.outerSize(); ++j)
    for (SpMat::InnerIterator it(A, j); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  for (int j = 0; j < C.outerSize(); ++j)
    for (SpMat::InnerIterator it(C, j); it; ++it) {
      trip.emplace_back(n + it.row(), it.col(), it.value());
      trip.emplace_back(it.col(), n + it.row(), it.value());
    }
  SpMat K(n + k, n + k);
  K.setFromTriplets(trip.begin(), trip.end());

  SpMat Kshift = K;
  for (int i = 0; i < n; ++i) Kshift.coeffRef(i, i) += shift;
  for (int i = 0; i < k; ++i) Kshift.coeffRef(n + i, n + i) -= shift;

  Eigen::VectorXd rhs(n + k);
  rhs.head(n) = f;
  rhs.tail(k) = g;

  Eigen::SimplicialLDLT<SpMat> ldlt;
  ldlt.compute(Kshift);
  Eigen::VectorXd x;
  bool ok = ldlt.info() == Eigen::Success;
  if (ok) {
    x = ldlt.solve(rhs);
    // refine against the unshifted system
    double rhs_norm = std::max(rhs.norm(), 1e-300);
    for (int it = 0; it < 30; ++it) {
      Eigen::VectorXd r = rhs - K * x;
      if (r.norm() / rhs_norm < 1e-13) break;
      x += ldlt.solve(r);
    }
    ok = ((rhs - K * x).norm() / rhs_norm) < 1e-8;
  }
  if (!ok) {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success) throw SolverError("saddle solve: factorization failed");
    x = lu.solve(rhs);
  }
  SaddleResult res;
  res.x = x.head(n);
  res.multipliers = x.tail(k);
  res.rel_residual = (rhs - K * x).norm() / std::max(rhs.norm(), 1e-300);
  return res;
}

ConstrainedSolveResult solve_constrained_edge(const FemSpaces& sp, const SpMat& A,
                                              const Eigen::VectorXd& rhs,
                                              const std::vector<char>& edge_fixed,
                                              const Eigen::VectorXd& fixed_values,
                                              const EdgeConstraintSet& constraints,
                                              const SpMat& grad_coupling) {
  const int E = sp.num_edges();
  std::vector<int> free_of(E, -1);
  std::vector<int> free_list;
  for (int e = 0; e < E; ++e)
    if (!edge_fixed[e]) {
      free_of[e] = static_cast<int>(free_list.size());
      free_list.push_back(e);
    }
  const int nf = static_cast<int>(free_list.size());

  Eigen::VectorXd lift = Eigen::VectorXd::Zero(E);
  for (int e = 0; e < E; ++e)
    if (edge_fixed[e]) lift(e) = fixed_values(e);

  Eigen::VectorXd rhs_adj = rhs - A * lift;
  Eigen::VectorXd f(nf);
  for (int i = 0; i < nf; ++i) f(i) = rhs_adj(free_list[i]);

  std::vector<Eigen::Triplet<double>> atrip;
  for (int j = 0; j < A.outerSize(); ++j)
    for (SpMat::InnerIterator it(A, j); it; ++it)
      if (free_of[it.row()] >= 0 && free_of[it.col()] >= 0)
        atrip.emplace_back(free_of[it.row()], free_of[it.col()], it.value());
  SpMat Aff(nf, nf);
  Aff.setFromTriplets(atrip.begin(), atrip.end());

  // constraint rows
  std::vector<Eigen::Triplet<double>> ctrip;
  std::vector<double> grhs;
  std::vector<int> div_test_of;  // nodal index per div row
  const int V = sp.num_vertices();
  if (constraints.div != EdgeConstraintSet::DivTests::None) {
    for (int v = 0; v < V; ++v) {
      bool use = constraints.div == EdgeConstraintSet::DivTests::Interior
                     ? !sp.vertex_on_boundary[v]
                     : v != V - 1;
      if (!use) continue;
      int row = static_cast<int>(grhs.size());
      double fixed_part = 0;
      for (SpMat::InnerIterator it(grad_coupling, v); it; ++it) {
        int e = static_cast<int>(it.row());
        if (free_of[e] >= 0)
          ctrip.emplace_back(row, free_of[e], it.value());
        else
          fixed_part += it.value() * lift(e);
      }
      grhs.push_back(-fixed_part);
      div_test_of.push_back(v);
    }
  }
  const int ndiv = static_cast<int>(grhs.size());

  SpMat Me;
  if (!constraints.deflate.empty()) Me = assemble_mass_vector(sp);
  for (size_t d = 0; d < constraints.deflate.size(); ++d) {
    Eigen::VectorXd m = Me * (*constraints.deflate[d]);
    int row = static_cast<int>(grhs.size());
    double fixed_part = 0;
    for (int e = 0; e < E; ++e) {
      if (m(e) == 0) continue;
      if (free_of[e] >= 0)
        ctrip.emplace_back(row, free_of[e], m(e));
      else
        fixed_part += m(e) * lift(e);
    }
    double target = constraints.deflate_rhs.size() > static_cast<long>(d)
                        ? constraints.deflate_rhs(d)
                        : 0.0;
    grhs.push_back(target - fixed_part);
  }
  const int k = static_cast<int>(grhs.size());
  SpMat C(k, nf);
  C.setFromTriplets(ctrip.begin(), ctrip.end());
  Eigen::VectorXd g = Eigen::Map<Eigen::VectorXd>(grhs.data(), k);

  SaddleResult sres = solve_saddle(Aff, C, f, g);

  ConstrainedSolveResult out;
  out.u = lift;
  for (int i = 0; i < nf; ++i) out.u(free_list[i]) = sres.x(i);
  out.rel_residual = sres.rel_residual;
  out.div_multiplier = Eigen::VectorXd::Zero(V);
  for (int i = 0; i < ndiv; ++i) out.div_multiplier(div_test_of[i]) = sres.multipliers(i);
  if (ndiv > 0) out.pressure_norm = l2_norm_nodal(sp, out.div_multiplier);
  out.deflate_multiplier = sres.multipliers.tail(k - ndiv);
  return out;
}

}  // namespace curlforge
