// SPDX-License-Identifier: Apache-2.0

#include "curlforge/harmonic.hpp"

#include <cmath>

namespace curlforge {

namespace {

// Gram-Schmidt in the L2 inner product of the edge space.
void orthonormalize(const FemSpaces& sp, std::vector<Eigen::VectorXd>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    for (size_t j = 0; j < i; ++j)
      fields[i] -= l2_inner_edge(sp, fields[i], fields[j]) * fields[j];
    double n = l2_norm_edge(sp, fields[i]);
    if (n <= 0) throw SolverError("harmonic basis field degenerated to zero");
    fields[i] /= n;
  }
}

}  // namespace

std::vector<Eigen::VectorXd> compute_dirichlet_fields(const FemSpaces& sp,
                                                      std::vector<Eigen::VectorXd>* eta_out) {
  const int V = sp.num_vertices();
  const int labels = sp.num_labels;
  std::vector<Eigen::VectorXd> fields;
  if (eta_out) eta_out->clear();
  if (labels <= 1) return fields;

  SpMat K = assemble_stiffness(sp);
  std::vector<char> interior(V, 0);
  for (int v = 0; v < V; ++v) interior[v] = !sp.vertex_on_boundary[v];

  // which boundary component each boundary vertex belongs to
  std::vector<int> vlabel(V, 0);
  for (const auto& f : sp.bfaces)
    for (int k = 0; k < 3; ++k) vlabel[f.v[k]] = f.label;

  for (int j = 1; j < labels; ++j) {  // inner components only
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(V);
    for (int v = 0; v < V; ++v)
      if (sp.vertex_on_boundary[v] && vlabel[v] == j) eta(v) = 1.0;
    Eigen::VectorXd rhs = -(K * eta);
    CgOptions opt;
    opt.tol = 1e-13;
    opt.free_mask = &interior;
    CgResult r = solve_spd(K, rhs, opt);
    if (!r.converged) throw SolverError("harmonic potential solve did not converge");
    Eigen::VectorXd full = eta + r.x;
    if (eta_out) eta_out->push_back(full);
    fields.push_back(grad_of(sp, full));
  }
  orthonormalize(sp, fields);
  return fields;
}

std::vector<Eigen::VectorXd> compute_neumann_fields(const FemSpaces& sp) {
  std::vector<Eigen::VectorXd> fields;
  const Mesh& mesh = *sp.mesh;
  if (mesh.cuts.empty()) return fields;
  const int V = sp.num_vertices();
  SpMat K = assemble_stiffness(sp);

  for (size_t cut = 0; cut < mesh.cuts.size(); ++cut) {
    CutIncidence inc = classify_cut_sides(mesh, static_cast<int>(cut));
    // offset[t][corner] = 1 where the tet sees the lifted branch psi + 1
    std::vector<std::array<char, 4>> offset(mesh.num_tets(), {0, 0, 0, 0});
    for (auto [t, c] : inc.plus_corners) offset[t][c] = 1;

    // jump enters as an affine shift: rhs -= K_T * offset
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(V);
    for (int t = 0; t < mesh.num_tets(); ++t) {
      const auto& off = offset[t];
      if (!(off[0] | off[1] | off[2] | off[3])) continue;
      const auto& G = sp.grad_lambda[t];
      Vec3 goff = Vec3::Zero();
      for (int i = 0; i < 4; ++i)
        if (off[i]) goff += G.col(i);
      for (int i = 0; i < 4; ++i)
        rhs(mesh.tets[t][i]) -= sp.volume[t] * G.col(i).dot(goff);
    }
    CgOptions opt;
    opt.tol = 1e-13;
    opt.nullspace_constants = true;
    CgResult r = solve_spd(K, rhs, opt);
    if (!r.converged) throw SolverError("cut potential solve did not converge");

    // per-edge gradient of the branch the adjacent tet sees
    Eigen::VectorXd field = Eigen::VectorXd::Zero(sp.num_edges());
    std::vector<char> done(sp.num_edges(), 0);
    for (int t = 0; t < mesh.num_tets(); ++t) {
      for (int k = 0; k < 6; ++k) {
        int e = sp.tet_edges[t][k];
        if (done[e]) continue;
        done[e] = 1;
        // global edge (a,b), find local corners
        int a = sp.edges[e][0], b = sp.edges[e][1];
        double va = 0, vb = 0;
        for (int i = 0; i < 4; ++i) {
          if (mesh.tets[t][i] == a) va = r.x(a) + offset[t][i];
          if (mesh.tets[t][i] == b) vb = r.x(b) + offset[t][i];
        }
        field(e) = vb - va;
      }
    }
    fields.push_back(field);
  }
  orthonormalize(sp, fields);
  return fields;
}

HarmonicBasis compute_harmonic_basis(const FemSpaces& sp) {
  HarmonicBasis hb;
  hb.H2 = compute_dirichlet_fields(sp, &hb.eta);
  hb.H1 = compute_neumann_fields(sp);
  hb.tol_h = 10.0 * sp.mesh->characteristic_size;
  double g = 0;
  auto gram = [&](const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b,
                  bool same) {
    for (size_t i = 0; i < a.size(); ++i)
      for (size_t j = 0; j < b.size(); ++j) {
        double v = l2_inner_edge(sp, a[i], b[j]);
        if (same && i == j) v -= 1.0;
        g = std::max(g, std::abs(v));
      }
  };
  gram(hb.H1, hb.H1, true);
  gram(hb.H2, hb.H2, true);
  gram(hb.H1, hb.H2, false);
  hb.gram_residual = g;
  return hb;
}

HarmonicDiagnostics verify_harmonic(const FemSpaces& sp, const Eigen::VectorXd& field,
                                    HarmonicKind kind, double curl_tol, double tol_h) {
  HarmonicDiagnostics d;
  d.field_norm = l2_norm_edge(sp, field);
  d.curl_residual = l2_norm_cell(sp, curl_of(sp, field));
  QuadMat q = eval_edge(sp, field);
  if (kind == HarmonicKind::H1) {
    // all nodal tests: weak divergence plus weak normal trace together
    d.div_residual = weak_div_residual(sp, q, true);
    double worst = 0;
    for (const auto& f : sp.bfaces) {
      double flux = 0;
      for (int m = 0; m < 3; ++m)
        flux += (f.area / 3.0) * f.normal.dot(eval_edge_at(sp, field, f.tet, f.mid[m]));
      worst = std::max(worst, std::abs(flux) / f.area);
    }
    d.trace_residual = worst;
  } else {
    d.div_residual = weak_div_residual(sp, q, false);
    double s = 0;
    for (int e : sp.boundary_edges) s += field(e) * field(e);
    d.trace_residual = std::sqrt(s);
  }
  double scale = std::max(d.field_norm, 1e-300);
  d.pass = d.curl_residual <= curl_tol * scale && d.div_residual <= tol_h * scale &&
           d.trace_residual <= tol_h * scale;
  return d;
}

double estimate_embedding_constant(const FemSpaces& sp,
                                   const std::vector<Eigen::VectorXd>& basis) {
  if (basis.empty()) throw DimensionError("embedding constant of an empty basis is undefined");
  const Mesh& mesh = *sp.mesh;
  const int V = sp.num_vertices();
  SpMat K = assemble_stiffness(sp);
  double worst = 0;
  for (const auto& field : basis) {
    // recover a P1 vector field by averaging tet values at vertices
    Eigen::MatrixXd nodal = Eigen::MatrixXd::Zero(V, 3);
    Eigen::VectorXd count = Eigen::VectorXd::Zero(V);
    for (int t = 0; t < mesh.num_tets(); ++t) {
      for (int i = 0; i < 4; ++i) {
        int v = mesh.tets[t][i];
        nodal.row(v) += eval_edge_at(sp, field, t, mesh.vertices[v]).transpose();
        count(v) += 1;
      }
    }
    for (int v = 0; v < V; ++v) nodal.row(v) /= count(v);
    double semi2 = 0;
    for (int c = 0; c < 3; ++c) {
      Eigen::VectorXd col = nodal.col(c);
      semi2 += col.dot(K * col);
    }
    double l2 = l2_norm_edge(sp, field);
    worst = std::max(worst, std::sqrt(l2 * l2 + semi2) / std::max(l2, 1e-300));
  }
  return worst;
}

}  // namespace curlforge
