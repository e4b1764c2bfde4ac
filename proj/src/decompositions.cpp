// SPDX-License-Identifier: Apache-2.0

#include "curlforge/decompositions.hpp"

#include <cmath>
#include <map>

namespace curlforge {

DecompositionContext make_context(const FemSpaces& sp, const HarmonicBasis& hb) {
  DecompositionContext cx;
  cx.sp = &sp;
  cx.hb = &hb;
  cx.stiffness = assemble_stiffness(sp);
  cx.grad_coupling = assemble_grad_coupling(sp);
  cx.curlcurl = assemble_curlcurl(sp);
  return cx;
}

Eigen::VectorXd neumann_potential(const DecompositionContext& cx, const QuadMat& w,
                                  const Eigen::VectorXd* boundary_functional) {
  const FemSpaces& sp = *cx.sp;
  Eigen::VectorXd rhs = -grad_test_functional(sp, w);
  if (boundary_functional) rhs += *boundary_functional;
  CgOptions opt;
  opt.tol = cx.cg_tol;
  opt.nullspace_constants = true;
  CgResult r = solve_spd(cx.stiffness, rhs, opt);
  if (!r.converged) throw SolverError("Neumann projection solve did not converge");
  return r.x;
}

Eigen::VectorXd project_Pnu(const DecompositionContext& cx, const Eigen::VectorXd& edge_field) {
  QuadMat q = eval_edge(*cx.sp, edge_field);
  Eigen::VectorXd phi = neumann_potential(cx, q);
  return edge_field + grad_of(*cx.sp, phi);
}

QuadMat project_Pnu(const DecompositionContext& cx, const QuadMat& w,
                    Eigen::VectorXd* potential_out) {
  Eigen::VectorXd phi = neumann_potential(cx, w);
  if (potential_out) *potential_out = phi;
  return w + eval_nodal_grad(*cx.sp, phi);
}

CurlTraceData curl_trace_from_field(const FemSpaces& sp,
                                    const std::function<Vec3(const Vec3&)>& H0) {
  // per boundary face: circulation of H0 around the face loop, computed once
  // per boundary edge so closed-component sums cancel exactly
  Eigen::VectorXd circ = boundary_edge_circulations(sp, H0);
  CurlTraceData data;
  data.face_totals = Eigen::VectorXd::Zero(sp.bfaces.size());
  for (size_t f = 0; f < sp.bfaces.size(); ++f) {
    double s = 0;
    for (int k = 0; k < 3; ++k)
      s += sp.bfaces[f].edge_sign[k] * circ(sp.edge_boundary_index[sp.bfaces[f].edge[k]]);
    data.face_totals(f) = s;
  }
  return data;
}

CurlTraceData curl_trace_from_edge_field(const FemSpaces& sp, const Eigen::VectorXd& H0) {
  CurlTraceData data;
  data.face_totals = face_circulations(sp, H0);
  return data;
}

void check_curl_trace_compatibility(const DecompositionContext& cx, const CurlTraceData& data,
                                    double tol) {
  const FemSpaces& sp = *cx.sp;
  double scale = data.face_totals.cwiseAbs().sum() + 1e-300;
  double total = data.face_totals.sum();
  if (std::abs(total) > tol * scale)
    throw CompatibilityError("curl trace data does not integrate to zero over the boundary");
  // pairing with the harmonic indicators, exact zero for closed components
  Eigen::VectorXd g = boundary_scalar_functional(sp, data.face_totals);
  for (size_t j = 0; j < cx.hb->eta.size(); ++j) {
    double v = g.dot(cx.hb->eta[j]);
    if (std::abs(v) > tol * scale)
      throw CompatibilityError("curl trace data incompatible with a boundary component");
  }
}

QuadMat project_Pn(const DecompositionContext& cx, const QuadMat& w, const CurlTraceData& data,
                   Eigen::VectorXd* potential_out) {
  Eigen::VectorXd g = boundary_scalar_functional(*cx.sp, data.face_totals);
  Eigen::VectorXd psi = neumann_potential(cx, w, &g);
  if (potential_out) *potential_out = psi;
  return w + eval_nodal_grad(*cx.sp, psi);
}

Eigen::VectorXd project_Pn(const DecompositionContext& cx, const Eigen::VectorXd& edge_field,
                           const CurlTraceData& data, Eigen::VectorXd* potential_out) {
  QuadMat q = eval_edge(*cx.sp, edge_field);
  Eigen::VectorXd g = boundary_scalar_functional(*cx.sp, data.face_totals);
  Eigen::VectorXd psi = neumann_potential(cx, q, &g);
  if (potential_out) *potential_out = psi;
  return edge_field + grad_of(*cx.sp, psi);
}

namespace {

HelmholtzParts helmholtz_impl(const DecompositionContext& cx, const Eigen::VectorXd& w,
                              bool type1) {
  const FemSpaces& sp = *cx.sp;
  HelmholtzParts parts;
  QuadMat q = eval_edge(sp, w);
  if (type1) {
    parts.gradient = neumann_potential(cx, q);
  } else {
    // zero-trace potential
    Eigen::VectorXd rhs = -grad_test_functional(sp, q);
    std::vector<char> interior(sp.num_vertices());
    for (int v = 0; v < sp.num_vertices(); ++v) interior[v] = !sp.vertex_on_boundary[v];
    CgOptions opt;
    opt.tol = cx.cg_tol;
    opt.free_mask = &interior;
    CgResult r = solve_spd(cx.stiffness, rhs, opt);
    if (!r.converged) throw SolverError("Dirichlet potential solve did not converge");
    parts.gradient = r.x;
  }
  Eigen::VectorXd grad_part = grad_of(sp, parts.gradient);
  Eigen::VectorXd rem = w + grad_part;  // potential solves give w + grad(phi)

  const auto& basis = type1 ? cx.hb->H1 : cx.hb->H2;
  parts.harmonic = Eigen::VectorXd::Zero(basis.size());
  for (size_t i = 0; i < basis.size(); ++i) {
    parts.harmonic(i) = l2_inner_edge(sp, rem, basis[i]);
    rem -= parts.harmonic(i) * basis[i];
  }
  parts.main = rem;

  // self-consistency
  Eigen::VectorXd recombined = parts.main - grad_part;
  for (size_t i = 0; i < basis.size(); ++i) recombined += parts.harmonic(i) * basis[i];
  double wn = std::max(l2_norm_edge(sp, w), 1e-300);
  parts.recombination_residual = l2_norm_edge(sp, Eigen::VectorXd(recombined - w)) / wn;

  double cross = 0;
  Eigen::VectorXd hpart = Eigen::VectorXd::Zero(sp.num_edges());
  for (size_t i = 0; i < basis.size(); ++i) hpart += parts.harmonic(i) * basis[i];
  cross = std::max(cross, std::abs(l2_inner_edge(sp, parts.main, hpart)));
  cross = std::max(cross, std::abs(l2_inner_edge(sp, parts.main, grad_part)));
  cross = std::max(cross, std::abs(l2_inner_edge(sp, hpart, grad_part)));
  parts.max_cross_inner = cross / std::max(wn * wn, 1e-300);
  return parts;
}

}  // namespace

HelmholtzParts helmholtz_type1(const DecompositionContext& cx, const Eigen::VectorXd& w) {
  HelmholtzParts p = helmholtz_impl(cx, w, true);
  // report the gradient part with the sign of the decomposition w = main + h - grad(phi)
  p.gradient = -p.gradient;
  return p;
}

HelmholtzParts helmholtz_type2(const DecompositionContext& cx, const Eigen::VectorXd& w) {
  HelmholtzParts p = helmholtz_impl(cx, w, false);
  p.gradient = -p.gradient;
  return p;
}

double cut_flux(const FemSpaces& sp, const CellMat& c, int cut_index) {
  const Mesh& mesh = *sp.mesh;
  const CutSurface& cut = mesh.cuts.at(cut_index);
  // face -> adjacent tets
  std::map<std::array<int, 3>, std::vector<int>> adj;
  static constexpr int kTetFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
  for (int t = 0; t < mesh.num_tets(); ++t)
    for (int f = 0; f < 4; ++f) {
      std::array<int, 3> key{mesh.tets[t][kTetFace[f][0]], mesh.tets[t][kTetFace[f][1]],
                             mesh.tets[t][kTetFace[f][2]]};
      std::sort(key.begin(), key.end());
      adj[key].push_back(t);
    }
  double flux = 0;
  for (const auto& F : cut.facets) {
    std::array<int, 3> key{F[0], F[1], F[2]};
    std::sort(key.begin(), key.end());
    const auto& ts = adj.at(key);
    Vec3 a = mesh.vertices[F[0]];
    Vec3 n = 0.5 * (mesh.vertices[F[1]] - a).cross(mesh.vertices[F[2]] - a);  // area-weighted
    Vec3 avg = Vec3::Zero();
    for (int t : ts) avg += Vec3(c.row(t));
    avg /= ts.size();
    flux += n.dot(avg);
  }
  return flux;
}

namespace {

VectorPotentialResult vector_potential_cell(const DecompositionContext& cx, const CellMat& Zc,
                                            const QuadMat* Zq, PotentialGauge gauge,
                                            bool check_membership, double membership_tol) {
  const FemSpaces& sp = *cx.sp;
  VectorPotentialResult out;
  double zn = Zq ? l2_norm(sp, *Zq) : l2_norm_cell(sp, Zc);

  if (check_membership) {
    if (gauge == PotentialGauge::NormalZero) {
      out.flux_defect = component_fluxes(sp, Zc);
    } else {
      out.flux_defect = Eigen::VectorXd(sp.mesh->cuts.size());
      for (size_t i = 0; i < sp.mesh->cuts.size(); ++i)
        out.flux_defect(i) = cut_flux(sp, Zc, static_cast<int>(i));
    }
    double area_scale = std::sqrt(sp.domain_volume);
    for (int i = 0; i < out.flux_defect.size(); ++i)
      if (std::abs(out.flux_defect(i)) > membership_tol * std::max(zn * area_scale, 1e-300))
        throw ImageSpaceError("target field is not in the image of curl for this gauge");
  }

  Eigen::VectorXd rhs = Zq ? [&] {
    CellMat cm = quad_to_cell(sp, *Zq);
    return curl_test_functional(sp, cm);
  }()
                           : curl_test_functional(sp, Zc);

  EdgeConstraintSet cons;
  std::vector<char> fixed(sp.num_edges(), 0);
  Eigen::VectorXd fixed_vals = Eigen::VectorXd::Zero(sp.num_edges());
  if (gauge == PotentialGauge::NormalZero) {
    cons.div = EdgeConstraintSet::DivTests::AllButOne;
    for (const auto& h : cx.hb->H1) cons.deflate.push_back(&h);
  } else {
    cons.div = EdgeConstraintSet::DivTests::Interior;
    for (int e = 0; e < sp.num_edges(); ++e) fixed[e] = sp.edge_on_boundary[e];
    for (const auto& h : cx.hb->H2) cons.deflate.push_back(&h);
  }
  ConstrainedSolveResult r =
      solve_constrained_edge(sp, cx.curlcurl, rhs, fixed, fixed_vals, cons, cx.grad_coupling);
  out.u = r.u;
  out.pressure_norm = r.pressure_norm;
  CellMat cu = curl_of(sp, out.u);
  double resid;
  if (Zq) {
    QuadMat diff = cell_to_quad(sp, cu) - *Zq;
    resid = l2_norm(sp, diff);
  } else {
    resid = l2_norm_cell(sp, CellMat(cu - Zc));
  }
  out.curl_residual = resid / std::max(zn, 1e-300);
  return out;
}

}  // namespace

VectorPotentialResult vector_potential(const DecompositionContext& cx, const CellMat& Z,
                                       PotentialGauge gauge, bool check_membership,
                                       double membership_tol) {
  return vector_potential_cell(cx, Z, nullptr, gauge, check_membership, membership_tol);
}

VectorPotentialResult vector_potential(const DecompositionContext& cx, const QuadMat& Z,
                                       PotentialGauge gauge, bool check_membership,
                                       double membership_tol) {
  CellMat cm = quad_to_cell(*cx.sp, Z);
  return vector_potential_cell(cx, cm, &Z, gauge, check_membership, membership_tol);
}

ExtensionResult divfree_extension(const DecompositionContext& cx,
                                  const Eigen::VectorXd& boundary_circulations) {
  const FemSpaces& sp = *cx.sp;
  if (boundary_circulations.size() != static_cast<long>(sp.boundary_edges.size()))
    throw TraceError("trace data must give one circulation per boundary edge");
  if (!boundary_circulations.allFinite()) throw TraceError("trace data contains non-finite values");

  std::vector<char> fixed(sp.num_edges(), 0);
  Eigen::VectorXd fixed_vals = Eigen::VectorXd::Zero(sp.num_edges());
  for (size_t i = 0; i < sp.boundary_edges.size(); ++i) {
    fixed[sp.boundary_edges[i]] = 1;
    fixed_vals(sp.boundary_edges[i]) = boundary_circulations(i);
  }
  EdgeConstraintSet cons;
  cons.div = EdgeConstraintSet::DivTests::Interior;
  for (const auto& h : cx.hb->H2) cons.deflate.push_back(&h);

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(sp.num_edges());
  ConstrainedSolveResult r =
      solve_constrained_edge(sp, cx.curlcurl, rhs, fixed, fixed_vals, cons, cx.grad_coupling);
  ExtensionResult out;
  out.u = r.u;
  out.b = curl_of(sp, out.u);
  out.curl_energy = l2_norm_cell(sp, out.b);
  out.pressure_norm = r.pressure_norm;
  return out;
}

}  // namespace curlforge
