// SPDX-License-Identifier: Apache-2.0

#ifndef CURLFORGE_DECOMPOSITIONS_HPP
#define CURLFORGE_DECOMPOSITIONS_HPP

#include <optional>

#include "curlforge/fem.hpp"
#include "curlforge/harmonic.hpp"

namespace curlforge {

struct CompatibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ImageSpaceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shared assembled operators for the decomposition machinery.
struct DecompositionContext {
  const FemSpaces* sp = nullptr;
  const HarmonicBasis* hb = nullptr;
  SpMat stiffness;       // nodal
  SpMat grad_coupling;   // (E x V)
  SpMat curlcurl;        // edge
  double cg_tol = 1e-12;
};
DecompositionContext make_context(const FemSpaces& sp, const HarmonicBasis& hb);

// Neumann potential of w: phi with (grad phi + w, grad eta) = extra(eta) for all eta
Eigen::VectorXd neumann_potential(const DecompositionContext& cx, const QuadMat& w,
                                  const Eigen::VectorXd* boundary_functional = nullptr);

// P_nu[w] = w + grad(phi_w); edge-space overload keeps the result in the edge space
Eigen::VectorXd project_Pnu(const DecompositionContext& cx, const Eigen::VectorXd& edge_field);
QuadMat project_Pnu(const DecompositionContext& cx, const QuadMat& w,
                    Eigen::VectorXd* potential_out = nullptr);

// P_n with a prescribed boundary curl-trace source, given per boundary face as
// total integrals of nu . curl H0_T (they sum to zero on each closed component).
struct CurlTraceData {
  Eigen::VectorXd face_totals;  // one per boundary face
};
CurlTraceData curl_trace_from_field(const FemSpaces& sp,
                                    const std::function<Vec3(const Vec3&)>& H0);
CurlTraceData curl_trace_from_edge_field(const FemSpaces& sp, const Eigen::VectorXd& H0);
void check_curl_trace_compatibility(const DecompositionContext& cx, const CurlTraceData& data,
                                    double tol);
QuadMat project_Pn(const DecompositionContext& cx, const QuadMat& w, const CurlTraceData& data,
                   Eigen::VectorXd* potential_out = nullptr);
Eigen::VectorXd project_Pn(const DecompositionContext& cx, const Eigen::VectorXd& edge_field,
                           const CurlTraceData& data, Eigen::VectorXd* potential_out = nullptr);

// L2 = H^Sigma_0 + H1 + grad H^1   (type 1)
// L2 = H^Gamma   + H2 + grad H^1_0 (type 2)
struct HelmholtzParts {
  Eigen::VectorXd main;        // edge field: Sigma-part (type 1) or Gamma-part (type 2)
  Eigen::VectorXd harmonic;    // coefficients in the orthonormal basis
  Eigen::VectorXd gradient;    // nodal potential of the gradient part
  double recombination_residual = 0;
  double max_cross_inner = 0;
};
HelmholtzParts helmholtz_type1(const DecompositionContext& cx, const Eigen::VectorXd& edge_field);
HelmholtzParts helmholtz_type2(const DecompositionContext& cx, const Eigen::VectorXd& edge_field);

enum class PotentialGauge { NormalZero, TangentialZero };

struct VectorPotentialResult {
  Eigen::VectorXd u;            // edge field
  double curl_residual = 0;     // ||curl u - Z|| / ||Z||
  double pressure_norm = 0;     // divergence multiplier norm
  Eigen::VectorXd flux_defect;  // membership fluxes that were checked
};
VectorPotentialResult vector_potential(const DecompositionContext& cx, const CellMat& Z,
                                       PotentialGauge gauge, bool check_membership = true,
                                       double membership_tol = 1e-8);
VectorPotentialResult vector_potential(const DecompositionContext& cx, const QuadMat& Z,
                                       PotentialGauge gauge, bool check_membership = true,
                                       double membership_tol = 1e-8);

// curl-minimizing weak-divergence-free extension of tangential boundary data,
// given as circulations per boundary edge (indexed like sp.boundary_edges)
struct ExtensionResult {
  Eigen::VectorXd u;   // edge field with the prescribed boundary coefficients
  CellMat b;           // curl of it
  double curl_energy = 0;
  double pressure_norm = 0;
};
ExtensionResult divfree_extension(const DecompositionContext& cx,
                                  const Eigen::VectorXd& boundary_circulations);

// flux of a cell field through cut surface i (average of the two sides)
double cut_flux(const FemSpaces& sp, const CellMat& c, int cut_index);

}  // namespace curlforge

#endif
