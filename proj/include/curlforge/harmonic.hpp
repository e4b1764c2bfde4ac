// SPDX-License-Identifier: Apache-2.0

#ifndef CURLFORGE_HARMONIC_HPP
#define CURLFORGE_HARMONIC_HPP

#include <vector>

#include "curlforge/fem.hpp"

namespace curlforge {

// L2-orthonormal bases of the two harmonic-field spaces:
//   H1: curl-free, weak-div-free, zero normal trace (one field per cut surface)
//   H2: curl-free, weak-div-free, zero tangential trace (one per inner boundary)
struct HarmonicBasis {
  std::vector<Eigen::VectorXd> H1;   // edge coefficient vectors
  std::vector<Eigen::VectorXd> H2;
  std::vector<Eigen::VectorXd> eta;  // nodal potentials, eta[j] = 1 on Gamma_{j+1}
  double gram_residual = 0;          // max |(h_i,h_j) - delta_ij| over both bases
  double tol_h = 0;                  // mesh-dependent residual tolerance used
};

std::vector<Eigen::VectorXd> compute_dirichlet_fields(const FemSpaces& sp,
                                                      std::vector<Eigen::VectorXd>* eta_out = nullptr);
std::vector<Eigen::VectorXd> compute_neumann_fields(const FemSpaces& sp);
HarmonicBasis compute_harmonic_basis(const FemSpaces& sp);

enum class HarmonicKind { H1, H2 };

struct HarmonicDiagnostics {
  double curl_residual = 0;   // ||curl u||
  double div_residual = 0;    // dual norm of weak divergence tests
  double trace_residual = 0;  // H1: max face flux density; H2: boundary tangential norm
  double field_norm = 0;
  bool pass = false;
};

HarmonicDiagnostics verify_harmonic(const FemSpaces& sp, const Eigen::VectorXd& field,
                                    HarmonicKind kind, double curl_tol, double tol_h);

// max over the basis of the discrete H1/L2 norm ratio (gradient recovered by
// averaging the piecewise field to vertices)
double estimate_embedding_constant(const FemSpaces& sp,
                                   const std::vector<Eigen::VectorXd>& basis);

}  // namespace curlforge

#endif
