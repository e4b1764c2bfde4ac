// SPDX-License-Identifier: Apache-2.0

#ifndef CURLFORGE_FEM_HPP
#define CURLFORGE_FEM_HPP

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "curlforge/geometry.hpp"

namespace curlforge {

using SpMat = Eigen::SparseMatrix<double>;
using Mat3 = Eigen::Matrix3d;

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Values at the 4 interior quadrature points of each tet, row = tet*4 + q.
using QuadMat = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
// One constant 3-vector per tet.
using CellMat = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

enum class SpaceTag { Nodal, Edge, Cell };

struct FieldVector {
  SpaceTag tag = SpaceTag::Nodal;
  Eigen::VectorXd data;
};

struct SparseOperator {
  SpMat mat;
  bool symmetric = false;
};

// P1 nodal / lowest-order edge spaces with the exact complex grad -> curl.
struct FemSpaces {
  const Mesh* mesh = nullptr;

  // edges, global orientation low->high vertex index
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 6>> tet_edges;
  std::vector<std::array<double, 6>> tet_edge_sign;

  std::vector<Eigen::Matrix<double, 3, 4>> grad_lambda;  // column i = grad lambda_i
  std::vector<double> volume;
  std::vector<std::array<Vec3, 6>> edge_curl;              // curl of signed basis, per tet
  std::vector<std::array<std::array<Vec3, 6>, 4>> edge_basis;  // value at qp, signed

  QuadMat quad_x;            // quadrature point coordinates
  Eigen::VectorXd quad_w;    // weights (sum to volume)
  double domain_volume = 0;

  std::vector<char> vertex_on_boundary;
  std::vector<char> edge_on_boundary;

  struct BFace {
    std::array<int, 3> v;   // outward oriented
    int label = 0;
    int tet = -1;
    double area = 0;
    Vec3 normal;            // unit outward
    std::array<int, 3> edge;       // edges (v0,v1),(v1,v2),(v2,v0)
    std::array<double, 3> edge_sign;  // +1 if loop direction matches global edge
    std::array<Vec3, 3> mid;       // edge midpoints (face quadrature points)
  };
  std::vector<BFace> bfaces;
  std::vector<int> boundary_edges;          // sorted edge ids
  std::vector<int> edge_boundary_index;     // -1 if interior
  int num_labels = 0;

  int num_vertices() const { return mesh->num_vertices(); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int num_tets() const { return mesh->num_tets(); }
  int num_quad() const { return 4 * num_tets(); }

  int edge_index(int a, int b) const;  // -1 if absent
};

FemSpaces build_spaces(const Mesh& mesh);

// exact discrete calculus
Eigen::VectorXd grad_of(const FemSpaces& sp, const Eigen::VectorXd& nodal);
CellMat curl_of(const FemSpaces& sp, const Eigen::VectorXd& edge);
QuadMat eval_edge(const FemSpaces& sp, const Eigen::VectorXd& edge);
QuadMat eval_nodal_grad(const FemSpaces& sp, const Eigen::VectorXd& nodal);
Eigen::VectorXd eval_nodal(const FemSpaces& sp, const Eigen::VectorXd& nodal);  // at qps
QuadMat cell_to_quad(const FemSpaces& sp, const CellMat& c);
CellMat quad_to_cell(const FemSpaces& sp, const QuadMat& q);  // weighted cell means
Vec3 eval_edge_at(const FemSpaces& sp, const Eigen::VectorXd& edge, int tet, const Vec3& x);

// L2 inner products evaluated with the same 4-point rule everywhere
double l2_inner(const FemSpaces& sp, const QuadMat& a, const QuadMat& b);
double l2_norm(const FemSpaces& sp, const QuadMat& a);
double l2_inner_edge(const FemSpaces& sp, const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double l2_norm_edge(const FemSpaces& sp, const Eigen::VectorXd& a);
double l2_norm_cell(const FemSpaces& sp, const CellMat& a);
double l2_norm_nodal(const FemSpaces& sp, const Eigen::VectorXd& a);
double nodal_mean(const FemSpaces& sp, const Eigen::VectorXd& a);  // (1/|O|) integral

// functional vectors
// r_v = integral <q, grad hat_v>; rows v in 0..V-1
Eigen::VectorXd grad_test_functional(const FemSpaces& sp, const QuadMat& q);
// r_e = integral <q, W_e>
Eigen::VectorXd edge_test_functional(const FemSpaces& sp, const QuadMat& q);
// r_e = integral <c, curl W_e>
Eigen::VectorXd curl_test_functional(const FemSpaces& sp, const CellMat& c);
// weak divergence diagnostics: dual norm of v -> (u, grad hat_v) over chosen tests
double weak_div_residual(const FemSpaces& sp, const QuadMat& u, bool include_boundary_tests);

// assembly
enum class FormKind { MassScalar, MassVector, Stiffness, CurlCurl, GradCoupling, WeightedMass };
SparseOperator assemble(FormKind kind, const FemSpaces& sp,
                        const Eigen::VectorXd* quad_coeff = nullptr);

SpMat assemble_mass_scalar(const FemSpaces& sp);
SpMat assemble_stiffness(const FemSpaces& sp);
SpMat assemble_mass_vector(const FemSpaces& sp, const Eigen::VectorXd* quad_coeff = nullptr);
SpMat assemble_curlcurl(const FemSpaces& sp, const std::vector<Mat3>* cell_weight = nullptr);
SpMat assemble_grad_coupling(const FemSpaces& sp);  // (E x V), entries (W_e, grad hat_v)
SpMat assemble_weighted_stiffness(const FemSpaces& sp, const std::vector<Mat3>& quad_weight);

// boundary primitives
// integral over boundary of (nu x A) . B  with A, B edge fields
double boundary_cross_pair(const FemSpaces& sp, const Eigen::VectorXd& A,
                           const Eigen::VectorXd& B);
// functional e -> integral (nu x A).W_e over the boundary (A an edge field)
Eigen::VectorXd boundary_cross_functional(const FemSpaces& sp, const Eigen::VectorXd& A);
// same with analytic A evaluated at face quadrature points
Eigen::VectorXd boundary_cross_functional(const FemSpaces& sp,
                                          const std::function<Vec3(const Vec3&)>& A);
// scalar boundary functional v -> integral g hat_v, g given per face as total integral
Eigen::VectorXd boundary_scalar_functional(const FemSpaces& sp,
                                           const Eigen::VectorXd& face_totals);
Eigen::VectorXd boundary_scalar_functional(const FemSpaces& sp,
                                           const std::function<double(const Vec3&)>& g);
// per-boundary-face circulation of an edge field (= integral of nu . curl over the face)
Eigen::VectorXd face_circulations(const FemSpaces& sp, const Eigen::VectorXd& edge);
// circulation data of an analytic field along the boundary edges (Gauss-5)
Eigen::VectorXd boundary_edge_circulations(const FemSpaces& sp,
                                           const std::function<Vec3(const Vec3&)>& A);
// edge interpolant of an analytic field: coefficients are edge circulations
Eigen::VectorXd interpolate_edge(const FemSpaces& sp, const std::function<Vec3(const Vec3&)>& A);
// nodal interpolant
Eigen::VectorXd interpolate_nodal(const FemSpaces& sp, const std::function<double(const Vec3&)>& g);
// component fluxes of a cell field: integral over Gamma_j of nu . c
Eigen::VectorXd component_fluxes(const FemSpaces& sp, const CellMat& c);

// conjugate gradients with diagonal preconditioning
struct CgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double rel_residual = 0;
  bool converged = false;
};
struct CgOptions {
  double tol = 1e-12;
  int max_iterations = 20000;
  bool nullspace_constants = false;  // pure Neumann: project constants, return mean-zero
  const std::vector<char>* free_mask = nullptr;  // entries==1 are unknowns
};
CgResult solve_spd(const SpMat& A, const Eigen::VectorXd& b, const CgOptions& opt = {});
FieldVector solve_spd(const SparseOperator& A, const FieldVector& b, double tol);

// symmetric saddle systems [[A, C^T],[C, 0]] via quasi-definite LDLT + refinement
struct SaddleResult {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;
  double rel_residual = 0;
};
SaddleResult solve_saddle(const SpMat& A, const SpMat& C, const Eigen::VectorXd& f,
                          const Eigen::VectorXd& g);

// Constrained curl-curl solve: fixed boundary-trace dofs, weak-divergence
// multiplier rows, and deflation against given edge fields.
struct EdgeConstraintSet {
  enum class DivTests { None, Interior, AllButOne } div = DivTests::Interior;
  std::vector<const Eigen::VectorXd*> deflate;   // L2-orthogonality constraints
  Eigen::VectorXd deflate_rhs;                   // optional, defaults to zero
};
struct ConstrainedSolveResult {
  Eigen::VectorXd u;              // full edge vector
  Eigen::VectorXd div_multiplier; // nodal-sized (zeros on unused tests)
  double pressure_norm = 0;       // L2 norm of the divergence multiplier field
  Eigen::VectorXd deflate_multiplier;
  double rel_residual = 0;
};
// A acts on edge dofs; fixed dofs are eliminated at the given values.
ConstrainedSolveResult solve_constrained_edge(const FemSpaces& sp, const SpMat& A,
                                              const Eigen::VectorXd& rhs,
                                              const std::vector<char>& edge_fixed,
                                              const Eigen::VectorXd& fixed_values,
                                              const EdgeConstraintSet& constraints,
                                              const SpMat& grad_coupling);

}  // namespace curlforge

#endif
