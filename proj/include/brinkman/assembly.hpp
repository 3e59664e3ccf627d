#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "brinkman/femspace.hpp"
#include "brinkman/mesh.hpp"

namespace brinkman {

/// Compressed-row sparse matrix; duplicates are summed on consolidation.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

/// Coordinate-format accumulator. Consolidation sums duplicates, so the
/// result does not depend on the append order beyond floating-point
/// summation order, which is fixed for a sequential assembly.
class TripletList {
public:
  TripletList(int rows, int cols) : rows_(rows), cols_(cols) {}
  void add(int row, int col, double value) { entries_.emplace_back(row, col, value); }
  void reserve(std::size_t n) { entries_.reserve(n); }
  std::size_t size() const { return entries_.size(); }
  SparseMatrix consolidate() const;

private:
  int rows_;
  int cols_;
  std::vector<Triplet> entries_;
};

/// Interior-penalty variant: symmetric (1), incomplete (0), non-symmetric (-1).
enum class Variant : int { Symmetric = 1, Incomplete = 0, NonSymmetric = -1 };

struct PhysicalParams {
  double nu = 1.0;
  std::vector<double> kappa_by_region{0.0};  // K^{-1} = kappa * I per region id
  double a = 10.0;                           // base stabilization
  int degree = 1;                            // velocity degree k
  int epsilon = 1;                           // variant switch in {-1, 0, 1}

  /// Effective penalty a_S = a k^2.
  double penalty() const { return a * degree * degree; }
  /// Throws std::invalid_argument when nu <= 0, kappa < 0, epsilon not in
  /// {-1, 0, 1} or the degree is unsupported.
  void validate() const;
  double kappa(const Mesh& mesh, int element) const;
};

/// Facet contributions to a_h; each flag selects one term.
struct FacetTerms {
  bool penalty = true;
  bool consistency = true;
  bool adjoint = true;   // scaled by epsilon
  bool pressure = true;  // facet part of b_h
};

struct VolumeTerms {
  bool viscous = true;
  bool reaction = true;  // kappa mass term
  bool divergence = true;
  bool mass = true;
};

/// Blocks of the saddle pencil L x = lambda R x with
/// L = [[A, B^T], [B, 0]] and R = [[M, 0], [0, 0]].
struct SystemMatrices {
  SparseMatrix A;  // n_u x n_u, a_h
  SparseMatrix B;  // n_p x n_u, b_h
  SparseMatrix M;  // n_u x n_u, velocity mass
  /// Pressure mean functional (integral of each pressure basis function);
  /// empty unless the problem needs the zero-mean border (no Gamma2 facets).
  Eigen::VectorXd mean_constraint;
  int n_u = 0;
  int n_p = 0;

  bool bordered() const { return mean_constraint.size() > 0; }
  /// Dimension of the pencil including the multiplier row, if any.
  int dimension() const { return n_u + n_p + (bordered() ? 1 : 0); }
};

/// Element terms: nu (grad u, grad v) + kappa (u, v) into A, -(div v, q) into
/// B, (u, v) into M. Accumulates into the given lists.
void assemble_volume(const Mesh& mesh, const DofMap& dofs, const PhysicalParams& params, TripletList& A,
                     TripletList& B, TripletList& M, const VolumeTerms& terms = {});

/// Facet terms over interior and Gamma1 facets (Gamma2 facets carry none).
void assemble_facet(const Mesh& mesh, const DofMap& dofs, const PhysicalParams& params, TripletList& A,
                    TripletList& B, const FacetTerms& terms = {});

/// Full assembly; adds the pressure mean border when the mesh has no Gamma2
/// facets.
SystemMatrices assemble_system(const Mesh& mesh, const PhysicalParams& params);

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// L (bordered when applicable).
ColMatrix pencil_lhs(const SystemMatrices& sys);
/// R (same dimension as L).
ColMatrix pencil_rhs(const SystemMatrices& sys);
/// L - sigma R.
ColMatrix shifted_operator(const SystemMatrices& sys, double sigma);

/// Matrix of the DG norm: mass + broken H1 seminorm + h_F^{-1} jump terms
/// over all facets (interior and boundary).
SparseMatrix dg_norm_matrix(const Mesh& mesh, const DofMap& dofs);
/// ||v||_{V(h)} of a velocity coefficient vector.
double dg_norm(const Mesh& mesh, const DofMap& dofs, const Eigen::VectorXd& v);

/// `%%matrix rows cols nnz` header then `row col value` lines (0-based).
void write_matrix(std::ostream& os, const SparseMatrix& m);
void write_matrix_file(const std::string& path, const SparseMatrix& m);

}  // namespace brinkman
