#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "brinkman/mesh.hpp"

namespace brinkman {

/// Highest polynomial degree accepted by the quadrature generators.
inline constexpr int kMaxQuadratureDegree = 20;
/// Highest Lagrange degree supported by the reference element.
inline constexpr int kMaxBasisDegree = 4;

/// Rule on the reference triangle {x, y >= 0, x + y <= 1}; weights sum to 1/2.
struct TriangleQuadrature {
  std::vector<Point> points;
  std::vector<double> weights;
  int degree = 0;
  int size() const { return static_cast<int>(weights.size()); }
};

/// Rule on [0, 1]; weights sum to 1.
struct EdgeQuadrature {
  std::vector<double> points;
  std::vector<double> weights;
  int degree = 0;
  int size() const { return static_cast<int>(weights.size()); }
};

/// Exact for polynomials of total degree <= `degree`. Collapsed Gauss
/// product rule, all weights positive and points interior.
TriangleQuadrature triangle_quadrature(int degree);
/// Gauss-Legendre rule exact for polynomials of degree <= `degree`.
EdgeQuadrature edge_quadrature(int degree);

inline int dim_pk(int k) { return (k + 1) * (k + 2) / 2; }

/// Nodal Lagrange basis of P_k on the reference triangle, equispaced nodes:
/// vertices (0,0), (1,0), (0,1) first, then edge nodes, then interior nodes.
/// Degree 0 is the constant basis (node at the barycenter).
class LagrangeBasis {
public:
  explicit LagrangeBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Point>& nodes() const { return nodes_; }

  /// values(i, q) = phi_i(pts[q]).
  Eigen::MatrixXd values(const std::vector<Point>& pts) const;
  /// Reference gradients, dx(i, q) and dy(i, q).
  std::array<Eigen::MatrixXd, 2> gradients(const std::vector<Point>& pts) const;
  /// Reference second derivatives: xx, xy, yy.
  std::array<Eigen::MatrixXd, 3> hessians(const std::vector<Point>& pts) const;

  /// Single-point evaluations into caller storage (size() entries).
  void values_at(const Point& p, Eigen::Ref<Eigen::VectorXd> out) const;
  void gradients_at(const Point& p, Eigen::Ref<Eigen::VectorXd> dx, Eigen::Ref<Eigen::VectorXd> dy) const;

private:
  int degree_;
  std::vector<Point> nodes_;
  // Barycentric multi-index (i0, i1, i2) of each node, lambda = (1-x-y, x, y);
  // phi = R_i0(lambda0) R_i1(lambda1) R_i2(lambda2) with
  // R_m(t) = prod_{s<m} (k t - s) / (s + 1).
  std::vector<std::array<int, 3>> multi_;

  struct Factors {
    double f[3][3];  // f[c][d]: d-th derivative of R_{i_c}(lambda_c)
  };
  Factors factors(int i, const Point& p) const;
};

/// Basis values at reference points; throws std::invalid_argument for k
/// outside [0, kMaxBasisDegree].
Eigen::MatrixXd eval_basis(int k, const std::vector<Point>& pts);
std::array<Eigen::MatrixXd, 2> eval_basis_grad(int k, const std::vector<Point>& pts);

/// x = origin + J * xhat.
struct AffineMap {
  Point origin;
  Eigen::Matrix2d jacobian;
  Eigen::Matrix2d inverse;            // J^{-1}
  Eigen::Matrix2d inverse_transpose;  // J^{-T}, maps reference gradients
  double det = 0.0;

  Point to_physical(const Point& ref) const { return origin + jacobian * ref; }
  Point to_reference(const Point& x) const { return inverse * (x - origin); }
};

/// Throws std::invalid_argument for zero-area elements.
AffineMap geometric_map(const Mesh& mesh, int element);

/// Fully discontinuous numbering: velocity dofs first (element-major,
/// component-major, then basis function), pressure dofs after all velocity
/// dofs.
class DofMap {
public:
  DofMap(int num_elements, int degree);

  int degree() const { return degree_; }
  int num_elements() const { return num_elements_; }
  int velocity_local() const { return vel_local_; }    // dim P_k
  int pressure_local() const { return pres_local_; }   // dim P_{k-1}
  int n_u() const { return 2 * num_elements_ * vel_local_; }
  int n_p() const { return num_elements_ * pres_local_; }
  int total() const { return n_u() + n_p(); }

  int velocity(int element, int component, int i) const {
    return (element * 2 + component) * vel_local_ + i;
  }
  /// Index within the pressure block (0-based, not offset by n_u).
  int pressure(int element, int j) const { return element * pres_local_ + j; }

private:
  int num_elements_;
  int degree_;
  int vel_local_;
  int pres_local_;
};

}  // namespace brinkman
