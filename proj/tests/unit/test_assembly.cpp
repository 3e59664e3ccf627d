#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "brinkman/assembly.hpp"
#include "support.hpp"

using namespace brinkman;
using testing::relative;

namespace {

SystemMatrices volume_only(const Mesh& mesh, const PhysicalParams& p, const VolumeTerms& terms = {}) {
  const DofMap dm(mesh.num_elements(), p.degree);
  TripletList A(dm.n_u(), dm.n_u()), B(dm.n_p(), dm.n_u()), M(dm.n_u(), dm.n_u());
  assemble_volume(mesh, dm, p, A, B, M, terms);
  SystemMatrices s;
  s.A = A.consolidate();
  s.B = B.consolidate();
  s.M = M.consolidate();
  s.n_u = dm.n_u();
  s.n_p = dm.n_p();
  return s;
}

SparseMatrix facet_only(const Mesh& mesh, const PhysicalParams& p, const FacetTerms& terms) {
  const DofMap dm(mesh.num_elements(), p.degree);
  TripletList A(dm.n_u(), dm.n_u()), B(dm.n_p(), dm.n_u());
  assemble_facet(mesh, dm, p, A, B, terms);
  return A.consolidate();
}

double max_abs(const SparseMatrix& m) {
  double r = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

// Continuous P1 interpolant of the bubble on a uniform mesh: per element, the
// three vertex values. The conforming forms are computed from the vertex
// values directly (plane gradient, exact P1 mass), without the DG basis.
struct P1Field {
  Eigen::VectorXd u;  // DG velocity vector (k = 1), both components = field
  double grad_sq = 0.0;
  double mass = 0.0;
};

P1Field continuous_p1(const Mesh& mesh) {
  P1Field out;
  const DofMap dm(mesh.num_elements(), 1);
  out.u.resize(dm.n_u());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.triangle(e);
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) v[i] = testing::bubble(mesh.vertex(t[i]));
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 3; ++i) out.u[dm.velocity(e, c, i)] = v[i];
    Eigen::Matrix3d P;
    for (int i = 0; i < 3; ++i) P.row(i) << 1.0, mesh.vertex(t[i]).x(), mesh.vertex(t[i]).y();
    const Eigen::Vector3d coef = P.fullPivLu().solve(v);
    const double area = mesh.area(e);
    out.grad_sq += area * (coef[1] * coef[1] + coef[2] * coef[2]);
    out.mass += area / 12.0 * (v.squaredNorm() + v.sum() * v.sum());
  }
  return out;
}

}  // namespace

TEST_CASE("single-element stiffness and mass") {
  const Mesh mesh = testing::reference_triangle();
  PhysicalParams p;
  p.kappa_by_region = {0.0};
  const SystemMatrices s = volume_only(mesh, p);
  const Eigen::MatrixXd A = Eigen::MatrixXd(s.A);
  Eigen::Matrix3d K;
  K << 1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5;
  CHECK((A.topLeftCorner(3, 3) - K).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((A.bottomRightCorner(3, 3) - K).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(A.topRightCorner(3, 3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(A.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-14);
  const Eigen::MatrixXd M = Eigen::MatrixXd(s.M);
  CHECK(M.topLeftCorner(3, 3).sum() == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("reaction term is linear in kappa") {
  const Mesh mesh = generate_square_with_inner_box(8, RegionSpec::porous_box(1e3));
  PhysicalParams p0, p1;
  p0.degree = p1.degree = 2;
  p0.kappa_by_region = {0.0, 0.0};
  p1.kappa_by_region = {0.0, 1e3};
  const SystemMatrices s0 = assemble_system(mesh, p0), s1 = assemble_system(mesh, p1);
  const DofMap dm(mesh.num_elements(), 2);
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(dm.n_u());
  for (int e = 0; e < mesh.num_elements(); ++e)
    if (mesh.region(e) == 1)
      for (int c = 0; c < 2; ++c)
        for (int i = 0; i < dm.velocity_local(); ++i) mask[dm.velocity(e, c, i)] = 1.0;
  const SparseMatrix masked_mass = mask.asDiagonal() * s0.M;
  const SparseMatrix expected = s0.A + 1e3 * masked_mass;
  const SparseMatrix diff = s1.A - expected;
  CHECK(max_abs(diff) <= 1e-12 * max_abs(s1.A));
}

TEST_CASE("penalty of a unit jump on the two-triangle square") {
  const Mesh mesh = generate_unit_square(1);
  PhysicalParams p;
  p.nu = 1.7;
  p.degree = 1;
  const SparseMatrix P = facet_only(mesh, p, {true, false, false, false});
  const DofMap dm(2, 1);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dm.n_u());
  for (int i = 0; i < 3; ++i) u[dm.velocity(0, 0, i)] = 1.0;
  // Element 0 has two boundary facets and the diagonal; each contributes
  // (a_S nu / h_F) |F| |u|^2 = a_S nu.
  CHECK(u.dot(P * u) == doctest::Approx(3.0 * p.penalty() * p.nu).epsilon(1e-14));
  // Constant on both elements: only the four boundary facets remain.
  for (int i = 0; i < 3; ++i) u[dm.velocity(1, 0, i)] = 1.0;
  CHECK(u.dot(P * u) == doctest::Approx(4.0 * p.penalty() * p.nu).epsilon(1e-14));
}

TEST_CASE("conforming reduction for continuous fields") {
  const Mesh mesh = generate_unit_square(6, Diagonal::Left);
  PhysicalParams p;
  p.nu = 0.8;
  p.kappa_by_region = {3.0};
  const SystemMatrices s = assemble_system(mesh, p);
  const P1Field f = continuous_p1(mesh);
  const double a = f.u.dot(s.A * f.u);
  CHECK(relative(a, 2.0 * (p.nu * f.grad_sq + 3.0 * f.mass)) <= 1e-12);
  CHECK(relative(f.u.dot(s.M * f.u), 2.0 * f.mass) <= 1e-12);
  for (int eps : {0, -1}) {
    p.epsilon = eps;
    const SystemMatrices se = assemble_system(mesh, p);
    CHECK(relative(f.u.dot(se.A * f.u), a) <= 1e-12);
  }

  const SparseMatrix G = dg_norm_matrix(mesh, DofMap(mesh.num_elements(), 1));
  CHECK(relative(f.u.dot(G * f.u), 2.0 * (f.grad_sq + f.mass)) <= 1e-12);
}

TEST_CASE("symmetry structure of the variants") {
  const Mesh mesh = refine(generate_lshape_chessboard(4), std::vector<int>{1, 2, 7});
  PhysicalParams p;
  p.degree = 2;
  p.kappa_by_region = {0.0, 1e3};
  p.epsilon = 1;
  const SystemMatrices s1 = assemble_system(mesh, p);
  CHECK(max_abs(SparseMatrix(s1.A - SparseMatrix(s1.A.transpose()))) <= 1e-12 * max_abs(s1.A));
  const ColMatrix L1 = pencil_lhs(s1);
  CHECK((L1 - ColMatrix(L1.transpose())).norm() <= 1e-12 * L1.norm());

  // epsilon = 0: A - A^T = C - C^T with C the consistency block alone, and
  // the adjoint block at epsilon = 1 is C^T.
  p.epsilon = 0;
  const SystemMatrices s0 = assemble_system(mesh, p);
  const SparseMatrix C = facet_only(mesh, p, {false, true, false, false});
  const SparseMatrix skew0 = s0.A - SparseMatrix(s0.A.transpose());
  const SparseMatrix skewC = C - SparseMatrix(C.transpose());
  CHECK(max_abs(SparseMatrix(skew0 - skewC)) <= 1e-13 * max_abs(s0.A));
  CHECK(max_abs(skew0) > 1e-3 * max_abs(s0.A));
  p.epsilon = 1;
  const SparseMatrix adj = facet_only(mesh, p, {false, false, true, false});
  CHECK(max_abs(SparseMatrix(adj - SparseMatrix(C.transpose()))) <= 1e-13 * max_abs(C));

  p.epsilon = -1;
  const SystemMatrices sm = assemble_system(mesh, p);
  const ColMatrix Lm = pencil_lhs(sm);
  CHECK((Lm - ColMatrix(Lm.transpose())).norm() > 1e-6 * Lm.norm());
}

TEST_CASE("pencil shapes and ranks") {
  const Mesh mesh = generate_unit_square(4);
  PhysicalParams p;
  const SystemMatrices s = assemble_system(mesh, p);
  REQUIRE(s.bordered());
  CHECK(s.dimension() == s.n_u + s.n_p + 1);
  CHECK(std::abs(s.mean_constraint.sum() - 1.0) <= 1e-14);
  const ColMatrix R = pencil_rhs(s);
  CHECK(R.rows() == s.dimension());
  const Eigen::MatrixXd Rd = Eigen::MatrixXd(R);
  CHECK(Rd.bottomRows(s.dimension() - s.n_u).cwiseAbs().maxCoeff() == 0.0);
  CHECK(Rd.rightCols(s.dimension() - s.n_u).cwiseAbs().maxCoeff() == 0.0);
  Eigen::LLT<Eigen::MatrixXd> llt(Rd.topLeftCorner(s.n_u, s.n_u));
  CHECK(llt.info() == Eigen::Success);

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(pencil_lhs(s)));
  const auto& sv = svd.singularValues();
  CHECK(sv(sv.size() - 1) > 1e-8 * sv(0));

  const ColMatrix S = shifted_operator(s, 2.5);
  CHECK((S - (pencil_lhs(s) - 2.5 * R)).norm() <= 1e-14 * S.norm());

  p.kappa_by_region = {0.0, 1e3};
  const SystemMatrices open = assemble_system(generate_lshape_chessboard(4), p);
  CHECK_FALSE(open.bordered());
  CHECK(open.dimension() == open.n_u + open.n_p);
}

TEST_CASE("pressure coupling reproduces the divergence pairing") {
  // -(div u, q) = (u, grad q) for u vanishing on the boundary.
  const Mesh mesh = generate_unit_square(4);
  PhysicalParams p;
  p.degree = 4;
  const SystemMatrices s = assemble_system(mesh, p);
  const Eigen::VectorXd u = testing::interpolate_velocity(mesh, 4, testing::bubble, testing::bubble);
  const Eigen::VectorXd q = testing::interpolate_pressure(mesh, 4, [](const Point& x) { return x.x() - 2 * x.y(); });
  // (u, grad q) = (1 - 2) * int bubble = -1/36.
  CHECK(relative(q.dot(s.B * u), -1.0 / 36.0) <= 1e-12);
}

TEST_CASE("dg norm") {
  const Mesh mesh = generate_unit_square(1);
  const DofMap dm(2, 1);
  CHECK(dg_norm(mesh, dm, Eigen::VectorXd::Zero(dm.n_u())) == 0.0);
  // Piecewise constant (1, 0) on element 0, zero on element 1: area 1/2 plus
  // h_F^{-1} |F| = 1 from each of its three facets.
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dm.n_u());
  for (int i = 0; i < 3; ++i) u[dm.velocity(0, 0, i)] = 1.0;
  CHECK(dg_norm(mesh, dm, u) == doctest::Approx(std::sqrt(3.5)).epsilon(1e-14));
}

TEST_CASE("triplet consolidation and matrix export") {
  TripletList t(2, 3);
  t.add(0, 1, 1.5);
  t.add(0, 1, 2.0);
  t.add(1, 2, -1.0);
  const SparseMatrix m = t.consolidate();
  CHECK(m.nonZeros() == 2);
  CHECK(m.coeff(0, 1) == 3.5);
  std::ostringstream os;
  write_matrix(os, m);
  CHECK(os.str().rfind("%%matrix 2 3 2\n", 0) == 0);

  PhysicalParams bad;
  bad.epsilon = 2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.epsilon = 1;
  bad.nu = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
