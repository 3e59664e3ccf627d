#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "brinkman/eigensolver.hpp"
#include "brinkman/mesh.hpp"
#include "support.hpp"

using namespace brinkman;
using cplx = std::complex<double>;

namespace {

ColMatrix dense_to_sparse(const Eigen::MatrixXd& m) { return m.sparseView(); }

Pencil small_pencil(const Eigen::MatrixXd& L, const Eigen::MatrixXd& M) {
  Pencil p;
  p.L = dense_to_sparse(L);
  p.M = dense_to_sparse(M);
  return p;
}

SystemMatrices box_system(int N, int k, int eps, double a, double kappa) {
  PhysicalParams p;
  p.degree = k;
  p.epsilon = eps;
  p.a = a;
  p.kappa_by_region = {0.0, kappa};
  return assemble_system(generate_square_with_inner_box(N, RegionSpec::porous_box(kappa)), p);
}

}  // namespace

TEST_CASE("pencil with a singular mass block") {
  Eigen::MatrixXd L(2, 2), M(1, 1);
  L << 2, 0, 0, 3;
  M << 1;
  SolverOptions o;
  o.sigma = 0.0;
  o.nev = 1;
  for (const Spectrum& s : {shift_invert_solve(small_pencil(L, M), o), dense_fallback_solve(small_pencil(L, M), o)}) {
    REQUIRE(s.pairs.size() == 1);
    CHECK(s.pairs[0].lambda.real() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(s.pairs[0].lambda.imag()) < 1e-14);
    CHECK(std::abs(s.pairs[0].u[0]) == doctest::Approx(1.0));
    CHECK(std::abs(s.pairs[0].p[0]) < 1e-14);
  }
}

TEST_CASE("symmetric 2x2 pencil") {
  Eigen::MatrixXd L(2, 2);
  L << 2, 1, 1, 2;
  const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(2, 2);
  SolverOptions o;
  o.sigma = 0.0;
  o.nev = 2;
  for (const Spectrum& s : {shift_invert_solve(small_pencil(L, M), o), dense_fallback_solve(small_pencil(L, M), o)}) {
    REQUIRE(s.pairs.size() == 2);
    CHECK(s.pairs[0].lambda.real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.pairs[1].lambda.real() == doctest::Approx(3.0).epsilon(1e-14));
  }
}

TEST_CASE("no velocity unknowns gives an empty spectrum") {
  Eigen::MatrixXd L(2, 2);
  L << 1, 2, 0, 1;
  const Eigen::MatrixXd M(0, 0);
  SolverOptions o;
  o.nev = 2;
  CHECK(dense_fallback_solve(small_pencil(L, M), o).pairs.empty());
}

TEST_CASE("classification") {
  CHECK(classify(cplx(5.0, 0.0), 1e-6, 0.0) == Classification::Physical);
  CHECK(classify(cplx(5.0, 1e-2), 1e-6, 0.0) == Classification::SpuriousComplex);
  CHECK(classify(cplx(-3.2, 0.0), 1e-6, 0.0) == Classification::SpuriousNonpositive);
  CHECK(classify(cplx(0.5, 0.9e-6), 1e-6, 0.0) == Classification::Physical);
  CHECK(classify(cplx(1e4, 5e-3), 1e-6, 0.0) == Classification::Physical);
  CHECK(std::string(to_string(Classification::SpuriousComplex)).size() > 0);
}

TEST_CASE("normalization") {
  const auto sys = box_system(8, 1, 1, 10.0, 1e3);
  SolverOptions o;
  o.nev = 4;
  const Spectrum s = shift_invert_solve(sys, o);
  REQUIRE(s.pairs.size() == 4);
  for (const auto& pair : s.pairs) {
    const Eigen::VectorXcd Mu = sys.M.cast<cplx>() * pair.u;
    CHECK(std::abs(pair.u.dot(Mu) - 1.0) <= 1e-12);
    CHECK(pair.residual <= o.tol_res);
    EigenPair scaled = pair;
    scaled.u *= cplx(0.0, 7.0);
    scaled.p *= cplx(0.0, 7.0);
    const EigenPair back = normalize_eigenpair(scaled, sys.M);
    CHECK((back.u - pair.u).norm() <= 1e-12 * pair.u.norm());
    CHECK((back.p - pair.p).norm() <= 1e-12 * std::max(1.0, pair.p.norm()));
  }
  EigenPair zero = s.pairs[0];
  zero.u.setZero();
  CHECK_THROWS_AS(normalize_eigenpair(zero, sys.M), std::invalid_argument);
}

TEST_CASE("Krylov and dense QZ agree") {
  struct Case { int N, k, eps; double a, kappa; };
  for (const Case c : {Case{8, 1, 1, 10.0, 1e-8}, Case{8, 1, 0, 10.0, 1e3}, Case{8, 1, -1, 10.0, 1e5},
                       Case{8, 2, 1, 0.5, 1e3}}) {
    const auto sys = box_system(c.N, c.k, c.eps, c.a, c.kappa);
    REQUIRE(sys.dimension() <= 3000);
    SolverOptions o;
    o.nev = 12;
    const Spectrum kr = shift_invert_solve(sys, o);
    const Spectrum de = dense_fallback_solve(sys, o);
    REQUIRE(kr.pairs.size() == de.pairs.size());
    for (std::size_t i = 0; i < kr.pairs.size(); ++i) {
      CHECK(std::abs(kr.pairs[i].lambda - de.pairs[i].lambda) <= 1e-8 * std::abs(de.pairs[i].lambda));
      CHECK(kr.pairs[i].classification == de.pairs[i].classification);
    }
  }
}

TEST_CASE("spectrum ordering and symmetric realness") {
  const auto sys = box_system(8, 2, 1, 10.0, 1e3);
  SolverOptions o;
  o.nev = 10;
  const Spectrum s = shift_invert_solve(sys, o);
  for (std::size_t i = 1; i < s.pairs.size(); ++i) {
    const cplx a = s.pairs[i - 1].lambda, b = s.pairs[i].lambda;
    CHECK((a.real() < b.real() || (a.real() == b.real() && a.imag() <= b.imag())));
  }
  CHECK(s.count(Classification::Physical) == 10);
  for (const auto& p : s.pairs) CHECK(std::abs(p.lambda.imag()) <= 1e-10 * std::abs(p.lambda.real()));
  const auto phys = s.physical_values();
  CHECK(phys.size() == 10);
  CHECK(phys.front() == s.pairs.front().lambda.real());
  CHECK(pencil_residual(Pencil::from_system(sys), s.pairs[0]) <= 1e-8);
}

TEST_CASE("weak penalty produces flagged pairs") {
  const auto sys = box_system(8, 1, 1, 0.5, 1e3);
  SolverOptions o;
  o.nev = 20;
  const Spectrum s = shift_invert_solve(sys, o);
  CHECK(s.count(Classification::Physical) < static_cast<int>(s.pairs.size()));
  for (const auto& p : s.pairs)
    if (p.classification == Classification::Physical) {
      CHECK(p.lambda.real() > 0.0);
      CHECK(std::abs(p.lambda.imag()) <= o.tol_imag * std::max(1.0, std::abs(p.lambda.real())));
    }
}

TEST_CASE("shift on an eigenvalue") {
  Eigen::MatrixXd L(3, 3), M(3, 3);
  L.setZero();
  L.diagonal() << 2, 3, 5;
  M.setIdentity();
  SolverOptions o;
  o.sigma = 3.0;
  o.nev = 2;
  CHECK_THROWS_AS(shift_invert_solve(small_pencil(L, M), o), SingularShiftError);

  // Same singular shift through the system interface: the retry moves it.
  SystemMatrices sys;
  sys.n_u = 3;
  sys.n_p = 0;
  sys.A = L.sparseView();
  sys.M = M.sparseView();
  sys.B = SparseMatrix(0, 3);
  const Spectrum s = solve_with_retry(sys, o);
  CHECK(s.info.sigma != 3.0);
  REQUIRE(s.pairs.size() == 2);
  CHECK(s.pairs[0].lambda.real() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.pairs[1].lambda.real() == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("dense cap") {
  const auto sys = box_system(16, 2, 1, 10.0, 1e3);
  SolverOptions o;
  CHECK_THROWS_AS(dense_fallback_solve(sys, o), std::length_error);
}

TEST_CASE("spectrum csv") {
  Eigen::MatrixXd L(2, 2);
  L << 2, 1, 1, 2;
  SolverOptions o;
  o.sigma = 0.0;
  o.nev = 2;
  const Spectrum s = dense_fallback_solve(small_pencil(L, Eigen::MatrixXd::Identity(2, 2)), o);
  std::ostringstream os;
  write_spectrum_csv(os, s);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "index,re_lambda,im_lambda,residual,classification");
  std::getline(is, line);
  CHECK(line.rfind("0,1", 0) == 0);
  CHECK(line.find("physical") != std::string::npos);
}

TEST_CASE("determinism") {
  const auto sys = box_system(8, 1, 0, 10.0, 1e3);
  SolverOptions o;
  o.nev = 6;
  const Spectrum a = shift_invert_solve(sys, o), b = shift_invert_solve(sys, o);
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].lambda == b.pairs[i].lambda);
    CHECK((a.pairs[i].u - b.pairs[i].u).norm() == 0.0);
  }
}
