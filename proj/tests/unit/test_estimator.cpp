#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <sstream>

#include "brinkman/estimator.hpp"
#include "support.hpp"

using namespace brinkman;
using testing::make_pair;

namespace {

PhysicalParams params(int k, std::vector<double> kappa = {0.0}) {
  PhysicalParams p;
  p.degree = k;
  p.kappa_by_region = std::move(kappa);
  return p;
}

double sum_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

TEST_CASE("zero eigenpair has zero estimator") {
  const Mesh mesh = generate_lshape_chessboard(4);
  const auto p = params(2, {0.0, 1e3});
  const DofMap dm(mesh.num_elements(), 2);
  const auto pair = make_pair(Eigen::VectorXd::Zero(dm.n_u()), Eigen::VectorXd::Zero(dm.n_p()), 17.0);
  const IndicatorField f = compute_eta(mesh, pair, p);
  CHECK(f.eta_sq == 0.0);
  CHECK(f.eta() == 0.0);
  const ElementResidual r = element_residual(mesh, 3, pair, p);
  CHECK(r.volume == 0.0);
  CHECK(r.divergence == 0.0);
}

TEST_CASE("k = 1 volume term reduces to the mass form") {
  const Mesh mesh = generate_square_with_inner_box(8, RegionSpec::porous_box(1e3));
  const auto p = params(1, {0.0, 1e3});
  const SystemMatrices sys = assemble_system(mesh, p);
  const DofMap dm(mesh.num_elements(), 1);
  std::mt19937 rng(4);
  std::normal_distribution<double> g;
  Eigen::VectorXd u(dm.n_u()), q(dm.n_p());
  for (auto& x : u) x = g(rng);
  for (auto& x : q) x = g(rng);
  const double lambda = 37.5;
  const auto pair = make_pair(u, q, lambda);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    Eigen::VectorXd ue = Eigen::VectorXd::Zero(dm.n_u());
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 3; ++i) ue[dm.velocity(e, c, i)] = u[dm.velocity(e, c, i)];
    const double kappa = p.kappa(mesh, e);
    const double h = mesh.diameter(e);
    const double expected = h * h * (lambda - kappa) * (lambda - kappa) * ue.dot(sys.M * ue);
    CHECK(element_residual(mesh, e, pair, p).volume == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("divergence-free rotation") {
  const Mesh mesh = generate_unit_square(4);
  const auto p = params(1);
  const DofMap dm(mesh.num_elements(), 1);
  const Eigen::VectorXd u = testing::interpolate_velocity(
      mesh, 1, [](const Point& x) { return x.y(); }, [](const Point& x) { return -x.x(); });
  const auto pair = make_pair(u, Eigen::VectorXd::Zero(dm.n_p()), 1.0);
  for (int e = 0; e < mesh.num_elements(); ++e) CHECK(element_residual(mesh, e, pair, p).divergence <= 1e-13);
}

TEST_CASE("continuous field vanishing on the boundary has no jump terms") {
  const Mesh mesh = generate_unit_square(4, Diagonal::Left);
  const auto p = params(2);
  const DofMap dm(mesh.num_elements(), 2);
  const Eigen::VectorXd u = testing::interpolate_velocity(mesh, 2, testing::bubble, testing::bubble);
  const auto pair = make_pair(u, Eigen::VectorXd::Zero(dm.n_p()), 1.0);
  const IndicatorField f = compute_eta(mesh, pair, p);
  CHECK(sum_of(f.velocity_jump) <= 1e-28);
  CHECK(sum_of(f.gamma1) <= 1e-28);
  CHECK(sum_of(f.stress_jump) > 0.0);
}

TEST_CASE("hand-integrated facet terms on the two-triangle square") {
  const Mesh mesh = generate_unit_square(1);
  const auto p = params(1);
  const DofMap dm(2, 1);

  SUBCASE("unit velocity jump") {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dm.n_u());
    for (int i = 0; i < 3; ++i) u[dm.velocity(0, 0, i)] = 1.0;
    IndicatorField f(2);
    facet_residuals(mesh, make_pair(u, Eigen::VectorXd::Zero(dm.n_p()), 1.0), p, f);
    // (h_F^{-1} / 2) |F| with h_F = |F|.
    CHECK(f.velocity_jump[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(f.velocity_jump[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(f.gamma1[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.gamma1[1] == 0.0);
  }
  SUBCASE("unit pressure jump") {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(dm.n_p());
    q[dm.pressure(0, 0)] = 1.0;
    IndicatorField f(2);
    facet_residuals(mesh, make_pair(Eigen::VectorXd::Zero(dm.n_u()), q, 1.0), p, f);
    // (h_F / 2) |F| on the diagonal, |F| = sqrt(2).
    CHECK(f.stress_jump[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.stress_jump[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sum_of(f.velocity_jump) == 0.0);
  }
  SUBCASE("constant velocity against the wall") {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dm.n_u());
    for (int e = 0; e < 2; ++e)
      for (int i = 0; i < 3; ++i) u[dm.velocity(e, 0, i)] = 1.0;
    IndicatorField f(2);
    facet_residuals(mesh, make_pair(u, Eigen::VectorXd::Zero(dm.n_p()), 1.0), p, f);
    CHECK(f.gamma1[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.gamma1[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sum_of(f.velocity_jump) <= 1e-30);
  }
}

TEST_CASE("constant pressure loads only the outflow facets") {
  const Mesh mesh = generate_lshape_chessboard(4);
  const auto p = params(2, {0.0, 1e3});
  const DofMap dm(mesh.num_elements(), 2);
  const auto pair = make_pair(Eigen::VectorXd::Zero(dm.n_u()), Eigen::VectorXd::Ones(dm.n_p()), 1.0);
  const IndicatorField f = compute_eta(mesh, pair, p);
  std::vector<double> expected(mesh.num_elements(), 0.0);
  for (int fi = 0; fi < mesh.num_facets(); ++fi)
    if (mesh.facet(fi).kind == FacetKind::Gamma2) {
      const double len = mesh.facet_length(fi);
      expected[mesh.facet(fi).elements[0]] += 0.5 * len * len;
    }
  for (int e = 0; e < mesh.num_elements(); ++e) {
    CHECK(f.gamma2[e] == doctest::Approx(expected[e]).epsilon(1e-13));
    CHECK(f.stress_jump[e] <= 1e-28);
    CHECK(f.divergence[e] == 0.0);
  }
}

TEST_CASE("decomposition identity on a computed eigenpair") {
  const Mesh mesh = generate_lshape_chessboard(4);
  const auto p = params(2, {0.0, 1e3});
  SolverOptions o;
  o.nev = 4;
  const Spectrum s = shift_invert_solve(assemble_system(mesh, p), o);
  const IndicatorField f = compute_eta(mesh, s.pairs.at(0), p);
  double total = 0.0;
  for (int e = 0; e < f.size(); ++e) {
    const double parts =
        f.volume[e] + f.divergence[e] + f.stress_jump[e] + f.gamma2[e] + f.velocity_jump[e] + f.gamma1[e];
    CHECK(std::abs(parts - f.total[e]) <= 1e-13 * f.total[e]);
    total += f.total[e];
  }
  CHECK(std::abs(f.eta_sq - total) <= 1e-13 * total);
  CHECK(f.eta() == doctest::Approx(std::sqrt(total)).epsilon(1e-14));
}

TEST_CASE("largest indicator sits at the reentrant corner on the first mesh") {
  const Mesh mesh = generate_lshape_chessboard(4);
  const auto p = params(1, lshape_chessboard_regions({}).kappa_by_region());
  SolverOptions o;
  o.nev = 4;
  const Spectrum s = shift_invert_solve(assemble_system(mesh, p), o);
  const IndicatorField f = compute_eta(mesh, s.pairs.at(0), p);
  const int worst = static_cast<int>(std::max_element(f.total.begin(), f.total.end()) - f.total.begin());
  CHECK((mesh.barycenter(worst) - Point(0.5, 0.5)).norm() <= 2.0 * mesh.mesh_size());
}

TEST_CASE("effectivity") {
  CHECK(effectivity(10.0, 10.0 + 1e-4, 1e-2) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(effectivity(3.0, 3.0, 0.5) == 0.0);
  const double e1 = effectivity(2.0, 2.1, 0.3), e2 = effectivity(2.0, 2.1, 0.6);
  CHECK(e1 == doctest::Approx(4.0 * e2).epsilon(1e-14));
  CHECK(std::isinf(effectivity(1.0, 2.0, 0.0)));
}

TEST_CASE("indicator csv") {
  IndicatorField f(2);
  f.volume = {1.0, 2.0};
  f.accumulate();
  CHECK(f.eta_sq == 3.0);
  std::ostringstream os;
  write_indicators_csv(os, f);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line ==
        "element_id,eta_sq_volume,eta_sq_div,eta_sq_stress_jump,eta_sq_gamma2,eta_sq_vel_jump,eta_sq_gamma1,"
        "eta_sq_total");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 2);
}
