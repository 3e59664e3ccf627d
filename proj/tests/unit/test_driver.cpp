#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "brinkman/acceptance.hpp"
#include "brinkman/driver.hpp"

using namespace brinkman;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("brinkman_test_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig small_box() {
  RunConfig c;
  c.geometry = Geometry::SquareWithBox;
  c.N = 8;
  c.degree = 1;
  c.kappa_porous = 1e3;
  c.nev = 6;
  return c;
}

}  // namespace

TEST_CASE("config JSON round trip") {
  RunConfig c = small_box();
  c.epsilon = -1;
  c.a_grid = {0.5, 10.0};
  c.lambda_ref = 182.5;
  c.gamma2_segments = std::vector<std::array<double, 4>>{{1.0, 0.0, 1.0, 1.0}};
  const RunConfig back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.epsilon == -1);
  CHECK(back.lambda_ref.value() == 182.5);
  CHECK(back.gamma2_segments->size() == 1);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(config_from_json(""), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("{\"N\": 8, \"bogus\": 1}"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("{\"geometry\": \"circle\"}"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("{\"N\": \"eight\"}"), std::invalid_argument);
  RunConfig c = small_box();
  c.N = 12;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_box();
  c.epsilon = 3;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_box();
  c.experiment = Experiment::Converge;
  c.N_list = {8, 16};
  CHECK_THROWS_AS(run_convergence(c), std::invalid_argument);
  c.N_list = {16, 8, 32};
  CHECK_THROWS_AS(run_convergence(c), std::invalid_argument);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), std::exception);
}

TEST_CASE("defaults") {
  const RunConfig c;
  CHECK(c.a == 10.0);
  CHECK(c.nu == 1.0);
  CHECK(c.zeta == 0.6);
  CHECK(c.max_iterations == 15);
  CHECK(c.max_dofs == 300000);
  CHECK(c.physical().penalty() == 10.0 * c.degree * c.degree);
}

TEST_CASE("solve writes reproducible outputs") {
  const fs::path d1 = scratch("solve1"), d2 = scratch("solve2");
  RunConfig c = small_box();
  c.export_matrices = true;
  const SolveResult r = run_solve(c, d1.string());
  CHECK(r.elements == 128);
  CHECK(r.dof == 128 * 7);
  for (const char* f : {"config.json", "spectrum.csv", "solver.json", "mesh.msh", "samples_mode0.csv", "A.mtx",
                        "B.mtx", "M.mtx"})
    CHECK(fs::exists(d1 / f));
  const RunConfig reread = load_config((d1 / "config.json").string());
  run_solve(reread, d2.string());
  CHECK(slurp(d1 / "spectrum.csv") == slurp(d2 / "spectrum.csv"));
  CHECK(slurp(d1 / "samples_mode0.csv") == slurp(d2 / "samples_mode0.csv"));
  CHECK(slurp(d1 / "config.json") == slurp(d2 / "config.json"));
  CHECK(slurp(d1 / "samples_mode0.csv").rfind("x,y,ux,uy,p\n", 0) == 0);
}

TEST_CASE("one-point sweep matches a single solve") {
  RunConfig c = small_box();
  c.a_grid = {10.0};
  c.epsilons = {1};
  c.sweep_count = 6;
  const SweepResult s = run_sweep(c);
  const SolveResult r = run_solve(c);
  REQUIRE(s.rows.size() == r.spectrum.pairs.size());
  for (std::size_t i = 0; i < s.rows.size(); ++i) CHECK(s.rows[i].lambda == r.spectrum.pairs[i].lambda);
  REQUIRE(s.summary.size() == 1);
  CHECK(s.summary[0].smallest_clean_a.value() == 10.0);
}

TEST_CASE("sweep rows are ordered and threads do not change results") {
  RunConfig c = small_box();
  c.a_grid = {10.0, 0.5};
  c.epsilons = {1, -1};
  c.sweep_count = 8;
  const SweepResult serial = run_sweep(c, {}, 1);
  const SweepResult parallel = run_sweep(c, {}, 3);
  REQUIRE(serial.rows.size() == parallel.rows.size());
  for (std::size_t i = 0; i < serial.rows.size(); ++i) {
    CHECK(serial.rows[i].a == parallel.rows[i].a);
    CHECK(serial.rows[i].lambda == parallel.rows[i].lambda);
  }
  std::ostringstream a, b;
  write_sweep_csv(a, serial);
  write_sweep_csv(b, parallel);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("a,epsilon,index,re_lambda,im_lambda,classification\n", 0) == 0);
}

TEST_CASE("convergence table") {
  RunConfig c = small_box();
  c.kappa_porous = 1e-8;
  c.N_list = {8, 16, 24};
  c.num_eigenvalues = 2;
  const fs::path d = scratch("converge");
  const ConvergenceResult res = run_convergence(c, d.string());
  CHECK(res.rows.size() == 6);
  REQUIRE(res.rates.size() == 2);
  CHECK(res.rates[0].extrapolated);
  CHECK(res.rates[0].h_rate > 1.5);
  CHECK(fs::exists(d / "convergence.csv"));
  CHECK(fs::exists(d / "rates.csv"));
}

TEST_CASE("adapt writes records and meshes") {
  RunConfig c;
  c.experiment = Experiment::Adapt;
  c.geometry = Geometry::LShapeChessboard;
  c.kappa_porous = 1e3;
  c.max_iterations = 3;
  c.write_meshes = true;
  c.lambda_ref = 182.38866;
  const fs::path d = scratch("adapt");
  const AdaptiveResult res = run_adapt(c, d.string());
  CHECK(res.records.size() == 3);
  for (const char* f : {"records.csv", "effectivity.csv", "final_mesh.msh", "mesh_iter0.msh", "mesh_iter1.msh"})
    CHECK(fs::exists(d / f));
  CHECK(slurp(d / "effectivity.csv").rfind("iter,dof,eta,err,eff,hot_lambda\n", 0) == 0);
  const Mesh final_mesh = read_mesh_file((d / "final_mesh.msh").string());
  CHECK(final_mesh.num_elements() == res.records.back().elements);
}

TEST_CASE("structural property checks") {
  CHECK(property_symmetry_defect() <= 1e-12);
  CHECK(property_conforming_defect() <= 1e-12);
  CHECK(property_quadrature_defect() <= 1e-13);
  CHECK(property_partition_of_unity_defect() <= 1e-14);
  CHECK(property_dorfler_exact(3u, 200));
  CHECK(property_mesh_identity_defect() <= 1e-12);
  CHECK(property_estimator_decomposition_defect() <= 1e-13);
}

TEST_CASE("acceptance runner reports excluded criteria") {
  AcceptanceOptions o;
  o.criteria = {10};
  std::ostringstream log;
  const auto results = run_acceptance(o, log);
  REQUIRE(results.size() == 1);
  CHECK(results[0].verdict == Verdict::Excluded);
  CHECK(all_passed(results));
  CHECK(log.str().rfind("EXCLUDED", 0) == 0);
}
