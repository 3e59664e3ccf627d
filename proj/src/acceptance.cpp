#include "brinkman/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "brinkman/adapt.hpp"
#include "brinkman/assembly.hpp"
#include "brinkman/driver.hpp"
#include "brinkman/eigensolver.hpp"
#include "brinkman/estimator.hpp"
#include "brinkman/femspace.hpp"
#include "brinkman/mesh.hpp"

namespace brinkman {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Excluded: return "EXCLUDED";
  }
  return "?";
}

bool all_passed(const std::vector<CriterionResult>& results) {
  return std::none_of(results.begin(), results.end(),
                      [](const CriterionResult& r) { return r.verdict == Verdict::Fail; });
}

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string join(const std::vector<double>& v, const char* spec = "%.6f") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(spec, v[i]);
  return s;
}

std::string subdir(const AcceptanceOptions& o, const std::string& name) {
  return o.out_dir.empty() ? std::string() : (std::filesystem::path(o.out_dir) / name).string();
}

RunConfig box_config(int degree, double kappa) {
  RunConfig c;
  c.geometry = Geometry::SquareWithBox;
  c.degree = degree;
  c.kappa_porous = kappa;
  c.a = 10.0;
  c.epsilon = 1;
  return c;
}

RunConfig lshape_config(int degree) {
  RunConfig c;
  c.experiment = Experiment::Adapt;
  c.geometry = Geometry::LShapeChessboard;
  c.degree = degree;
  c.kappa_porous = 1e3;
  c.initial_N = 4;
  c.zeta = 0.6;
  return c;
}

double rel(double x, double ref) { return std::abs(x - ref) / std::abs(ref); }

// ---------------------------------------------------------------------------

void reference_low_kappa(CriterionResult& r, const AcceptanceOptions&) {
  const std::vector<double> ref{52.3447, 92.1244, 92.1244, 128.2096};
  const auto lam = physical_eigenvalues(box_config(2, 1e-8), 32, 4);
  bool ok = true;
  std::vector<double> dev;
  for (int i = 0; i < 4; ++i) {
    dev.push_back(rel(lam[i], ref[i]));
    ok = ok && dev.back() <= 5e-3;
  }
  const double split = std::abs(lam[1] - lam[2]) / lam[1];
  ok = ok && split <= 1e-4;
  r.details.push_back("lambda_1..4 = " + join(lam));
  r.details.push_back("relative deviation = " + join(dev, "%.2e") + " (tol 5e-3)");
  r.details.push_back("|l2 - l3| / l2 = " + fmt("%.2e", split) + " (tol 1e-4)");
  r.verdict = ok ? Verdict::Pass : Verdict::Fail;
}

void reference_high_kappa(CriterionResult& r, const AcceptanceOptions& o) {
  struct Case { double kappa, ref, tol; };
  const Case cases[] = {{1e3, 65.3658, 5e-3}, {1e5, 74.4455, 1e-2}};
  std::vector<double> lam(2);
  std::vector<std::string> err(2);
  std::vector<std::thread> pool;
  auto work = [&](int i) {
    try {
      lam[i] = physical_eigenvalues(box_config(2, cases[i].kappa), 32, 1)[0];
    } catch (const std::exception& ex) {
      err[i] = ex.what();
    }
  };
  if (o.threads > 1) {
    for (int i = 0; i < 2; ++i) pool.emplace_back(work, i);
    for (auto& t : pool) t.join();
  } else {
    for (int i = 0; i < 2; ++i) work(i);
  }
  bool ok = true;
  for (int i = 0; i < 2; ++i) {
    if (!err[i].empty()) throw std::runtime_error(err[i]);
    const double d = rel(lam[i], cases[i].ref);
    ok = ok && d <= cases[i].tol;
    r.details.push_back("kappa=" + fmt("%g", cases[i].kappa) + ": lambda_1 = " + fmt("%.6f", lam[i]) +
                        ", relative deviation " + fmt("%.2e", d) + " (tol " + fmt("%g", cases[i].tol) + ")");
  }
  r.verdict = ok ? Verdict::Pass : Verdict::Fail;
}

void stabilization_sweep(CriterionResult& r, const AcceptanceOptions& o) {
  bool ok = true;
  for (double kappa : {1e-8, 1e3, 1e5}) {
    RunConfig c = box_config(1, kappa);
    c.experiment = Experiment::Sweep;
    c.N = 16;
    c.a_grid = {0.5, 10.0};
    c.epsilons = {1};
    c.sweep_count = 40;
    const SweepResult s = run_sweep(c, subdir(o, "sweep_kappa_" + fmt("%g", kappa)), o.threads);
    int low = -1, high = -1, high_total = 0;
    for (const auto& [a, count] : s.summary.at(0).spurious_by_a) (a == 0.5 ? low : high) = count;
    for (const auto& row : s.rows)
      if (row.a == 10.0) ++high_total;
    const bool case_ok = low > 0 && high == 0 && high_total == 40;
    ok = ok && case_ok;
    r.details.push_back("kappa=" + fmt("%g", kappa) + ": spurious at a=0.5: " + std::to_string(low) +
                        ", at a=10: " + std::to_string(high) + " of " + std::to_string(high_total));
  }
  r.verdict = ok ? Verdict::Pass : Verdict::Fail;
}

// Fine reference for the box problem at kappa = 1e-8: k = 3, symmetric,
// extrapolated from N = 8, 16, 32.
double fine_box_reference(const AcceptanceOptions& o, std::vector<std::string>& notes) {
  RunConfig c = box_config(3, 1e-8);
  const std::vector<int> Ns{8, 16, 32};
  std::vector<double> lam(Ns.size()), dof(Ns.size());
  std::vector<std::string> err(Ns.size());
  std::vector<std::thread> pool;
  auto work = [&](std::size_t i) {
    try {
      lam[i] = physical_eigenvalues(c, Ns[i], 1)[0];
      dof[i] = DofMap(c.mesh(Ns[i]).num_elements(), 3).total();
    } catch (const std::exception& ex) {
      err[i] = ex.what();
    }
  };
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    if (o.threads > 1) pool.emplace_back(work, i);
    else work(i);
  }
  for (auto& t : pool) t.join();
  for (const auto& e : err)
    if (!e.empty()) throw std::runtime_error(e);
  const Extrapolation ex = extrapolate_reference(lam, dof);
  notes.push_back("reference: k=3 lambda_1 = " + join(lam, "%.10f") + " -> " + fmt("%.10f", ex.lambda) +
                  (ex.converged ? "" : " (" + ex.warning + ")"));
  return ex.lambda;
}

double convergence_rate(const AcceptanceOptions& o, int degree, int epsilon, double reference,
                        const std::string& name, std::vector<std::string>& notes) {
  RunConfig c = box_config(degree, 1e-8);
  c.experiment = Experiment::Converge;
  c.epsilon = epsilon;
  c.N_list = {8, 16, 32, 64};
  c.num_eigenvalues = 1;
  c.reference = {reference};
  const ConvergenceResult res = run_convergence(c, subdir(o, name), o.threads);
  std::vector<double> errs;
  for (const auto& row : res.rows) errs.push_back(row.err);
  notes.push_back("k=" + std::to_string(degree) + " epsilon=" + std::to_string(epsilon) +
                  ": err = " + join(errs, "%.3e") + ", h-rate " + fmt("%.3f", res.rates.at(0).h_rate));
  return res.rates.at(0).h_rate;
}

double box_reference_cache = 0.0;

double box_reference(const AcceptanceOptions& o, std::vector<std::string>& notes) {
  if (box_reference_cache == 0.0) box_reference_cache = fine_box_reference(o, notes);
  else notes.push_back("reference lambda_1 = " + fmt("%.10f", box_reference_cache));
  return box_reference_cache;
}

void symmetric_rates(CriterionResult& r, const AcceptanceOptions& o) {
  const double ref = box_reference(o, r.details);
  const double r1 = convergence_rate(o, 1, 1, ref, "converge_k1", r.details);
  const double r2 = convergence_rate(o, 2, 1, ref, "converge_k2", r.details);
  r.details.push_back("bands: k=1 [1.7, 2.3], k=2 [3.4, 4.6]");
  r.verdict = (r1 >= 1.7 && r1 <= 2.3 && r2 >= 3.4 && r2 <= 4.6) ? Verdict::Pass : Verdict::Fail;
}

void nonsymmetric_rates(CriterionResult& r, const AcceptanceOptions& o) {
  const double ref = box_reference(o, r.details);
  bool ok = true;
  for (int eps : {0, -1}) {
    const double rate = convergence_rate(o, 2, eps, ref, "converge_eps" + std::to_string(eps), r.details);
    ok = ok && rate >= 1.6 && rate <= 2.6;
  }
  r.details.push_back("band [1.6, 2.6]");
  r.verdict = ok ? Verdict::Pass : Verdict::Fail;
}

// Shared by the adaptive criteria.
struct AdaptiveRun {
  bool done = false;
  double reference = 0.0;
  std::vector<AdaptiveRecord> records;
  std::vector<std::pair<int, int>> near_corner;  // (marked near corner, marked) per iteration
  std::string stop_reason;
};

AdaptiveRun adaptive_cache;

const AdaptiveRun& adaptive_run(const AcceptanceOptions& o, std::vector<std::string>& notes) {
  if (adaptive_cache.done) return adaptive_cache;
  RunConfig ref_cfg = lshape_config(2);
  ref_cfg.max_iterations = 40;
  ref_cfg.max_dofs = 120000;
  const AdaptiveResult ref = run_adapt(ref_cfg, subdir(o, "adapt_reference_k2"));
  if (ref.records.empty() || ref.solver_failed) throw std::runtime_error("reference run failed: " + ref.stop_reason);
  adaptive_cache.reference = ref.records.back().lambda_h;
  notes.push_back("reference: k=2 adaptive, " + std::to_string(ref.records.back().dof) +
                  " dofs, lambda_1 = " + fmt("%.8f", adaptive_cache.reference));

  RunConfig cfg = lshape_config(1);
  cfg.lambda_ref = adaptive_cache.reference;
  const Point corner(0.5, 0.5);
  const AdaptiveResult res = run_adapt(cfg, subdir(o, "adapt_k1"), [&](const AdaptiveStep& step) {
    int near = 0;
    for (int e : step.marked)
      if ((step.mesh.barycenter(e) - corner).norm() < 0.15) ++near;
    adaptive_cache.near_corner.emplace_back(near, static_cast<int>(step.marked.size()));
  });
  if (res.solver_failed) throw std::runtime_error("adaptive run failed: " + res.stop_reason);
  adaptive_cache.records = res.records;
  adaptive_cache.stop_reason = res.stop_reason;
  adaptive_cache.done = true;
  return adaptive_cache;
}

void adaptive_lshape(CriterionResult& r, const AcceptanceOptions& o) {
  const AdaptiveRun& run = adaptive_run(o, r.details);
  const auto& rec = run.records;
  if (rec.size() < 6) throw std::runtime_error("fewer than 6 adaptive iterations");
  std::vector<double> err, dof;
  for (std::size_t i = rec.size() - 6; i < rec.size(); ++i) {
    err.push_back(rec[i].err);
    dof.push_back(static_cast<double>(rec[i].dof));
  }
  const RateFit fit = fit_rate(err, dof);
  const bool rate_ok = fit.slope >= -1.3 && fit.slope <= -0.7;
  r.details.push_back(std::to_string(rec.size()) + " iterations (" + run.stop_reason + "), final dof " +
                      std::to_string(rec.back().dof) + ", lambda_h " + fmt("%.6f", rec.back().lambda_h));
  r.details.push_back("error slope vs dof over last 6 = " + fmt("%.3f", fit.slope) + " (band [-1.3, -0.7])");

  int near = 0, total = 0;
  std::vector<double> per_iter;
  for (std::size_t it = 3; it < run.near_corner.size(); ++it) {
    near += run.near_corner[it].first;
    total += run.near_corner[it].second;
    per_iter.push_back(static_cast<double>(run.near_corner[it].first) / run.near_corner[it].second);
  }
  const double frac = total > 0 ? static_cast<double>(near) / total : 0.0;
  const bool corner_ok = frac >= 0.30;
  r.details.push_back("marked within r=0.15 of (0.5,0.5), iterations 3+: " + fmt("%.3f", frac) +
                      " (need >= 0.30; per iteration " + join(per_iter, "%.2f") + ")");
  r.verdict = rate_ok && corner_ok ? Verdict::Pass : Verdict::Fail;
}

void effectivity_band(CriterionResult& r, const AcceptanceOptions& o) {
  const AdaptiveRun& run = adaptive_run(o, r.details);
  const auto& rec = run.records;
  if (rec.size() < 4) throw std::runtime_error("fewer than 4 adaptive iterations");
  std::vector<double> eff;
  for (std::size_t i = rec.size() - 4; i < rec.size(); ++i) eff.push_back(rec[i].eff);
  std::vector<double> sorted = eff;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[1] + sorted[2]);
  const double spread = std::max(sorted.back() / median, median / sorted.front());
  r.details.push_back("eff over last 4 = " + join(eff, "%.4f") + ", median " + fmt("%.4f", median));
  r.details.push_back("max ratio to median = " + fmt("%.3f", spread) + " (limit 5)");
  r.verdict = median > 0.0 && std::isfinite(spread) && spread <= 5.0 ? Verdict::Pass : Verdict::Fail;
}

void oracle_equivalence(CriterionResult& r, const AcceptanceOptions&) {
  struct Case { std::string name; RunConfig config; int N; };
  std::vector<Case> cases;
  auto add = [&](std::string name, Geometry g, int N, int k, int eps, double kappa) {
    RunConfig c;
    c.geometry = g;
    c.degree = k;
    c.epsilon = eps;
    c.kappa_porous = kappa;
    cases.push_back({std::move(name), c, N});
  };
  add("square N=4 k=1", Geometry::Square, 4, 1, 1, 0.0);
  add("square N=8 k=1", Geometry::Square, 8, 1, 1, 0.0);
  add("square N=4 k=3", Geometry::Square, 4, 3, 1, 0.0);
  add("box N=8 k=1 kappa=1e3", Geometry::SquareWithBox, 8, 1, 1, 1e3);
  add("box N=8 k=2 kappa=1e-8", Geometry::SquareWithBox, 8, 2, 1, 1e-8);
  add("square N=4 k=2 eps=0", Geometry::Square, 4, 2, 0, 0.0);
  add("square N=4 k=2 eps=-1", Geometry::Square, 4, 2, -1, 0.0);
  add("lshape N=4 k=1", Geometry::LShapeChessboard, 4, 1, 1, 1e3);
  add("lshape N=4 k=2", Geometry::LShapeChessboard, 4, 2, 1, 1e3);
  add("lshape N=4 k=3 eps=-1", Geometry::LShapeChessboard, 4, 3, -1, 1e3);

  double worst = 0.0;
  bool ok = true;
  for (const auto& c : cases) {
    const SystemMatrices sys = assemble_system(c.config.mesh(c.N), c.config.physical());
    if (sys.dimension() > 3000) throw std::logic_error(c.name + " exceeds the dense cap");
    SolverOptions opts = c.config.solver();
    opts.nev = 16;
    const auto krylov = shift_invert_solve(sys, opts).physical_values();
    const auto dense = dense_fallback_solve(sys, opts).physical_values();
    double d = 0.0;
    if (krylov.size() < 10 || dense.size() < 10) {
      ok = false;
      r.details.push_back(c.name + ": fewer than 10 physical eigenvalues");
      continue;
    }
    for (int i = 0; i < 10; ++i) d = std::max(d, rel(krylov[i], dense[i]));
    worst = std::max(worst, d);
    ok = ok && d <= 1e-8;
    r.details.push_back(c.name + " (dim " + std::to_string(sys.dimension()) + "): max rel diff " + fmt("%.2e", d));
  }
  r.details.push_back("worst = " + fmt("%.2e", worst) + " (tol 1e-8)");
  r.verdict = ok ? Verdict::Pass : Verdict::Fail;
}

void structural_properties(CriterionResult& r, const AcceptanceOptions&) {
  struct Check { const char* name; double value; double tol; };
  const Check checks[] = {
      {"matrix symmetry (eps=1)", property_symmetry_defect(), 1e-12},
      {"conforming reduction", property_conforming_defect(), 1e-12},
      {"quadrature exactness", property_quadrature_defect(), 1e-13},
      {"partition of unity", property_partition_of_unity_defect(), 1e-14},
      {"dorfler bulk + minimality", property_dorfler_exact(7u, 500) ? 0.0 : 1.0, 0.0},
      {"mesh Euler/area identities", property_mesh_identity_defect(), 1e-12},
      {"estimator decomposition", property_estimator_decomposition_defect(), 1e-13},
  };
  bool ok = true;
  for (const auto& c : checks) {
    const bool pass = c.value <= c.tol;
    ok = ok && pass;
    r.details.push_back(std::string(pass ? "ok   " : "FAIL ") + c.name + ": " + fmt("%.2e", c.value) + " (tol " +
                        fmt("%g", c.tol) + ")");
  }
  r.verdict = ok ? Verdict::Pass : Verdict::Fail;
}

void excluded(CriterionResult& r, const AcceptanceOptions&) {
  r.details.push_back("3D channel eigenvalue 33.70064 and exact dof counts/figures are out of scope (2D only)");
  r.verdict = Verdict::Excluded;
}

struct Entry {
  int id;
  const char* title;
  void (*run)(CriterionResult&, const AcceptanceOptions&);
};

const Entry kCriteria[] = {
    {1, "lowest four eigenvalues, box, kappa=1e-8, k=2, N=32", reference_low_kappa},
    {2, "lambda_1, box, kappa=1e3 and 1e5, k=2, N=32", reference_high_kappa},
    {3, "stabilization sweep endpoints a=0.5 / a=10, N=16, k=1", stabilization_sweep},
    {4, "symmetric uniform rates, k=1 and k=2", symmetric_rates},
    {5, "incomplete / non-symmetric uniform rates, k=2", nonsymmetric_rates},
    {6, "adaptive L-shape: error slope and corner concentration", adaptive_lshape},
    {7, "adaptive L-shape: effectivity band", effectivity_band},
    {8, "Krylov vs dense QZ on small meshes", oracle_equivalence},
    {9, "structural properties", structural_properties},
    {10, "3D channel study", excluded},
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream& log) {
  std::vector<CriterionResult> results;
  for (const auto& entry : kCriteria) {
    if (!options.criteria.empty() &&
        std::find(options.criteria.begin(), options.criteria.end(), entry.id) == options.criteria.end())
      continue;
    CriterionResult r;
    r.id = entry.id;
    r.title = entry.title;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      entry.run(r, options);
    } catch (const std::exception& ex) {
      r.verdict = Verdict::Fail;
      r.details.push_back(std::string("error: ") + ex.what());
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log << std::left << std::setw(9) << to_string(r.verdict) << "criterion " << r.id << ": " << r.title << " ("
        << fmt("%.1f", r.seconds) << " s)\n";
    for (const auto& d : r.details) log << "          " << d << '\n';
    log.flush();
    results.push_back(std::move(r));
  }
  return results;
}

// ---------------------------------------------------------------------------
// Structural properties

namespace {

double frobenius(const SparseMatrix& m) { return m.norm(); }

double asymmetry(const SparseMatrix& m) {
  const SparseMatrix t = m.transpose();
  return frobenius(m - t) / frobenius(m);
}

std::vector<Mesh> sample_meshes() {
  std::vector<Mesh> meshes;
  meshes.push_back(generate_unit_square(4));
  meshes.push_back(generate_unit_square(6, Diagonal::Left));
  meshes.push_back(generate_square_with_inner_box(8, RegionSpec::porous_box(1e3)));
  meshes.push_back(generate_lshape_chessboard(4));
  std::mt19937 rng(11);
  Mesh m = generate_lshape_chessboard(4);
  for (int pass = 0; pass < 4; ++pass) {
    std::vector<int> marked;
    std::bernoulli_distribution coin(0.3);
    for (int e = 0; e < m.num_elements(); ++e)
      if (coin(rng)) marked.push_back(e);
    m = refine(m, marked);
    meshes.push_back(m);
  }
  return meshes;
}

}  // namespace

double property_symmetry_defect() {
  double worst = 0.0;
  const auto meshes = sample_meshes();
  for (int k = 1; k <= 3; ++k)
    for (std::size_t i = 0; i < meshes.size(); i += 2) {
      PhysicalParams p;
      p.degree = k;
      p.kappa_by_region = {0.5, 1e3, 2e3};
      const SystemMatrices sys = assemble_system(meshes[i], p);
      worst = std::max({worst, asymmetry(sys.A), asymmetry(sys.M)});
      const ColMatrix L = pencil_lhs(sys);
      const ColMatrix Lt = L.transpose();
      worst = std::max(worst, (L - Lt).norm() / L.norm());
    }
  return worst;
}

double property_conforming_defect() {
  // u = (phi, 2 phi), phi = x(1-x)y(1-y), q = x + y on the unit square.
  // a(u,u) = nu * 5/45 + kappa * 5/900, (u,u) = 5/900, b(u,q) = 3/36.
  const double nu = 1.3, kappa = 2.1;
  const int k = 4;
  const Mesh mesh = generate_unit_square(4, Diagonal::Left);
  PhysicalParams p;
  p.nu = nu;
  p.degree = k;
  p.kappa_by_region = {kappa};
  const SystemMatrices sys = assemble_system(mesh, p);
  const DofMap dm(mesh.num_elements(), k);
  const LagrangeBasis vb(k), pb(k - 1);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dm.n_u()), q = Eigen::VectorXd::Zero(dm.n_p());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const AffineMap map = geometric_map(mesh, e);
    for (int i = 0; i < vb.size(); ++i) {
      const Point x = map.to_physical(vb.nodes()[i]);
      const double phi = x.x() * (1 - x.x()) * x.y() * (1 - x.y());
      u[dm.velocity(e, 0, i)] = phi;
      u[dm.velocity(e, 1, i)] = 2 * phi;
    }
    for (int j = 0; j < pb.size(); ++j) {
      const Point x = map.to_physical(pb.nodes()[j]);
      q[dm.pressure(e, j)] = x.x() + x.y();
    }
  }
  const double a = u.dot(sys.A * u), m = u.dot(sys.M * u), b = q.dot(sys.B * u);
  return std::max({rel(a, nu * 5.0 / 45.0 + kappa * 5.0 / 900.0), rel(m, 5.0 / 900.0), rel(b, 3.0 / 36.0)});
}

double property_quadrature_defect() {
  auto fact = [](int n) { return std::tgamma(n + 1.0); };
  double worst = 0.0;
  for (int d = 0; d <= kMaxQuadratureDegree; ++d) {
    const TriangleQuadrature tq = triangle_quadrature(d);
    const EdgeQuadrature eq = edge_quadrature(d);
    for (int a = 0; a <= d; ++a) {
      double s = 0.0;
      for (int i = 0; i < eq.size(); ++i) s += eq.weights[i] * std::pow(eq.points[i], a);
      worst = std::max(worst, rel(s, 1.0 / (a + 1)));
      for (int b = 0; a + b <= d; ++b) {
        double t = 0.0;
        for (int i = 0; i < tq.size(); ++i)
          t += tq.weights[i] * std::pow(tq.points[i].x(), a) * std::pow(tq.points[i].y(), b);
        worst = std::max(worst, rel(t, fact(a) * fact(b) / fact(a + b + 2)));
      }
    }
  }
  return worst;
}

double property_partition_of_unity_defect() {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> pts;
  for (int i = 0; i < 200; ++i) {
    double x = u(rng), y = u(rng);
    if (x + y > 1) x = 1 - x, y = 1 - y;
    pts.emplace_back(x, y);
  }
  double worst = 0.0;
  for (int k = 0; k <= kMaxBasisDegree; ++k) {
    const Eigen::MatrixXd v = eval_basis(k, pts);
    worst = std::max(worst, (v.colwise().sum().array() - 1.0).abs().maxCoeff());
  }
  return worst;
}

bool property_dorfler_exact(unsigned seed, int trials) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> size(1, 60), value(0, 20);
  std::uniform_real_distribution<double> zeta(0.01, 0.99);
  for (int t = 0; t < trials; ++t) {
    std::vector<double> eta(size(rng));
    for (auto& v : eta) v = value(rng);
    if (std::all_of(eta.begin(), eta.end(), [](double v) { return v == 0.0; })) eta[0] = 1.0;
    const double z = zeta(rng);
    const auto marked = dorfler_mark(eta, z);
    const double total = std::accumulate(eta.begin(), eta.end(), 0.0);
    double sum = 0.0, smallest = eta[marked.front()];
    for (int e : marked) sum += eta[e], smallest = std::min(smallest, eta[e]);
    if (sum < z * total) return false;
    if (sum - smallest >= z * total) return false;
    // Greedy: no unmarked indicator exceeds the smallest marked one.
    std::vector<bool> in(eta.size(), false);
    for (int e : marked) in[e] = true;
    for (std::size_t e = 0; e < eta.size(); ++e)
      if (!in[e] && eta[e] > smallest) return false;
  }
  return true;
}

double property_mesh_identity_defect() {
  double worst = 0.0;
  for (const Mesh& m : sample_meshes()) {
    // Simply connected domains: V - E + F = 1.
    const int euler = m.num_vertices() - m.num_facets() + m.num_elements();
    if (euler != 1) return 1.0;
    double area = 0.0;
    for (int e = 0; e < m.num_elements(); ++e) area += m.area(e);
    double boundary = 0.0;
    for (int f = 0; f < m.num_facets(); ++f)
      if (m.facet(f).is_boundary()) boundary += m.facet_length(f);
    const bool lshape = m.total_area() < 0.9;
    worst = std::max({worst, rel(area, lshape ? 0.75 : 1.0), rel(m.total_area(), lshape ? 0.75 : 1.0),
                      rel(boundary, 4.0)});
  }
  return worst;
}

double property_estimator_decomposition_defect() {
  double worst = 0.0;
  struct Case { Mesh mesh; int k; };
  const Case cases[] = {{generate_square_with_inner_box(8, RegionSpec::porous_box(1e3)), 1},
                        {generate_lshape_chessboard(4), 2}};
  for (const auto& c : cases) {
    PhysicalParams p;
    p.degree = c.k;
    p.kappa_by_region = {0.0, 1e3};
    SolverOptions opts;
    opts.nev = 3;
    const Spectrum s = shift_invert_solve(assemble_system(c.mesh, p), opts);
    const IndicatorField f = compute_eta(c.mesh, s.pairs.at(0), p);
    double sum = 0.0;
    for (int e = 0; e < f.size(); ++e) {
      const double parts = f.volume[e] + f.divergence[e] + f.stress_jump[e] + f.gamma2[e] + f.velocity_jump[e] +
                           f.gamma1[e];
      worst = std::max(worst, std::abs(parts - f.total[e]) / std::max(f.total[e], 1e-300));
      const ElementResidual er = element_residual(c.mesh, e, s.pairs.at(0), p);
      worst = std::max(worst, std::abs(er.volume + er.divergence - f.volume[e] - f.divergence[e]) /
                                  std::max(f.total[e], 1e-300));
      sum += f.total[e];
    }
    worst = std::max(worst, rel(f.eta_sq, sum));
    worst = std::max(worst, rel(f.eta() * f.eta(), sum));
  }
  return worst;
}

}  // namespace brinkman
