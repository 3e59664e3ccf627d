#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <Eigen/LU>

#include "json.hpp"

#include "brinkman/driver.hpp"
#include "brinkman/estimator.hpp"

namespace brinkman {

using json = nlohmann::ordered_json;

const char* to_string(Geometry g) {
  switch (g) {
    case Geometry::Square: return "square";
    case Geometry::SquareWithBox: return "square-with-box";
    case Geometry::LShapeChessboard: return "lshape-chessboard";
  }
  return "unknown";
}

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::Solve: return "solve";
    case Experiment::Sweep: return "sweep";
    case Experiment::Converge: return "converge";
    case Experiment::Adapt: return "adapt";
  }
  return "unknown";
}

namespace {

Geometry parse_geometry(const std::string& s) {
  if (s == "square") return Geometry::Square;
  if (s == "square-with-box") return Geometry::SquareWithBox;
  if (s == "lshape-chessboard") return Geometry::LShapeChessboard;
  throw std::invalid_argument("unknown geometry '" + s + "'");
}

Experiment parse_experiment(const std::string& s) {
  if (s == "solve") return Experiment::Solve;
  if (s == "sweep") return Experiment::Sweep;
  if (s == "converge") return Experiment::Converge;
  if (s == "adapt") return Experiment::Adapt;
  throw std::invalid_argument("unknown experiment '" + s + "'");
}

Diagonal parse_diagonal(const std::string& s) {
  if (s == "right") return Diagonal::Right;
  if (s == "left") return Diagonal::Left;
  throw std::invalid_argument("unknown diagonal '" + s + "'");
}

void write_text(const std::string& dir, const std::string& name, const std::function<void(std::ostream&)>& fn) {
  std::ofstream os(std::filesystem::path(dir) / name);
  if (!os) throw std::runtime_error("cannot write " + (std::filesystem::path(dir) / name).string());
  fn(os);
}

void prepare_output(const std::string& dir, const RunConfig& config) {
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  write_text(dir, "config.json", [&](std::ostream& os) { os << to_json(config) << '\n'; });
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Exceptions are
// stored per task and returned as messages (empty on success).
std::vector<std::string> parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  std::vector<std::string> errors(n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& ex) {
        errors[i] = ex.what();
      }
    }
  };
  const int workers = std::clamp(threads, 1, std::max(1, n));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return errors;
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (N < 1) fail("N must be >= 1");
  if (degree < 1 || degree > kMaxBasisDegree) fail("degree must be in 1..4");
  if (epsilon < -1 || epsilon > 1) fail("epsilon must be -1, 0 or 1");
  if (!(a > 0.0)) fail("a must be positive");
  if (!(nu > 0.0)) fail("nu must be positive");
  if (kappa_free < 0.0 || kappa_porous < 0.0) fail("kappa values must be >= 0");
  if (!(box_lower.x() < box_upper.x() && box_lower.y() < box_upper.y())) fail("box_lower must lie below box_upper");
  if (chessboard_blocks < 1) fail("chessboard_blocks must be >= 1");
  if (nev < 1) fail("nev must be >= 1");
  if (ncv < 0) fail("ncv must be >= 0");
  if (!(tol > 0.0) || !(tol_res > 0.0) || !(tol_imag > 0.0)) fail("tolerances must be positive");
  if (max_restarts < 1) fail("max_restarts must be >= 1");
  if (sample_modes < 0 || sample_grid < 1) fail("sample settings out of range");
  if (a_grid.empty()) fail("a_grid must not be empty");
  for (double v : a_grid)
    if (!(v > 0.0)) fail("a_grid values must be positive");
  if (epsilons.empty()) fail("epsilons must not be empty");
  for (int e : epsilons)
    if (e < -1 || e > 1) fail("epsilons must be -1, 0 or 1");
  if (sweep_count < 1) fail("sweep_count must be >= 1");
  if (experiment == Experiment::Converge) {
    if (N_list.size() < 3) fail("N_list needs at least 3 entries");
    for (std::size_t i = 1; i < N_list.size(); ++i)
      if (N_list[i] <= N_list[i - 1]) fail("N_list must be strictly increasing");
  }
  if (num_eigenvalues < 1) fail("num_eigenvalues must be >= 1");
  if (!reference.empty() && static_cast<int>(reference.size()) < num_eigenvalues)
    fail("reference must list num_eigenvalues values");
  if (initial_N < 1) fail("initial_N must be >= 1");
  if (!(zeta > 0.0 && zeta < 1.0)) fail("zeta must lie in (0, 1)");
  if (max_iterations < 1) fail("max_iterations must be >= 1");
  if (max_dofs < 1) fail("max_dofs must be >= 1");
  if (target_index < 0) fail("target_index must be >= 0");
  if (gamma2_segments)
    for (const auto& s : *gamma2_segments)
      if (s[0] == s[2] && s[1] == s[3]) fail("gamma2 segment of zero length");

  auto check_resolution = [&](int n) {
    if (geometry == Geometry::SquareWithBox && !regions().aligned_with_grid(n))
      fail("N = " + std::to_string(n) + " does not resolve the porous box");
    if (geometry == Geometry::LShapeChessboard && (n % 2 != 0 || n % chessboard_blocks != 0))
      fail("N = " + std::to_string(n) + " must be even and a multiple of chessboard_blocks");
  };
  switch (experiment) {
    case Experiment::Solve:
    case Experiment::Sweep: check_resolution(N); break;
    case Experiment::Converge:
      for (int n : N_list) check_resolution(n);
      break;
    case Experiment::Adapt: check_resolution(initial_N); break;
  }
}

PhysicalParams RunConfig::physical() const {
  PhysicalParams p;
  p.nu = nu;
  p.a = a;
  p.degree = degree;
  p.epsilon = epsilon;
  p.kappa_by_region = {kappa_free, kappa_porous};
  return p;
}

SolverOptions RunConfig::solver() const {
  SolverOptions o;
  o.sigma = sigma;
  o.nev = nev;
  o.ncv = ncv;
  o.tol = tol;
  o.tol_res = tol_res;
  o.tol_imag = tol_imag;
  o.tol_pos = tol_pos;
  o.max_restarts = max_restarts;
  o.seed = seed;
  return o;
}

BoundarySpec RunConfig::boundary() const {
  if (!gamma2_segments)
    return geometry == Geometry::LShapeChessboard ? BoundarySpec::lshape_default() : BoundarySpec::all_gamma1();
  BoundarySpec spec;
  for (const auto& s : *gamma2_segments)
    spec.segments.push_back({Point(s[0], s[1]), Point(s[2], s[3]), BoundaryTag::Gamma2});
  // everything else no-slip
  const double big = 10.0;
  spec.segments.push_back({Point(-big, 0.0), Point(big, 0.0), BoundaryTag::Gamma1});
  spec.segments.push_back({Point(-big, 1.0), Point(big, 1.0), BoundaryTag::Gamma1});
  spec.segments.push_back({Point(-big, 0.5), Point(big, 0.5), BoundaryTag::Gamma1});
  spec.segments.push_back({Point(0.0, -big), Point(0.0, big), BoundaryTag::Gamma1});
  spec.segments.push_back({Point(1.0, -big), Point(1.0, big), BoundaryTag::Gamma1});
  spec.segments.push_back({Point(0.5, -big), Point(0.5, big), BoundaryTag::Gamma1});
  return spec;
}

RegionSpec RunConfig::regions() const {
  RegionSpec spec;
  spec.background_kappa = kappa_free;
  switch (geometry) {
    case Geometry::Square:
      break;
    case Geometry::SquareWithBox:
      spec.regions.push_back({"porous", {Box{box_lower, box_upper}}, kappa_porous});
      break;
    case Geometry::LShapeChessboard: {
      ChessboardSpec cb;
      cb.blocks_per_side = chessboard_blocks;
      cb.kappa = kappa_porous;
      cb.porous_on_even = chessboard_porous_on_even;
      spec = lshape_chessboard_regions(cb);
      spec.background_kappa = kappa_free;
      break;
    }
  }
  return spec;
}

Mesh RunConfig::mesh(int n) const {
  const int res = n > 0 ? n : N;
  switch (geometry) {
    case Geometry::Square:
      return generate_unit_square(res, diagonal, {}, boundary());
    case Geometry::SquareWithBox: {
      const RegionSpec r = regions();
      if (!r.aligned_with_grid(res))
        throw std::invalid_argument("N = " + std::to_string(res) + " does not resolve the porous box");
      return generate_unit_square(res, diagonal, r, boundary());
    }
    case Geometry::LShapeChessboard: {
      ChessboardSpec cb;
      cb.blocks_per_side = chessboard_blocks;
      cb.kappa = kappa_porous;
      cb.porous_on_even = chessboard_porous_on_even;
      return generate_lshape_chessboard(res, boundary(), cb, diagonal);
    }
  }
  throw std::logic_error("unreachable geometry");
}

std::string to_json(const RunConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["geometry"] = to_string(c.geometry);
  j["N"] = c.N;
  j["diagonal"] = c.diagonal == Diagonal::Right ? "right" : "left";
  j["degree"] = c.degree;
  j["epsilon"] = c.epsilon;
  j["a"] = c.a;
  j["nu"] = c.nu;
  j["kappa_free"] = c.kappa_free;
  j["kappa_porous"] = c.kappa_porous;
  j["box_lower"] = {c.box_lower.x(), c.box_lower.y()};
  j["box_upper"] = {c.box_upper.x(), c.box_upper.y()};
  j["chessboard_blocks"] = c.chessboard_blocks;
  j["chessboard_porous_on_even"] = c.chessboard_porous_on_even;
  j["gamma2_segments"] = c.gamma2_segments ? json(*c.gamma2_segments) : json(nullptr);
  j["sigma"] = c.sigma;
  j["nev"] = c.nev;
  j["ncv"] = c.ncv;
  j["tol"] = c.tol;
  j["tol_res"] = c.tol_res;
  j["tol_imag"] = c.tol_imag;
  j["tol_pos"] = c.tol_pos;
  j["max_restarts"] = c.max_restarts;
  j["seed"] = c.seed;
  j["export_matrices"] = c.export_matrices;
  j["sample_modes"] = c.sample_modes;
  j["sample_grid"] = c.sample_grid;
  j["a_grid"] = c.a_grid;
  j["epsilons"] = c.epsilons;
  j["sweep_count"] = c.sweep_count;
  j["N_list"] = c.N_list;
  j["num_eigenvalues"] = c.num_eigenvalues;
  j["reference"] = c.reference;
  j["initial_N"] = c.initial_N;
  j["zeta"] = c.zeta;
  j["max_iterations"] = c.max_iterations;
  j["max_dofs"] = c.max_dofs;
  j["target_index"] = c.target_index;
  j["lambda_ref"] = c.lambda_ref ? json(*c.lambda_ref) : json(nullptr);
  j["write_meshes"] = c.write_meshes;
  return j.dump(2);
}

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw std::invalid_argument(std::string("config: malformed JSON: ") + ex.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  if (j.empty()) throw std::invalid_argument("config: empty configuration");

  RunConfig c;
  using Setter = std::function<void(const json&)>;
  auto point = [](const json& v) {
    const auto a = v.get<std::array<double, 2>>();
    return Point(a[0], a[1]);
  };
  const std::map<std::string, Setter> setters{
      {"experiment", [&](const json& v) { c.experiment = parse_experiment(v.get<std::string>()); }},
      {"geometry", [&](const json& v) { c.geometry = parse_geometry(v.get<std::string>()); }},
      {"N", [&](const json& v) { c.N = v.get<int>(); }},
      {"diagonal", [&](const json& v) { c.diagonal = parse_diagonal(v.get<std::string>()); }},
      {"degree", [&](const json& v) { c.degree = v.get<int>(); }},
      {"epsilon", [&](const json& v) { c.epsilon = v.get<int>(); }},
      {"a", [&](const json& v) { c.a = v.get<double>(); }},
      {"nu", [&](const json& v) { c.nu = v.get<double>(); }},
      {"kappa_free", [&](const json& v) { c.kappa_free = v.get<double>(); }},
      {"kappa_porous", [&](const json& v) { c.kappa_porous = v.get<double>(); }},
      {"box_lower", [&](const json& v) { c.box_lower = point(v); }},
      {"box_upper", [&](const json& v) { c.box_upper = point(v); }},
      {"chessboard_blocks", [&](const json& v) { c.chessboard_blocks = v.get<int>(); }},
      {"chessboard_porous_on_even", [&](const json& v) { c.chessboard_porous_on_even = v.get<bool>(); }},
      {"gamma2_segments",
       [&](const json& v) {
         if (v.is_null())
           c.gamma2_segments.reset();
         else
           c.gamma2_segments = v.get<std::vector<std::array<double, 4>>>();
       }},
      {"sigma", [&](const json& v) { c.sigma = v.get<double>(); }},
      {"nev", [&](const json& v) { c.nev = v.get<int>(); }},
      {"ncv", [&](const json& v) { c.ncv = v.get<int>(); }},
      {"tol", [&](const json& v) { c.tol = v.get<double>(); }},
      {"tol_res", [&](const json& v) { c.tol_res = v.get<double>(); }},
      {"tol_imag", [&](const json& v) { c.tol_imag = v.get<double>(); }},
      {"tol_pos", [&](const json& v) { c.tol_pos = v.get<double>(); }},
      {"max_restarts", [&](const json& v) { c.max_restarts = v.get<int>(); }},
      {"seed", [&](const json& v) { c.seed = v.get<unsigned long long>(); }},
      {"export_matrices", [&](const json& v) { c.export_matrices = v.get<bool>(); }},
      {"sample_modes", [&](const json& v) { c.sample_modes = v.get<int>(); }},
      {"sample_grid", [&](const json& v) { c.sample_grid = v.get<int>(); }},
      {"a_grid", [&](const json& v) { c.a_grid = v.get<std::vector<double>>(); }},
      {"epsilons", [&](const json& v) { c.epsilons = v.get<std::vector<int>>(); }},
      {"sweep_count", [&](const json& v) { c.sweep_count = v.get<int>(); }},
      {"N_list", [&](const json& v) { c.N_list = v.get<std::vector<int>>(); }},
      {"num_eigenvalues", [&](const json& v) { c.num_eigenvalues = v.get<int>(); }},
      {"reference", [&](const json& v) { c.reference = v.get<std::vector<double>>(); }},
      {"initial_N", [&](const json& v) { c.initial_N = v.get<int>(); }},
      {"zeta", [&](const json& v) { c.zeta = v.get<double>(); }},
      {"max_iterations", [&](const json& v) { c.max_iterations = v.get<int>(); }},
      {"max_dofs", [&](const json& v) { c.max_dofs = v.get<long>(); }},
      {"target_index", [&](const json& v) { c.target_index = v.get<int>(); }},
      {"lambda_ref",
       [&](const json& v) {
         if (v.is_null())
           c.lambda_ref.reset();
         else
           c.lambda_ref = v.get<double>();
       }},
      {"write_meshes", [&](const json& v) { c.write_meshes = v.get<bool>(); }},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& ex) {
      throw std::invalid_argument("config: bad value for '" + key + "': " + ex.what());
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return config_from_json(ss.str());
}

// ---------------------------------------------------------------------------
// Eigenfunction sampling

namespace {

class PointLocator {
public:
  explicit PointLocator(const Mesh& mesh) : mesh_(mesh) {
    lower_ = upper_ = mesh.vertex(0);
    for (const auto& v : mesh.vertices()) {
      lower_ = lower_.cwiseMin(v);
      upper_ = upper_.cwiseMax(v);
    }
    cells_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.num_elements()))));
    buckets_.resize(static_cast<std::size_t>(cells_) * cells_);
    for (int e = 0; e < mesh.num_elements(); ++e) {
      Point lo = mesh.vertex(mesh.triangle(e)[0]), hi = lo;
      for (int v : mesh.triangle(e)) {
        lo = lo.cwiseMin(mesh.vertex(v));
        hi = hi.cwiseMax(mesh.vertex(v));
      }
      const auto [i0, j0] = cell(lo);
      const auto [i1, j1] = cell(hi);
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) buckets_[j * cells_ + i].push_back(e);
    }
  }

  /// Lowest-id element containing x, or -1.
  int find(const Point& x) const {
    if ((x.array() < lower_.array()).any() || (x.array() > upper_.array()).any()) return -1;
    const auto [i, j] = cell(x);
    for (int e : buckets_[j * cells_ + i]) {
      const auto& t = mesh_.triangle(e);
      const Point& a = mesh_.vertex(t[0]);
      Eigen::Matrix2d J;
      J.col(0) = mesh_.vertex(t[1]) - a;
      J.col(1) = mesh_.vertex(t[2]) - a;
      const Point r = J.inverse() * (x - a);
      const double tol = 1e-12;
      if (r.x() >= -tol && r.y() >= -tol && r.x() + r.y() <= 1.0 + tol) return e;
    }
    return -1;
  }

private:
  std::pair<int, int> cell(const Point& p) const {
    const Point s = (p - lower_).cwiseQuotient(upper_ - lower_);
    const int i = std::clamp(static_cast<int>(s.x() * cells_), 0, cells_ - 1);
    const int j = std::clamp(static_cast<int>(s.y() * cells_), 0, cells_ - 1);
    return {i, j};
  }

  const Mesh& mesh_;
  Point lower_, upper_;
  int cells_ = 1;
  std::vector<std::vector<int>> buckets_;
};

}  // namespace

void write_samples_csv(std::ostream& os, const Mesh& mesh, int degree, const EigenPair& pair, int n) {
  const DofMap dofs(mesh.num_elements(), degree);
  if (pair.u.size() != dofs.n_u() || pair.p.size() < dofs.n_p())
    throw std::invalid_argument("write_samples_csv: eigenpair does not match the mesh");
  const LagrangeBasis vb(degree), pb(degree - 1);
  const PointLocator locator(mesh);
  Eigen::VectorXd phi(vb.size()), psi(pb.size());
  const auto old_precision = os.precision(17);
  os << "x,y,ux,uy,p\n";
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Point x((i + 0.5) / n, (j + 0.5) / n);
      const int e = locator.find(x);
      if (e < 0) continue;
      const Point ref = geometric_map(mesh, e).to_reference(x);
      vb.values_at(ref, phi);
      pb.values_at(ref, psi);
      const int nk = vb.size();
      const double ux = phi.dot(pair.u.segment(dofs.velocity(e, 0, 0), nk).real());
      const double uy = phi.dot(pair.u.segment(dofs.velocity(e, 1, 0), nk).real());
      const double p = psi.dot(pair.p.segment(dofs.pressure(e, 0), pb.size()).real());
      os << x.x() << ',' << x.y() << ',' << ux << ',' << uy << ',' << p << '\n';
    }
  os.precision(old_precision);
}

// ---------------------------------------------------------------------------
// Experiments

SolveResult run_solve(const RunConfig& config, const std::string& out_dir) {
  config.validate();
  prepare_output(out_dir, config);
  const Mesh mesh = config.mesh();
  const PhysicalParams params = config.physical();
  const SystemMatrices sys = assemble_system(mesh, params);
  SolveResult r;
  r.spectrum = solve_with_retry(sys, config.solver());
  r.dof = static_cast<long>(sys.n_u) + sys.n_p;
  r.elements = mesh.num_elements();
  if (out_dir.empty()) return r;

  write_text(out_dir, "spectrum.csv", [&](std::ostream& os) { write_spectrum_csv(os, r.spectrum); });
  write_text(out_dir, "solver.json", [&](std::ostream& os) {
    json j;
    j["sigma"] = r.spectrum.info.sigma;
    j["restarts"] = r.spectrum.info.restarts;
    j["subspace"] = r.spectrum.info.subspace;
    j["operator_applications"] = r.spectrum.info.operator_applications;
    j["converged"] = r.spectrum.info.converged;
    j["warning"] = r.spectrum.info.warning;
    j["dof"] = r.dof;
    j["elements"] = r.elements;
    os << j.dump(2) << '\n';
  });
  write_mesh_file((std::filesystem::path(out_dir) / "mesh.msh").string(), mesh);
  int written = 0;
  for (const auto& p : r.spectrum.pairs) {
    if (written >= config.sample_modes) break;
    if (p.classification != Classification::Physical) continue;
    write_text(out_dir, "samples_mode" + std::to_string(written) + ".csv",
               [&](std::ostream& os) { write_samples_csv(os, mesh, config.degree, p, config.sample_grid); });
    ++written;
  }
  if (config.export_matrices) {
    const auto dir = std::filesystem::path(out_dir);
    write_matrix_file((dir / "A.mtx").string(), sys.A);
    write_matrix_file((dir / "B.mtx").string(), sys.B);
    write_matrix_file((dir / "M.mtx").string(), sys.M);
  }
  return r;
}

SweepResult run_sweep(const RunConfig& config, const std::string& out_dir, int threads) {
  config.validate();
  prepare_output(out_dir, config);
  const Mesh mesh = config.mesh();
  struct Task {
    double a;
    int epsilon;
    std::vector<EigenPair> pairs;
  };
  std::vector<Task> tasks;
  for (double a : config.a_grid)
    for (int eps : config.epsilons) tasks.push_back({a, eps, {}});

  const auto errors = parallel_for(static_cast<int>(tasks.size()), threads, [&](int i) {
    PhysicalParams params = config.physical();
    params.a = tasks[i].a;
    params.epsilon = tasks[i].epsilon;
    SolverOptions opts = config.solver();
    opts.nev = config.sweep_count;
    tasks[i].pairs = solve_with_retry(assemble_system(mesh, params), opts).pairs;
  });

  SweepResult result;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (!errors[t].empty()) {
      std::ostringstream msg;
      msg << "a=" << tasks[t].a << " epsilon=" << tasks[t].epsilon << ": " << errors[t];
      result.failures.push_back(msg.str());
      continue;
    }
    for (std::size_t i = 0; i < tasks[t].pairs.size(); ++i) {
      const auto& p = tasks[t].pairs[i];
      result.rows.push_back({tasks[t].a, tasks[t].epsilon, static_cast<int>(i), p.lambda, p.classification});
    }
  }
  std::vector<double> grid = config.a_grid;
  std::sort(grid.begin(), grid.end());
  for (int eps : config.epsilons) {
    SweepSummary s;
    s.epsilon = eps;
    for (double a : grid) {
      int count = -1;
      for (std::size_t t = 0; t < tasks.size(); ++t)
        if (tasks[t].a == a && tasks[t].epsilon == eps && errors[t].empty()) {
          count = 0;
          for (const auto& p : tasks[t].pairs)
            if (p.classification != Classification::Physical) ++count;
        }
      s.spurious_by_a.emplace_back(a, count);
      if (count == 0 && !s.smallest_clean_a) s.smallest_clean_a = a;
    }
    result.summary.push_back(std::move(s));
  }

  if (!out_dir.empty()) {
    write_text(out_dir, "sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, result); });
    write_text(out_dir, "sweep_summary.csv", [&](std::ostream& os) {
      os.precision(17);
      os << "epsilon,a,spurious_count,smallest_clean_a\n";
      for (const auto& s : result.summary)
        for (const auto& [a, count] : s.spurious_by_a) {
          os << s.epsilon << ',' << a << ',' << count << ',';
          if (s.smallest_clean_a)
            os << *s.smallest_clean_a;
          else
            os << "none";
          os << '\n';
        }
    });
  }
  return result;
}

std::vector<double> physical_eigenvalues(const RunConfig& config, int N, int count) {
  const Mesh mesh = config.mesh(N);
  SolverOptions opts = config.solver();
  opts.nev = std::max(opts.nev, count + 6);
  const Spectrum s = solve_with_retry(assemble_system(mesh, config.physical()), opts);
  std::vector<double> values = s.physical_values();
  if (static_cast<int>(values.size()) < count)
    throw std::runtime_error("only " + std::to_string(values.size()) + " physical eigenvalues found at N = " +
                             std::to_string(N));
  values.resize(count);
  return values;
}

ConvergenceResult run_convergence(const RunConfig& config, const std::string& out_dir, int threads) {
  RunConfig checked = config;
  checked.experiment = Experiment::Converge;
  checked.validate();
  prepare_output(out_dir, config);
  const int levels = static_cast<int>(config.N_list.size());
  const int count = config.num_eigenvalues;
  std::vector<std::vector<double>> values(levels);
  std::vector<long> dofs(levels);
  const auto errors = parallel_for(levels, threads, [&](int l) {
    values[l] = physical_eigenvalues(config, config.N_list[l], count);
    const Mesh mesh = config.mesh(config.N_list[l]);
    const DofMap dm(mesh.num_elements(), config.degree);
    dofs[l] = dm.total();
  });
  for (int l = 0; l < levels; ++l)
    if (!errors[l].empty()) throw std::runtime_error("N = " + std::to_string(config.N_list[l]) + ": " + errors[l]);

  ConvergenceResult result;
  std::vector<double> dof_d(dofs.begin(), dofs.end());
  for (int i = 0; i < count; ++i) {
    std::vector<double> lam(levels);
    for (int l = 0; l < levels; ++l) lam[l] = values[l][i];
    ConvergenceRate rate{i + 1, 0.0, config.reference.empty(), 0.0, 0.0};
    if (config.reference.empty()) {
      const Extrapolation ex = extrapolate_reference(lam, dof_d);
      rate.reference = ex.lambda;
      if (!ex.converged) result.warnings.push_back("lambda_" + std::to_string(i + 1) + ": " + ex.warning);
    } else {
      rate.reference = config.reference[i];
    }
    std::vector<double> err(levels);
    for (int l = 0; l < levels; ++l) {
      err[l] = std::abs(lam[l] - rate.reference);
      result.rows.push_back({config.N_list[l], dofs[l], i + 1, lam[l], rate.reference, err[l]});
    }
    if (std::all_of(err.begin(), err.end(), [](double e) { return e > 0.0; })) {
      const RateFit fit = fit_rate(err, dof_d);
      rate.slope = fit.slope;
      rate.h_rate = fit.h_rate;
    } else {
      rate.slope = rate.h_rate = std::numeric_limits<double>::quiet_NaN();
      result.warnings.push_back("lambda_" + std::to_string(i + 1) + ": zero error, no rate fitted");
    }
    result.rates.push_back(rate);
  }
  if (!out_dir.empty()) {
    write_text(out_dir, "convergence.csv", [&](std::ostream& os) { write_convergence_csv(os, result); });
    write_text(out_dir, "rates.csv", [&](std::ostream& os) { write_rates_csv(os, result); });
  }
  return result;
}

AdaptiveResult run_adapt(const RunConfig& config, const std::string& out_dir, const AdaptiveObserver& observer) {
  config.validate();
  prepare_output(out_dir, config);
  AdaptiveConfig ac;
  ac.initial = config.mesh(config.initial_N);
  ac.params = config.physical();
  ac.solver = config.solver();
  ac.target_index = config.target_index;
  ac.zeta = config.zeta;
  ac.max_iterations = config.max_iterations;
  ac.max_dofs = config.max_dofs;
  ac.lambda_ref = config.lambda_ref;

  AdaptiveObserver combined = [&](const AdaptiveStep& step) {
    if (!out_dir.empty() && config.write_meshes)
      write_mesh_file((std::filesystem::path(out_dir) / ("mesh_iter" + std::to_string(step.iter) + ".msh")).string(),
                      step.mesh);
    if (observer) observer(step);
  };
  AdaptiveResult result = adaptive_loop(ac, combined);
  if (!out_dir.empty()) {
    write_text(out_dir, "records.csv", [&](std::ostream& os) { write_records_csv(os, result.records); });
    write_text(out_dir, "effectivity.csv", [&](std::ostream& os) {
      os.precision(17);
      os << "iter,dof,eta,err,eff,hot_lambda\n";
      for (const auto& r : result.records)
        os << r.iter << ',' << r.dof << ',' << r.eta << ',' << r.err << ',' << r.eff << ',' << r.hot_lambda << '\n';
    });
    write_mesh_file((std::filesystem::path(out_dir) / "final_mesh.msh").string(), result.final_mesh);
  }
  return result;
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  const auto old_precision = os.precision(17);
  os << "a,epsilon,index,re_lambda,im_lambda,classification\n";
  for (const auto& r : result.rows)
    os << r.a << ',' << r.epsilon << ',' << r.index << ',' << r.lambda.real() << ',' << r.lambda.imag() << ','
       << to_string(r.classification) << '\n';
  os.precision(old_precision);
}

void write_convergence_csv(std::ostream& os, const ConvergenceResult& result) {
  const auto old_precision = os.precision(17);
  os << "N,dof,index,lambda_h,reference,err\n";
  for (const auto& r : result.rows)
    os << r.N << ',' << r.dof << ',' << r.index << ',' << r.lambda_h << ',' << r.reference << ',' << r.err << '\n';
  os.precision(old_precision);
}

void write_rates_csv(std::ostream& os, const ConvergenceResult& result) {
  const auto old_precision = os.precision(17);
  os << "index,reference,extrapolated,dof_slope,h_rate\n";
  for (const auto& r : result.rates)
    os << r.index << ',' << r.reference << ',' << (r.extrapolated ? 1 : 0) << ',' << r.slope << ',' << r.h_rate
       << '\n';
  os.precision(old_precision);
}

}  // namespace brinkman
