#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "brinkman/adapt.hpp"
#include "brinkman/assembly.hpp"
#include "brinkman/eigensolver.hpp"
#include "brinkman/mesh.hpp"

namespace brinkman {

enum class Geometry { Square, SquareWithBox, LShapeChessboard };
enum class Experiment { Solve, Sweep, Converge, Adapt };

const char* to_string(Geometry g);
const char* to_string(Experiment e);

/// Flat run description; serialized next to every result set.
struct RunConfig {
  Experiment experiment = Experiment::Solve;
  Geometry geometry = Geometry::SquareWithBox;
  int N = 16;
  Diagonal diagonal = Diagonal::Right;
  int degree = 1;
  int epsilon = 1;
  double a = 10.0;
  double nu = 1.0;
  double kappa_free = 0.0;
  double kappa_porous = 1e-8;
  Point box_lower{0.375, 0.375};
  Point box_upper{0.625, 0.625};
  int chessboard_blocks = 2;
  bool chessboard_porous_on_even = true;
  /// Gamma2 segments as (x0, y0, x1, y1); the rest of the boundary is Gamma1.
  /// Unset selects the geometry default (none, or the L-shape arm ends).
  std::optional<std::vector<std::array<double, 4>>> gamma2_segments;

  // eigensolver
  double sigma = 1.0;
  int nev = 10;
  int ncv = 0;
  double tol = 1e-11;
  double tol_res = 1e-8;
  double tol_imag = 1e-6;
  double tol_pos = 0.0;
  int max_restarts = 400;
  unsigned long long seed = 20240611ULL;

  // solve
  bool export_matrices = false;
  int sample_modes = 1;  // eigenfunctions written on the sample grid
  int sample_grid = 64;

  // sweep
  std::vector<double> a_grid{0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 5.0, 10.0, 20.0};
  std::vector<int> epsilons{1, 0, -1};
  int sweep_count = 40;

  // converge
  std::vector<int> N_list{8, 16, 32, 64};
  int num_eigenvalues = 4;
  std::vector<double> reference;  // empty: extrapolate from the sequence

  // adapt
  int initial_N = 4;
  double zeta = 0.6;
  int max_iterations = 15;
  long max_dofs = 300000;
  int target_index = 0;
  std::optional<double> lambda_ref;
  bool write_meshes = false;

  /// Throws std::invalid_argument describing the first problem found.
  void validate() const;

  PhysicalParams physical() const;
  SolverOptions solver() const;
  BoundarySpec boundary() const;
  RegionSpec regions() const;
  /// Mesh at resolution n (uses N when n <= 0).
  Mesh mesh(int n = 0) const;
};

/// JSON text with every field of the config.
std::string to_json(const RunConfig& config);
/// Unknown keys and malformed values throw std::invalid_argument.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);

struct SolveResult {
  Spectrum spectrum;
  long dof = 0;
  int elements = 0;
};

struct SweepRow {
  double a;
  int epsilon;
  int index;
  std::complex<double> lambda;
  Classification classification;
};

struct SweepSummary {
  int epsilon;
  std::optional<double> smallest_clean_a;  // smallest a with zero spurious among the computed set
  std::vector<std::pair<double, int>> spurious_by_a;  // (a, spurious count), -1 on failure
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepSummary> summary;
  std::vector<std::string> failures;
};

struct ConvergenceRow {
  int N;
  long dof;
  int index;  // 1-based among physical eigenvalues
  double lambda_h;
  double reference;
  double err;
};

struct ConvergenceRate {
  int index;
  double reference;
  bool extrapolated;
  double slope;
  double h_rate;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  std::vector<ConvergenceRate> rates;
  std::vector<std::string> warnings;
};

/// Each run_* writes its outputs (and config.json) into out_dir when it is
/// non-empty. `threads` bounds the number of concurrent independent solves.
SolveResult run_solve(const RunConfig& config, const std::string& out_dir = {});
SweepResult run_sweep(const RunConfig& config, const std::string& out_dir = {}, int threads = 1);
ConvergenceResult run_convergence(const RunConfig& config, const std::string& out_dir = {}, int threads = 1);
AdaptiveResult run_adapt(const RunConfig& config, const std::string& out_dir = {},
                         const AdaptiveObserver& observer = {});

/// Physical eigenvalues (real parts) from a uniform mesh, sorted ascending.
std::vector<double> physical_eigenvalues(const RunConfig& config, int N, int count);

/// Eigenfunction samples on a uniform n x n grid of cell centers over the
/// unit square; points outside the mesh are skipped.
/// Columns: `x,y,ux,uy,p` (real parts of the normalized eigenpair).
void write_samples_csv(std::ostream& os, const Mesh& mesh, int degree, const EigenPair& pair, int n);

void write_sweep_csv(std::ostream& os, const SweepResult& result);
void write_convergence_csv(std::ostream& os, const ConvergenceResult& result);
void write_rates_csv(std::ostream& os, const ConvergenceResult& result);

}  // namespace brinkman
