#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brinkman/assembly.hpp"
#include "brinkman/eigensolver.hpp"
#include "brinkman/estimator.hpp"
#include "brinkman/mesh.hpp"

namespace brinkman {

/// Thrown by dorfler_mark when every indicator is zero.
class NothingToMark : public std::runtime_error {
public:
  NothingToMark() : std::runtime_error("dorfler_mark: all indicators are zero") {}
};

/// Smallest set S with sum_S eta_T^2 >= zeta sum_T eta_T^2, chosen greedily
/// by descending indicator (ties by ascending id). Returned in selection order.
std::vector<int> dorfler_mark(std::span<const double> indicators, double zeta);

struct RateFit {
  double slope = 0.0;      // d log(err) / d log(dof)
  double intercept = 0.0;
  double h_rate = 0.0;     // -2 slope in 2D
};

/// Least-squares fit of log(err) against log(dof); needs >= 3 positive samples.
RateFit fit_rate(std::span<const double> errors, std::span<const double> dofs);

struct Extrapolation {
  double lambda = 0.0;
  double C = 0.0;
  double t = 0.0;
  int samples = 0;
  bool converged = false;
  std::string warning;
};

/// Fits lambda_h = lambda + C dof^{-t} (t > 0) to the finest (up to four)
/// samples; falls back to the finest value with a warning when the fit
/// fails. Samples are taken in the given order, finest last.
Extrapolation extrapolate_reference(std::span<const double> lambdas, std::span<const double> dofs);

struct AdaptiveRecord {
  int iter = 0;
  long dof = 0;  // velocity plus pressure unknowns
  int elements = 0;
  double lambda_h = 0.0;
  double eta = 0.0;
  double err = 0.0;  // NaN without a reference value
  double eff = 0.0;  // NaN without a reference value
  double hot_lambda = 0.0;  // (sum h_T^2)^{1/2} |lambda_ref - lambda_h|; NaN without a reference value
  double min_angle = 0.0;
  int marked = 0;
};

struct AdaptiveConfig {
  Mesh initial;
  PhysicalParams params;
  SolverOptions solver;
  int target_index = 0;   // among the physical eigenvalues of the first mesh
  double zeta = 0.6;      // values >= 0.999 mark every element
  int max_iterations = 15;
  long max_dofs = 300000;
  std::optional<double> lambda_ref;
};

/// State handed to the observer after marking.
struct AdaptiveStep {
  int iter;
  const Mesh& mesh;
  const EigenPair& pair;
  const IndicatorField& indicators;
  const std::vector<int>& marked;
};

using AdaptiveObserver = std::function<void(const AdaptiveStep&)>;

struct AdaptiveResult {
  std::vector<AdaptiveRecord> records;
  Mesh final_mesh;
  std::string stop_reason;
  bool solver_failed = false;
};

AdaptiveResult adaptive_loop(const AdaptiveConfig& config, const AdaptiveObserver& observer = {});

/// `iter,dof,elements,lambda_h,eta,err,eff`
void write_records_csv(std::ostream& os, const std::vector<AdaptiveRecord>& records);

}  // namespace brinkman
