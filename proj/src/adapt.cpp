#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <Eigen/QR>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "brinkman/adapt.hpp"

namespace brinkman {

std::vector<int> dorfler_mark(std::span<const double> indicators, double zeta) {
  if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("dorfler_mark: zeta must lie in (0, 1)");
  double total = 0.0;
  for (double v : indicators) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("dorfler_mark: indicators must be finite and >= 0");
    total += v;
  }
  if (total == 0.0) throw NothingToMark();
  std::vector<int> order(indicators.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return indicators[a] > indicators[b]; });
  const double target = zeta * total;
  double acc = 0.0;
  std::vector<int> marked;
  for (int e : order) {
    marked.push_back(e);
    acc += indicators[e];
    if (acc >= target) break;
  }
  return marked;
}

RateFit fit_rate(std::span<const double> errors, std::span<const double> dofs) {
  if (errors.size() != dofs.size()) throw std::invalid_argument("fit_rate: size mismatch");
  if (errors.size() < 3) throw std::invalid_argument("fit_rate: at least 3 samples required");
  const int n = static_cast<int>(errors.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    if (!(errors[i] > 0.0) || !(dofs[i] > 0.0)) throw std::invalid_argument("fit_rate: samples must be positive");
    X(i, 0) = 1.0;
    X(i, 1) = std::log(dofs[i]);
    y(i) = std::log(errors[i]);
  }
  const Eigen::Vector2d beta = X.colPivHouseholderQr().solve(y);
  RateFit fit;
  fit.intercept = beta(0);
  fit.slope = beta(1);
  fit.h_rate = -2.0 * fit.slope;
  return fit;
}

namespace {

struct LinearFit {
  double lambda;
  double C;
  double residual;
};

// For fixed t, lambda and C enter linearly.
LinearFit fit_for_exponent(const std::vector<double>& lam, const std::vector<double>& dof, double t) {
  const int n = static_cast<int>(lam.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = std::pow(dof[i] / dof.back(), -t);  // scaled for conditioning
    y(i) = lam[i];
  }
  const Eigen::Vector2d beta = X.colPivHouseholderQr().solve(y);
  return {beta(0), beta(1) * std::pow(dof.back(), t), (X * beta - y).norm()};
}

constexpr double kMinExponent = 1e-2;
constexpr double kMaxExponent = 10.0;

}  // namespace

Extrapolation extrapolate_reference(std::span<const double> lambdas, std::span<const double> dofs) {
  if (lambdas.size() != dofs.size()) throw std::invalid_argument("extrapolate_reference: size mismatch");
  if (lambdas.size() < 3) throw std::invalid_argument("extrapolate_reference: at least 3 samples required");
  const std::size_t used = std::min<std::size_t>(4, lambdas.size());
  const std::vector<double> lam(lambdas.end() - used, lambdas.end());
  const std::vector<double> dof(dofs.end() - used, dofs.end());

  Extrapolation out;
  out.samples = static_cast<int>(used);
  out.lambda = lam.back();
  auto fail = [&](const std::string& why) {
    out.converged = false;
    out.warning = why + "; using the finest value";
    return out;
  };

  for (std::size_t i = 0; i + 1 < used; ++i)
    if (!(dof[i + 1] > dof[i])) return fail("dof sequence not increasing");
  double sign = 0.0;
  for (std::size_t i = 0; i + 1 < used; ++i) {
    const double d = lam[i + 1] - lam[i];
    if (d == 0.0) return fail("stagnant eigenvalue sequence");
    if (sign != 0.0 && (d > 0.0) != (sign > 0.0)) return fail("non-monotone eigenvalue sequence");
    sign = d;
  }

  double t = 0.0;
  if (used == 3) {
    // exact interpolation: solve the ratio equation in t
    const double ratio = (lam[0] - lam[1]) / (lam[1] - lam[2]);
    auto g = [&](double s) {
      const double a = std::pow(dof[0] / dof[2], -s), b = std::pow(dof[1] / dof[2], -s);
      return (a - b) - ratio * (b - 1.0);
    };
    double lo = kMinExponent, hi = kMaxExponent;
    const int grid = 400;
    bool bracketed = false;
    double prev = g(lo);
    for (int i = 1; i <= grid && !bracketed; ++i) {
      const double s = kMinExponent * std::pow(kMaxExponent / kMinExponent, static_cast<double>(i) / grid);
      const double v = g(s);
      if ((prev <= 0.0) != (v <= 0.0)) {
        hi = s;
        bracketed = true;
      } else {
        lo = s;
        prev = v;
      }
    }
    if (!bracketed) return fail("no exponent in (0.01, 10] matches the samples");
    std::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
    t = 0.5 * (root.first + root.second);
  } else {
    auto objective = [&](double log_s) { return fit_for_exponent(lam, dof, std::exp(log_s)).residual; };
    const double a = std::log(kMinExponent), b = std::log(kMaxExponent);
    const int grid = 200;
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i) {
      const double v = objective(a + (b - a) * i / grid);
      if (v < best_val) {
        best_val = v;
        best = i;
      }
    }
    const double lo = a + (b - a) * std::max(0, best - 1) / grid;
    const double hi = a + (b - a) * std::min(grid, best + 1) / grid;
    std::uintmax_t iters = 200;
    const auto res = boost::math::tools::brent_find_minima(objective, lo, hi, 40, iters);
    t = std::exp(res.first);
    if (best == 0 || best == grid) return fail("best exponent on the search boundary");
  }

  const LinearFit fit = fit_for_exponent(lam, dof, t);
  if (!std::isfinite(fit.lambda) || !(t > 0.0)) return fail("non-finite fit");
  out.lambda = fit.lambda;
  out.C = fit.C;
  out.t = t;
  out.converged = true;
  return out;
}

AdaptiveResult adaptive_loop(const AdaptiveConfig& config, const AdaptiveObserver& observer) {
  config.params.validate();
  if (!(config.zeta > 0.0 && config.zeta < 1.0)) throw std::invalid_argument("adaptive_loop: zeta must lie in (0, 1)");
  if (config.max_iterations < 1) throw std::invalid_argument("adaptive_loop: max_iterations must be positive");
  if (config.target_index < 0) throw std::invalid_argument("adaptive_loop: negative target index");

  AdaptiveResult result;
  Mesh mesh = config.initial;
  SolverOptions opts = config.solver;
  opts.nev = std::max(opts.nev, config.target_index + 4);
  std::optional<double> previous;

  for (int it = 0;; ++it) {
    const SystemMatrices sys = assemble_system(mesh, config.params);
    const long dof = static_cast<long>(sys.n_u) + sys.n_p;
    if (it > 0 && dof > config.max_dofs) {
      result.stop_reason = "dof budget reached";
      break;
    }
    Spectrum spectrum;
    try {
      spectrum = solve_with_retry(sys, opts);
    } catch (const std::exception& ex) {
      result.solver_failed = true;
      result.stop_reason = std::string("eigensolver failure: ") + ex.what();
      break;
    }
    std::vector<const EigenPair*> physical;
    for (const auto& p : spectrum.pairs)
      if (p.classification == Classification::Physical) physical.push_back(&p);
    if (physical.empty() || (!previous && static_cast<int>(physical.size()) <= config.target_index)) {
      result.solver_failed = true;
      result.stop_reason = "target eigenvalue not found";
      break;
    }
    const EigenPair* pair = nullptr;
    if (!previous) {
      pair = physical[config.target_index];
    } else {
      pair = *std::min_element(physical.begin(), physical.end(), [&](const EigenPair* a, const EigenPair* b) {
        return std::abs(a->lambda.real() - *previous) < std::abs(b->lambda.real() - *previous);
      });
    }
    previous = pair->lambda.real();

    const IndicatorField field = compute_eta(mesh, *pair, config.params);
    AdaptiveRecord rec;
    rec.iter = it;
    rec.dof = dof;
    rec.elements = mesh.num_elements();
    rec.lambda_h = pair->lambda.real();
    rec.eta = field.eta();
    rec.min_angle = mesh.min_angle();
    if (config.lambda_ref) {
      rec.err = std::abs(rec.lambda_h - *config.lambda_ref);
      rec.eff = effectivity(*config.lambda_ref, rec.lambda_h, rec.eta);
      double h_sq = 0.0;
      for (int e = 0; e < mesh.num_elements(); ++e) h_sq += mesh.diameter(e) * mesh.diameter(e);
      rec.hot_lambda = std::sqrt(h_sq) * rec.err;
    } else {
      rec.err = rec.eff = rec.hot_lambda = std::numeric_limits<double>::quiet_NaN();
    }

    if (it + 1 >= config.max_iterations) {
      result.records.push_back(rec);
      result.stop_reason = "iteration limit reached";
      break;
    }
    std::vector<int> marked;
    if (config.zeta >= 0.999) {
      marked.resize(mesh.num_elements());
      std::iota(marked.begin(), marked.end(), 0);
    } else {
      try {
        marked = dorfler_mark(field.total, config.zeta);
      } catch (const NothingToMark&) {
        result.records.push_back(rec);
        result.stop_reason = "zero estimator";
        break;
      }
    }
    rec.marked = static_cast<int>(marked.size());
    result.records.push_back(rec);
    if (observer) observer(AdaptiveStep{it, mesh, *pair, field, marked});
    mesh = refine(mesh, marked);
  }
  result.final_mesh = std::move(mesh);
  return result;
}

void write_records_csv(std::ostream& os, const std::vector<AdaptiveRecord>& records) {
  const auto old_precision = os.precision(17);
  os << "iter,dof,elements,lambda_h,eta,err,eff\n";
  for (const auto& r : records)
    os << r.iter << ',' << r.dof << ',' << r.elements << ',' << r.lambda_h << ',' << r.eta << ',' << r.err << ','
       << r.eff << '\n';
  os.precision(old_precision);
}

}  // namespace brinkman
