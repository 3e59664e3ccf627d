#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "brinkman/acceptance.hpp"
#include "brinkman/driver.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  int threads = 1;
};

void add_common(CLI::App* cmd, Common& c, bool need_config) {
  auto* opt = cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  if (need_config) opt->required();
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--threads", c.threads, "concurrent independent solves")->check(CLI::PositiveNumber);
}

brinkman::RunConfig load(const Common& c, brinkman::Experiment e) {
  brinkman::RunConfig cfg = brinkman::load_config(c.config);
  cfg.experiment = e;
  cfg.validate();
  return cfg;
}

int solve(const Common& c) {
  const auto cfg = load(c, brinkman::Experiment::Solve);
  const auto res = brinkman::run_solve(cfg, c.out);
  std::cout << "elements " << res.elements << ", dof " << res.dof << ", sigma " << res.spectrum.info.sigma << '\n';
  brinkman::write_spectrum_csv(std::cout, res.spectrum);
  if (!res.spectrum.info.warning.empty()) std::cerr << "warning: " << res.spectrum.info.warning << '\n';
  return res.spectrum.info.converged ? 0 : 1;
}

int sweep(const Common& c) {
  const auto cfg = load(c, brinkman::Experiment::Sweep);
  const auto res = brinkman::run_sweep(cfg, c.out, c.threads);
  for (const auto& s : res.summary) {
    std::cout << "epsilon " << s.epsilon << ":";
    for (const auto& [a, n] : s.spurious_by_a) std::cout << " a=" << a << ":" << n;
    std::cout << "  smallest clean a: ";
    if (s.smallest_clean_a) std::cout << *s.smallest_clean_a << '\n';
    else std::cout << "none\n";
  }
  for (const auto& f : res.failures) std::cerr << "failed: " << f << '\n';
  return res.failures.empty() ? 0 : 1;
}

int converge(const Common& c) {
  const auto cfg = load(c, brinkman::Experiment::Converge);
  const auto res = brinkman::run_convergence(cfg, c.out, c.threads);
  brinkman::write_convergence_csv(std::cout, res);
  brinkman::write_rates_csv(std::cout, res);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

int adapt(const Common& c) {
  const auto cfg = load(c, brinkman::Experiment::Adapt);
  const auto res = brinkman::run_adapt(cfg, c.out);
  brinkman::write_records_csv(std::cout, res.records);
  std::cerr << "stopped: " << res.stop_reason << '\n';
  return res.solver_failed ? 1 : 0;
}

int check(const Common& c, const std::vector<int>& criteria) {
  brinkman::AcceptanceOptions opts;
  opts.criteria = criteria;
  opts.threads = c.threads;
  opts.out_dir = c.out;
  const auto results = brinkman::run_acceptance(opts, std::cout);
  int failed = 0;
  for (const auto& r : results) failed += r.verdict == brinkman::Verdict::Fail;
  std::cout << results.size() << " criteria, " << failed << " failed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IPDG solver for the Stokes-Brinkman eigenvalue problem"};
  app.require_subcommand(1);
  Common common;
  std::vector<int> criteria;

  auto* s = app.add_subcommand("solve", "single assembly and eigensolve with exports");
  auto* w = app.add_subcommand("sweep", "stabilization parameter sweep");
  auto* v = app.add_subcommand("converge", "uniform refinement convergence study");
  auto* a = app.add_subcommand("adapt", "adaptive solve-estimate-mark-refine loop");
  auto* k = app.add_subcommand("check", "acceptance suite");
  for (auto* cmd : {s, w, v, a}) add_common(cmd, common, true);
  add_common(k, common, false);
  k->add_option("--criteria", criteria, "criterion ids to run (default: all)")->delimiter(',');

  CLI11_PARSE(app, argc, argv);
  try {
    if (s->parsed()) return solve(common);
    if (w->parsed()) return sweep(common);
    if (v->parsed()) return converge(common);
    if (a->parsed()) return adapt(common);
    if (k->parsed()) return check(common, criteria);
  } catch (const std::invalid_argument& ex) {
    std::cerr << "invalid configuration: " << ex.what() << '\n';
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 2;
}
