#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "brinkman/acceptance.hpp"
#include "brinkman/driver.hpp"

namespace py = pybind11;
using namespace brinkman;

namespace {

py::dict spectrum_dict(const Spectrum& s) {
  std::vector<std::complex<double>> lambdas;
  std::vector<double> residuals;
  std::vector<std::string> classes;
  for (const auto& p : s.pairs) {
    lambdas.push_back(p.lambda);
    residuals.push_back(p.residual);
    classes.emplace_back(to_string(p.classification));
  }
  py::dict d;
  d["eigenvalues"] = lambdas;
  d["residuals"] = residuals;
  d["classification"] = classes;
  d["physical"] = s.physical_values();
  d["sigma"] = s.info.sigma;
  d["restarts"] = s.info.restarts;
  d["converged"] = s.info.converged;
  d["warning"] = s.info.warning;
  return d;
}

py::dict solve(const std::string& config_json, const std::string& out_dir) {
  const RunConfig c = config_from_json(config_json);
  SolveResult r;
  {
    py::gil_scoped_release release;
    r = run_solve(c, out_dir);
  }
  py::dict d = spectrum_dict(r.spectrum);
  d["dof"] = r.dof;
  d["elements"] = r.elements;
  if (!r.spectrum.pairs.empty()) {
    d["u0"] = Eigen::VectorXd(r.spectrum.pairs.front().u.real());
    d["p0"] = Eigen::VectorXd(r.spectrum.pairs.front().p.real());
  }
  return d;
}

py::list sweep(const std::string& config_json, const std::string& out_dir, int threads) {
  const RunConfig c = config_from_json(config_json);
  SweepResult r;
  {
    py::gil_scoped_release release;
    r = run_sweep(c, out_dir, threads);
  }
  py::list rows;
  for (const auto& row : r.rows) {
    py::dict d;
    d["a"] = row.a;
    d["epsilon"] = row.epsilon;
    d["index"] = row.index;
    d["lambda"] = row.lambda;
    d["classification"] = to_string(row.classification);
    rows.append(d);
  }
  return rows;
}

py::dict converge(const std::string& config_json, const std::string& out_dir, int threads) {
  const RunConfig c = config_from_json(config_json);
  ConvergenceResult r;
  {
    py::gil_scoped_release release;
    r = run_convergence(c, out_dir, threads);
  }
  py::list rows, rates;
  for (const auto& row : r.rows)
    rows.append(py::dict(py::arg("N") = row.N, py::arg("dof") = row.dof, py::arg("index") = row.index,
                         py::arg("lambda_h") = row.lambda_h, py::arg("reference") = row.reference,
                         py::arg("err") = row.err));
  for (const auto& rate : r.rates)
    rates.append(py::dict(py::arg("index") = rate.index, py::arg("reference") = rate.reference,
                          py::arg("extrapolated") = rate.extrapolated, py::arg("slope") = rate.slope,
                          py::arg("h_rate") = rate.h_rate));
  py::dict d;
  d["rows"] = rows;
  d["rates"] = rates;
  d["warnings"] = r.warnings;
  return d;
}

py::dict adapt(const std::string& config_json, const std::string& out_dir) {
  const RunConfig c = config_from_json(config_json);
  AdaptiveResult r;
  {
    py::gil_scoped_release release;
    r = run_adapt(c, out_dir);
  }
  py::list records;
  for (const auto& rec : r.records)
    records.append(py::dict(py::arg("iter") = rec.iter, py::arg("dof") = rec.dof, py::arg("elements") = rec.elements,
                            py::arg("lambda_h") = rec.lambda_h, py::arg("eta") = rec.eta, py::arg("err") = rec.err,
                            py::arg("eff") = rec.eff, py::arg("hot_lambda") = rec.hot_lambda,
                            py::arg("marked") = rec.marked));
  py::dict d;
  d["records"] = records;
  d["stop_reason"] = r.stop_reason;
  d["solver_failed"] = r.solver_failed;
  d["final_elements"] = r.final_mesh.num_elements();
  return d;
}

py::list check(const std::vector<int>& criteria, int threads) {
  AcceptanceOptions o;
  o.criteria = criteria;
  o.threads = threads;
  std::ostringstream log;
  std::vector<CriterionResult> results;
  {
    py::gil_scoped_release release;
    results = run_acceptance(o, log);
  }
  py::list out;
  for (const auto& r : results)
    out.append(py::dict(py::arg("id") = r.id, py::arg("title") = r.title, py::arg("verdict") = to_string(r.verdict),
                        py::arg("details") = r.details, py::arg("seconds") = r.seconds));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "IPDG Stokes-Brinkman eigenvalue solver";

  py::register_exception<NothingToMark>(m, "NothingToMark", PyExc_ValueError);
  py::register_exception<SingularShiftError>(m, "SingularShiftError", PyExc_RuntimeError);

  m.def("normalize_config", [](const std::string& text) { return to_json(config_from_json(text)); },
        py::arg("config_json"), "Parse, validate and re-serialize a config with every field filled in.");
  m.def("solve", &solve, py::arg("config_json"), py::arg("out_dir") = "");
  m.def("sweep", &sweep, py::arg("config_json"), py::arg("out_dir") = "", py::arg("threads") = 1);
  m.def("converge", &converge, py::arg("config_json"), py::arg("out_dir") = "", py::arg("threads") = 1);
  m.def("adapt", &adapt, py::arg("config_json"), py::arg("out_dir") = "");
  m.def("check", &check, py::arg("criteria") = std::vector<int>{}, py::arg("threads") = 1);

  m.def(
      "dorfler_mark", [](const std::vector<double>& eta, double zeta) { return dorfler_mark(eta, zeta); },
      py::arg("indicators"), py::arg("zeta"));
  m.def(
      "fit_rate",
      [](const std::vector<double>& err, const std::vector<double>& dof) {
        const RateFit f = fit_rate(err, dof);
        return py::dict(py::arg("slope") = f.slope, py::arg("intercept") = f.intercept, py::arg("h_rate") = f.h_rate);
      },
      py::arg("errors"), py::arg("dofs"));
}
