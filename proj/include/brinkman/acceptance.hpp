#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace brinkman {

enum class Verdict { Pass, Fail, Excluded };

const char* to_string(Verdict v);

struct CriterionResult {
  int id = 0;
  std::string title;
  Verdict verdict = Verdict::Fail;
  std::vector<std::string> details;  // one line per measured quantity
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::vector<int> criteria;  // empty: all
  int threads = 1;
  std::string out_dir;        // per-criterion CSVs when non-empty
};

/// Runs the selected criteria in order, printing one `PASS|FAIL|EXCLUDED`
/// line per criterion (plus indented details) to `log` as each finishes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream& log);

/// True when no selected criterion failed.
bool all_passed(const std::vector<CriterionResult>& results);

// Individual checks of the structural-property criterion; each returns the
// measured worst-case defect.
double property_symmetry_defect();
double property_conforming_defect();
double property_quadrature_defect();
double property_partition_of_unity_defect();
bool property_dorfler_exact(unsigned seed, int trials);
double property_mesh_identity_defect();
double property_estimator_decomposition_defect();

}  // namespace brinkman
