#pragma once

#include <vector>

#include "brinkman/eigensolver.hpp"

namespace brinkman::detail {

/// Residuals, normalization, dropping of unconverged pairs, classification
/// and ordering shared by the iterative and dense solvers.
Spectrum finalize_spectrum(const Pencil& pencil, std::vector<EigenPair> pairs, const SolverOptions& opts,
                           SolverInfo info);

/// Indices of the `count` entries of largest |theta| whose magnitude is not
/// below opts.infinite_threshold times the largest one; ties by index.
std::vector<int> select_nearest(const Eigen::VectorXcd& theta, int count, double infinite_threshold);

}  // namespace brinkman::detail
