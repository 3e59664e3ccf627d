#include <cmath>
#include <stdexcept>
#include <string>

#include <lapacke.h>

#include "brinkman/eigensolver.hpp"
#include "eigen_internal.hpp"

namespace brinkman {

Spectrum dense_fallback_solve(const Pencil& pencil, const SolverOptions& opts) {
  const int n = pencil.dimension();
  const int nu = pencil.n_u();
  if (n > opts.dense_cap)
    throw std::length_error("dense_fallback_solve: dimension " + std::to_string(n) + " exceeds cap " +
                            std::to_string(opts.dense_cap));
  if (opts.nev < 1) throw std::invalid_argument("dense_fallback_solve: nev must be positive");

  Eigen::MatrixXd A = Eigen::MatrixXd(pencil.L);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  B.topLeftCorner(nu, nu) = Eigen::MatrixXd(pencil.M);
  Eigen::VectorXd alphar(n), alphai(n), beta(n);
  Eigen::MatrixXd vr(n, n);
  double vl_dummy = 0.0;
  const lapack_int status = LAPACKE_dggev3(LAPACK_COL_MAJOR, 'N', 'V', n, A.data(), n, B.data(), n,
                                          alphar.data(), alphai.data(), beta.data(), &vl_dummy, 1, vr.data(), n);
  if (status != 0) throw std::runtime_error("dense_fallback_solve: dggev3 failed with info " + std::to_string(status));

  // theta = 1 / (lambda - sigma) = beta / (alpha - sigma beta); infinite
  // eigenvalues have beta = 0 and so theta = 0.
  Eigen::VectorXcd theta(n);
  for (int j = 0; j < n; ++j) {
    const std::complex<double> alpha(alphar(j), alphai(j));
    const std::complex<double> denom = alpha - opts.sigma * beta(j);
    theta(j) = std::abs(denom) > 0.0 ? beta(j) / denom : std::complex<double>(0.0);
  }

  SolverInfo info;
  info.sigma = opts.sigma;
  info.subspace = n;
  std::vector<EigenPair> pairs;
  for (int j : detail::select_nearest(theta, opts.nev, opts.infinite_threshold)) {
    Eigen::VectorXcd x(n);
    if (alphai(j) == 0.0) {
      x = vr.col(j).cast<std::complex<double>>();
    } else if (alphai(j) > 0.0) {
      x.real() = vr.col(j);
      x.imag() = vr.col(j + 1);
    } else {
      x.real() = vr.col(j - 1);
      x.imag() = -vr.col(j);
    }
    EigenPair p;
    p.lambda = std::complex<double>(alphar(j), alphai(j)) / beta(j);
    p.u = x.head(nu);
    p.p = x.tail(n - nu);
    pairs.push_back(std::move(p));
  }
  return detail::finalize_spectrum(pencil, std::move(pairs), opts, std::move(info));
}

Spectrum dense_fallback_solve(const SystemMatrices& sys, const SolverOptions& opts) {
  return dense_fallback_solve(Pencil::from_system(sys), opts);
}

}  // namespace brinkman
