#pragma once

#include <complex>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "brinkman/assembly.hpp"

namespace brinkman {

enum class Classification { Physical, SpuriousComplex, SpuriousNonpositive };

const char* to_string(Classification c);

struct EigenPair {
  std::complex<double> lambda;
  Eigen::VectorXcd u;  // velocity coefficients (first n_u entries of x)
  Eigen::VectorXcd p;  // remaining entries (pressure, then multiplier if bordered)
  double residual = 0.0;  // ||L x - lambda R x||_2 / ||L x||_2
  Classification classification = Classification::Physical;
};

struct SolverInfo {
  double sigma = 0.0;
  int restarts = 0;
  int subspace = 0;
  int operator_applications = 0;
  bool converged = true;
  std::string warning;
};

/// Eigenpairs sorted by ascending real part, ties by ascending imaginary part.
struct Spectrum {
  std::vector<EigenPair> pairs;
  SolverInfo info;

  int count(Classification c) const;
  std::vector<double> physical_values() const;  // real parts of physical pairs, in order
};

struct SolverOptions {
  double sigma = 1.0;
  int nev = 10;
  int ncv = 0;                 // 0 selects max(2 nev + 10, 40)
  double tol = 1e-11;          // Ritz residual, relative to |theta|
  double tol_res = 1e-8;       // pencil residual required of returned pairs
  double tol_imag = 1e-6;
  double tol_pos = 0.0;
  int max_restarts = 400;
  double infinite_threshold = 1e-10;  // |theta| below this (relative to the largest) is discarded
  int dense_cap = 3000;
  unsigned long long seed = 20240611ULL;
};

/// Thrown when L - sigma R cannot be factorized.
class SingularShiftError : public std::runtime_error {
public:
  explicit SingularShiftError(double sigma)
      : std::runtime_error("factorization of L - sigma R failed at sigma = " + std::to_string(sigma)),
        sigma_(sigma) {}
  double sigma() const { return sigma_; }

private:
  double sigma_;
};

/// Pencil L x = lambda R x with R = diag(M, 0): only the leading n_u
/// unknowns carry mass. M must be symmetric positive definite.
struct Pencil {
  ColMatrix L;
  ColMatrix M;
  /// Set when the last row and column of L are a border [c; 0] that fixes
  /// the free direction z of the unbordered operator (z vanishes on the
  /// velocity block). Lets the shifted solves avoid factorizing the dense
  /// border. Empty otherwise.
  Eigen::VectorXd border_null;

  int n_u() const { return static_cast<int>(M.rows()); }
  int dimension() const { return static_cast<int>(L.rows()); }
  static Pencil from_system(const SystemMatrices& sys);
};

/// Shift-invert Krylov-Schur iteration on (L - sigma R)^{-1} R, returning
/// the nev eigenvalues closest to sigma. Infinite eigenvalues (theta ~ 0)
/// are discarded and residuals are measured in the original pencil.
Spectrum shift_invert_solve(const Pencil& pencil, const SolverOptions& opts = {});
Spectrum shift_invert_solve(const SystemMatrices& sys, const SolverOptions& opts = {});

/// shift_invert_solve, retrying with a perturbed shift when the
/// factorization at sigma fails. The shift actually used is in info.sigma.
Spectrum solve_with_retry(const SystemMatrices& sys, const SolverOptions& opts = {}, int retries = 3);

/// Dense QZ (LAPACK dggev3) reference; same selection, ordering and
/// classification rules. Throws std::length_error above opts.dense_cap.
Spectrum dense_fallback_solve(const Pencil& pencil, const SolverOptions& opts = {});
Spectrum dense_fallback_solve(const SystemMatrices& sys, const SolverOptions& opts = {});

Classification classify(std::complex<double> lambda, double tol_imag, double tol_pos);
/// Sets the classification of every pair.
void classify_spurious(std::vector<EigenPair>& pairs, double tol_imag, double tol_pos);

/// Scales so that u^H M u = 1 and the largest-magnitude velocity
/// coefficient is real positive. Throws std::invalid_argument when the
/// velocity part is zero.
EigenPair normalize_eigenpair(const EigenPair& pair, const SparseMatrix& M);
EigenPair normalize_eigenpair(const EigenPair& pair, const ColMatrix& M);

/// ||L x - lambda R x||_2 / ||L x||_2.
double pencil_residual(const Pencil& pencil, const EigenPair& pair);

/// `index,re_lambda,im_lambda,residual,classification`
void write_spectrum_csv(std::ostream& os, const Spectrum& spectrum);

}  // namespace brinkman
