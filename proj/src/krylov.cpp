#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/UmfPackSupport>

#include "brinkman/eigensolver.hpp"
#include "eigen_internal.hpp"

namespace brinkman {

namespace {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// Reduced operator C u = [(L - sigma R)^{-1} [M u; 0]]_u. Its range lies in
// the discrete kernel of the constraint rows, which is M-orthogonal to its
// null space, so the infinite eigenvalues of the pencil never enter the
// Krylov space in exact arithmetic.
class ShiftInvert {
public:
  ShiftInvert(const Pencil& pencil, double sigma) : pencil_(pencil), sigma_(sigma) {
    const int n = pencil.dimension();
    const int nu = pencil.n_u();
    const auto& z = pencil.border_null;
    bordered_ = z.size() == n - 1 && z.head(nu).isZero(0.0) && z.tail(n - 1 - nu).cwiseAbs().maxCoeff() > 0.0;
    // index map into the factorized system: the border and one pinned
    // unknown on the support of z are removed
    map_.assign(n, -1);
    int next = 0;
    if (bordered_) {
      z.tail(n - 1 - nu).cwiseAbs().maxCoeff(&pin_);
      pin_ += nu;
      border_ = Eigen::VectorXd(pencil.L.col(n - 1)).head(n - 1);
      border_z_ = border_.dot(z);
      if (border_z_ == 0.0) bordered_ = false;
    }
    for (int i = 0; i < n; ++i)
      if (!bordered_ || (i != pin_ && i != n - 1)) map_[i] = next++;
    reduced_ = next;

    std::vector<Eigen::Triplet<double, int>> t;
    t.reserve(pencil.L.nonZeros() + pencil.M.nonZeros());
    for (int c = 0; c < pencil.L.outerSize(); ++c)
      for (ColMatrix::InnerIterator it(pencil.L, c); it; ++it)
        if (map_[it.row()] >= 0 && map_[it.col()] >= 0) t.emplace_back(map_[it.row()], map_[it.col()], it.value());
    for (int c = 0; c < pencil.M.outerSize(); ++c)
      for (ColMatrix::InnerIterator it(pencil.M, c); it; ++it)
        t.emplace_back(map_[it.row()], map_[it.col()], -sigma * it.value());
    shifted_.resize(reduced_, reduced_);
    shifted_.setFromTriplets(t.begin(), t.end());
    shifted_.makeCompressed();
    lu_.umfpackControl()(UMFPACK_STRATEGY) = UMFPACK_STRATEGY_SYMMETRIC;
    lu_.compute(shifted_);
    if (lu_.info() != Eigen::Success) throw SingularShiftError(sigma);
  }

  /// Full solutions (L - sigma R)^{-1} [M u; 0] for the columns of u.
  Eigen::MatrixXd solve_full(const Eigen::MatrixXd& u) {
    const int n = pencil_.dimension();
    const int nu = pencil_.n_u();
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(reduced_, u.cols());
    // velocity unknowns keep their positions in the reduced numbering
    rhs.topRows(nu) = pencil_.M * u;
    const Eigen::MatrixXd sol = lu_.solve(rhs);
    applications_ += static_cast<int>(u.cols());
    if (!sol.allFinite()) throw SingularShiftError(sigma_);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, u.cols());
    for (int i = 0; i < n; ++i)
      if (map_[i] >= 0) out.row(i) = sol.row(map_[i]);
    if (bordered_) {
      // restore c^T x = 0 along z; the multiplier is zero because the
      // right-hand side vanishes outside the velocity block
      for (Eigen::Index c = 0; c < u.cols(); ++c) {
        const double alpha = -border_.dot(out.col(c).head(n - 1)) / border_z_;
        out.col(c).head(n - 1) += alpha * pencil_.border_null;
      }
    }
    return out;
  }

  CVec solve_full(const CVec& u) {
    if (u.imag().isZero(0.0)) return solve_full(Eigen::MatrixXd(u.real())).col(0).cast<cplx>();
    Eigen::MatrixXd parts(u.size(), 2);
    parts.col(0) = u.real();
    parts.col(1) = u.imag();
    const Eigen::MatrixXd sol = solve_full(parts);
    CVec out(sol.rows());
    out.real() = sol.col(0);
    out.imag() = sol.col(1);
    return out;
  }

  CVec apply(const CVec& u) { return solve_full(u).head(pencil_.n_u()); }

  Eigen::VectorXd apply_real(const Eigen::VectorXd& u) {
    return solve_full(Eigen::MatrixXd(u)).col(0).head(pencil_.n_u());
  }

  int applications() const { return applications_; }

private:
  const Pencil& pencil_;
  double sigma_;
  bool bordered_ = false;
  Eigen::Index pin_ = -1;
  Eigen::VectorXd border_;
  double border_z_ = 0.0;
  std::vector<int> map_;
  int reduced_ = 0;
  ColMatrix shifted_;  // referenced by the factorization
  Eigen::UmfPackLU<ColMatrix> lu_;
  int applications_ = 0;
};

class MassProduct {
public:
  explicit MassProduct(const ColMatrix& M) : M_(M) {}
  CVec apply(const CVec& x) const {
    CVec y(x.size());
    y.real() = M_ * x.real();
    y.imag() = M_ * x.imag();
    return y;
  }
  double norm(const CVec& x) const { return std::sqrt(std::max(0.0, std::real(x.dot(apply(x))))); }

private:
  const ColMatrix& M_;
};

// Two passes of classical Gram-Schmidt in the M inner product against the
// first `cols` columns of V. Returns the accumulated coefficients.
CVec orthogonalize(const MassProduct& mass, const CMat& V, int cols, CVec& w) {
  CVec h = CVec::Zero(cols);
  for (int pass = 0; pass < 2; ++pass) {
    const CVec Mw = mass.apply(w);
    const CVec c = V.leftCols(cols).adjoint() * Mw;
    w.noalias() -= V.leftCols(cols) * c;
    h += c;
  }
  return h;
}

// Givens rotation with real cosine: [c s; -conj(s) c] [f; g] = [r; 0].
void givens(cplx f, cplx g, double& c, cplx& s) {
  if (g == cplx(0.0)) {
    c = 1.0;
    s = 0.0;
    return;
  }
  if (f == cplx(0.0)) {
    c = 0.0;
    s = std::conj(g) / std::abs(g);
    return;
  }
  const double f1 = std::abs(f);
  const double g1 = std::abs(g);
  const double d = std::hypot(f1, g1);
  c = f1 / d;
  s = (f / f1) * std::conj(g) / d;
}

// x <- c x + s y, y <- c y - conj(s) x
template <class X, class Y>
void rotate(X&& x, Y&& y, double c, cplx s) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const cplx t = c * x(i) + s * y(i);
    y(i) = c * y(i) - std::conj(s) * x(i);
    x(i) = t;
  }
}

// Swaps diagonal entries k and k+1 of the upper triangular T, updating the
// Schur vectors Q.
void swap_adjacent(CMat& T, CMat& Q, int k) {
  const int n = static_cast<int>(T.rows());
  const cplx t11 = T(k, k);
  const cplx t22 = T(k + 1, k + 1);
  double c;
  cplx s;
  givens(T(k, k + 1), t22 - t11, c, s);
  if (k + 2 < n) rotate(T.row(k).tail(n - k - 2), T.row(k + 1).tail(n - k - 2), c, s);
  if (k > 0) rotate(T.col(k).head(k), T.col(k + 1).head(k), c, std::conj(s));
  T(k, k) = t22;
  T(k + 1, k + 1) = t11;
  rotate(Q.col(k), Q.col(k + 1), c, std::conj(s));
}

// Orders the Schur form by decreasing |T(i, i)|, ties keep their order.
void sort_schur(CMat& T, CMat& Q) {
  const int n = static_cast<int>(T.rows());
  for (int target = 0; target < n; ++target) {
    int best = target;
    for (int i = target + 1; i < n; ++i)
      if (std::abs(T(i, i)) > std::abs(T(best, best))) best = i;
    for (int i = best - 1; i >= target; --i) swap_adjacent(T, Q, i);
  }
}

// Eigenvector of an upper triangular matrix for diagonal entry i.
CVec triangular_eigenvector(const CMat& S, int i) {
  CVec z = CVec::Zero(S.rows());
  z(i) = 1.0;
  const double scale = std::max(S.cwiseAbs().maxCoeff(), 1e-300);
  for (int r = i - 1; r >= 0; --r) {
    cplx acc = 0.0;
    for (int c = r + 1; c <= i; ++c) acc += S(r, c) * z(c);
    cplx d = S(r, r) - S(i, i);
    if (std::abs(d) < 1e-14 * scale) d = 1e-14 * scale;
    z(r) = -acc / d;
  }
  return z / z.norm();
}

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

EigenPair make_pair(ShiftInvert& op, int nu, double sigma, cplx theta, const CVec& y) {
  const CVec w = op.solve_full(y);
  EigenPair p;
  p.lambda = sigma + 1.0 / theta;
  p.u = w.head(nu);
  p.p = w.tail(w.size() - nu);
  return p;
}

// Small problems: form C explicitly and use a dense eigensolver.
std::vector<EigenPair> explicit_solve(ShiftInvert& op, const Pencil& pencil, const SolverOptions& opts,
                                      SolverInfo& info) {
  const int nu = pencil.n_u();
  const Eigen::MatrixXd C = op.solve_full(Eigen::MatrixXd(Eigen::MatrixXd::Identity(nu, nu))).topRows(nu);
  Eigen::EigenSolver<Eigen::MatrixXd> es(C, true);
  if (es.info() != Eigen::Success) {
    info.converged = false;
    info.warning = "dense eigensolver failed on the reduced operator";
    return {};
  }
  const CVec theta = es.eigenvalues();
  const auto selected = detail::select_nearest(theta, opts.nev, opts.infinite_threshold);
  std::vector<EigenPair> pairs;
  for (int i : selected) pairs.push_back(make_pair(op, nu, opts.sigma, theta(i), es.eigenvectors().col(i)));
  info.subspace = nu;
  return pairs;
}

}  // namespace

Spectrum shift_invert_solve(const Pencil& pencil, const SolverOptions& opts) {
  if (opts.nev < 1) throw std::invalid_argument("shift_invert_solve: nev must be positive");
  if (pencil.L.rows() != pencil.L.cols() || pencil.M.rows() != pencil.M.cols() ||
      pencil.M.rows() > pencil.L.rows())
    throw std::invalid_argument("shift_invert_solve: inconsistent pencil dimensions");

  const int nu = pencil.n_u();
  const int m_default = std::max(2 * opts.nev + 10, 40);
  const int m_req = opts.ncv > 0 ? opts.ncv : m_default;

  SolverInfo info;
  info.sigma = opts.sigma;
  ShiftInvert op(pencil, opts.sigma);

  if (nu <= 2 * m_req + 200) {
    auto pairs = explicit_solve(op, pencil, opts, info);
    info.operator_applications = op.applications();
    return detail::finalize_spectrum(pencil, std::move(pairs), opts, std::move(info));
  }

  const int m = std::min(m_req, nu - 1);
  const int nev = std::min(opts.nev, m - 2);
  const MassProduct mass(pencil.M);
  std::mt19937_64 rng(opts.seed);

  CMat V = CMat::Zero(nu, m + 1);
  CMat H = CMat::Zero(m + 1, m);

  auto fresh_direction = [&](int cols, CVec& w) {
    // new start direction inside the range of C, M-orthogonal to V
    for (int attempt = 0; attempt < 5; ++attempt) {
      w = op.apply_real(random_vector(nu, rng)).cast<cplx>();
      const double before = mass.norm(w);
      if (cols > 0) orthogonalize(mass, V, cols, w);
      const double after = mass.norm(w);
      if (after > 1e-8 * before && after > 0.0) {
        w /= after;
        return true;
      }
    }
    return false;
  };

  {
    CVec v0;
    if (!fresh_direction(0, v0)) throw std::runtime_error("shift_invert_solve: operator has no range");
    V.col(0) = v0;
  }

  int k = 0;
  int active = m;
  CMat T, Q;
  Eigen::RowVectorXcd b;
  int nconv = 0;
  for (int restart = 0;; ++restart) {
    for (int j = k; j < active; ++j) {
      CVec w = op.apply(V.col(j));
      const double before = mass.norm(w);
      const CVec h = orthogonalize(mass, V, j + 1, w);
      H.col(j).head(j + 1) = h;
      const double beta = mass.norm(w);
      if (beta > 1e-12 * before && beta > 0.0) {
        H(j + 1, j) = beta;
        V.col(j + 1) = w / beta;
      } else {
        H(j + 1, j) = 0.0;
        CVec fresh;
        if (!fresh_direction(j + 1, fresh)) {
          active = j + 1;  // invariant space exhausted
          break;
        }
        V.col(j + 1) = fresh;
      }
    }

    Eigen::ComplexSchur<CMat> schur(H.topLeftCorner(active, active));
    T = schur.matrixT();
    Q = schur.matrixU();
    sort_schur(T, Q);
    b = H.row(active).head(active) * Q;

    const int wanted = std::min(nev, active);
    nconv = 0;
    const double theta_max = std::abs(T(0, 0));
    for (int i = 0; i < wanted; ++i) {
      const double t = std::abs(T(i, i));
      const bool negligible = t <= opts.infinite_threshold * theta_max;
      if (std::abs(b(i)) <= opts.tol * std::max(t, 1e-300) || negligible || active < m)
        ++nconv;
      else
        break;
    }
    info.restarts = restart;
    if (nconv >= wanted || restart >= opts.max_restarts || active < m) break;

    const int keep = std::min(std::max(nev + (m - nev) / 2, nconv + 1), m - 1);
    CMat Vk = V.leftCols(m) * Q.leftCols(keep);
    V.leftCols(keep) = Vk;
    V.col(keep) = V.col(m);
    H.setZero();
    H.topLeftCorner(keep, keep) = T.topLeftCorner(keep, keep);
    H.row(keep).head(keep) = b.head(keep);
    k = keep;
  }

  const int wanted = std::min(nev, active);
  if (nconv < wanted) {
    info.converged = false;
    info.warning = "Krylov-Schur reached the restart limit with " + std::to_string(nconv) + " of " +
                   std::to_string(wanted) + " Ritz pairs converged";
  }
  info.subspace = active;

  const CMat S = T.topLeftCorner(wanted, wanted);
  const CVec theta = S.diagonal();
  const auto selected = detail::select_nearest(theta, wanted, opts.infinite_threshold);
  const CMat basis = V.leftCols(active) * Q.leftCols(wanted);
  std::vector<EigenPair> pairs;
  for (int i : selected) {
    const CVec y = basis * triangular_eigenvector(S, i);
    pairs.push_back(make_pair(op, nu, opts.sigma, theta(i), y));
  }
  info.operator_applications = op.applications();
  return detail::finalize_spectrum(pencil, std::move(pairs), opts, std::move(info));
}

Spectrum shift_invert_solve(const SystemMatrices& sys, const SolverOptions& opts) {
  return shift_invert_solve(Pencil::from_system(sys), opts);
}

Spectrum solve_with_retry(const SystemMatrices& sys, const SolverOptions& opts, int retries) {
  const Pencil pencil = Pencil::from_system(sys);
  SolverOptions o = opts;
  for (int attempt = 0;; ++attempt) {
    try {
      Spectrum s = shift_invert_solve(pencil, o);
      if (attempt > 0) {
        if (!s.info.warning.empty()) s.info.warning += "; ";
        s.info.warning += "shift moved to " + std::to_string(o.sigma);
      }
      return s;
    } catch (const SingularShiftError&) {
      if (attempt >= retries) throw;
      o.sigma = opts.sigma + (attempt + 1) * 1e-3 * std::max(1.0, std::abs(opts.sigma));
    }
  }
}

}  // namespace brinkman
