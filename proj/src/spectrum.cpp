#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "brinkman/eigensolver.hpp"
#include "eigen_internal.hpp"

namespace brinkman {

const char* to_string(Classification c) {
  switch (c) {
    case Classification::Physical: return "physical";
    case Classification::SpuriousComplex: return "spurious-complex";
    case Classification::SpuriousNonpositive: return "spurious-nonpositive";
  }
  return "unknown";
}

int Spectrum::count(Classification c) const {
  return static_cast<int>(std::count_if(pairs.begin(), pairs.end(), [c](const EigenPair& p) {
    return p.classification == c;
  }));
}

std::vector<double> Spectrum::physical_values() const {
  std::vector<double> out;
  for (const auto& p : pairs)
    if (p.classification == Classification::Physical) out.push_back(p.lambda.real());
  return out;
}

Pencil Pencil::from_system(const SystemMatrices& sys) {
  Pencil p;
  p.L = pencil_lhs(sys);
  p.M = ColMatrix(sys.M);
  if (sys.bordered()) {
    p.border_null = Eigen::VectorXd::Zero(sys.n_u + sys.n_p);
    p.border_null.tail(sys.n_p).setOnes();
  }
  return p;
}

Classification classify(std::complex<double> lambda, double tol_imag, double tol_pos) {
  if (std::abs(lambda.imag()) > tol_imag * std::max(1.0, std::abs(lambda.real()))) return Classification::SpuriousComplex;
  if (lambda.real() <= tol_pos) return Classification::SpuriousNonpositive;
  return Classification::Physical;
}

void classify_spurious(std::vector<EigenPair>& pairs, double tol_imag, double tol_pos) {
  for (auto& p : pairs) p.classification = classify(p.lambda, tol_imag, tol_pos);
}

namespace {

template <class Mass>
EigenPair normalize_impl(const EigenPair& pair, const Mass& M) {
  if (pair.u.size() != M.rows()) throw std::invalid_argument("normalize_eigenpair: size mismatch");
  const Eigen::VectorXcd Mu = M.template cast<std::complex<double>>() * pair.u;
  const double mass = std::real(pair.u.dot(Mu));
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw std::invalid_argument("normalize_eigenpair: zero velocity component");
  Eigen::Index imax = 0;
  pair.u.cwiseAbs().maxCoeff(&imax);
  const std::complex<double> pivot = pair.u(imax);
  const std::complex<double> scale = std::conj(pivot) / (std::abs(pivot) * std::sqrt(mass));
  EigenPair out = pair;
  out.u *= scale;
  out.p *= scale;
  out.u(imax) = std::complex<double>(out.u(imax).real(), 0.0);
  return out;
}

}  // namespace

EigenPair normalize_eigenpair(const EigenPair& pair, const SparseMatrix& M) { return normalize_impl(pair, M); }
EigenPair normalize_eigenpair(const EigenPair& pair, const ColMatrix& M) { return normalize_impl(pair, M); }

double pencil_residual(const Pencil& pencil, const EigenPair& pair) {
  const int n = pencil.dimension();
  const int nu = pencil.n_u();
  Eigen::VectorXcd x(n);
  x.head(nu) = pair.u;
  x.tail(n - nu) = pair.p;
  const Eigen::VectorXcd Lx = pencil.L.cast<std::complex<double>>() * x;
  Eigen::VectorXcd r = Lx;
  r.head(nu) -= pair.lambda * (pencil.M.cast<std::complex<double>>() * pair.u);
  const double denom = Lx.norm();
  return denom > 0.0 ? r.norm() / denom : r.norm();
}

void write_spectrum_csv(std::ostream& os, const Spectrum& spectrum) {
  const auto old_precision = os.precision(17);
  os << "index,re_lambda,im_lambda,residual,classification\n";
  for (std::size_t i = 0; i < spectrum.pairs.size(); ++i) {
    const auto& p = spectrum.pairs[i];
    os << i << ',' << p.lambda.real() << ',' << p.lambda.imag() << ',' << p.residual << ','
       << to_string(p.classification) << '\n';
  }
  os.precision(old_precision);
}

namespace detail {

std::vector<int> select_nearest(const Eigen::VectorXcd& theta, int count, double infinite_threshold) {
  std::vector<int> idx;
  double largest = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (std::isfinite(std::abs(theta(i)))) largest = std::max(largest, std::abs(theta(i)));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double a = std::abs(theta(i));
    if (std::isfinite(a) && a > infinite_threshold * largest && a > 0.0) idx.push_back(static_cast<int>(i));
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return std::abs(theta(a)) > std::abs(theta(b)); });
  if (static_cast<int>(idx.size()) > count) idx.resize(count);
  return idx;
}

Spectrum finalize_spectrum(const Pencil& pencil, std::vector<EigenPair> pairs, const SolverOptions& opts,
                           SolverInfo info) {
  Spectrum s;
  int dropped = 0;
  for (auto& p : pairs) {
    EigenPair q;
    try {
      q = normalize_eigenpair(p, pencil.M);
    } catch (const std::invalid_argument&) {
      ++dropped;
      continue;
    }
    q.residual = pencil_residual(pencil, q);
    if (!(q.residual <= opts.tol_res)) {
      ++dropped;
      continue;
    }
    s.pairs.push_back(std::move(q));
  }
  if (dropped > 0) {
    info.converged = false;
    if (!info.warning.empty()) info.warning += "; ";
    info.warning += std::to_string(dropped) + " pair(s) above residual tolerance dropped";
  }
  classify_spurious(s.pairs, opts.tol_imag, opts.tol_pos);
  std::stable_sort(s.pairs.begin(), s.pairs.end(), [](const EigenPair& a, const EigenPair& b) {
    if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
    return a.lambda.imag() < b.lambda.imag();
  });
  s.info = std::move(info);
  return s;
}

}  // namespace detail

}  // namespace brinkman
