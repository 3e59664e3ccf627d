#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "brinkman/femspace.hpp"

namespace brinkman {

namespace {

void check_degree(int degree) {
  if (degree < 0 || degree > kMaxQuadratureDegree)
    throw std::invalid_argument("quadrature degree " + std::to_string(degree) + " not supported (0.." +
                                std::to_string(kMaxQuadratureDegree) + ")");
}

// n-point Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    x[i] = -z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace

EdgeQuadrature edge_quadrature(int degree) {
  check_degree(degree);
  const int n = std::max(1, (degree + 2) / 2);
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  EdgeQuadrature rule;
  rule.degree = degree;
  for (int i = 0; i < n; ++i) {
    rule.points.push_back(0.5 * (x[i] + 1.0));
    rule.weights.push_back(0.5 * w[i]);
  }
  return rule;
}

TriangleQuadrature triangle_quadrature(int degree) {
  check_degree(degree);
  // Duffy collapse (s, t) -> (s (1 - t), t) with Jacobian (1 - t): the
  // integrand has degree <= degree in s and <= degree + 1 in t.
  const int ns = std::max(1, (degree + 2) / 2);
  const int nt = std::max(1, (degree + 3) / 2);
  std::vector<double> xs, ws, xt, wt;
  gauss_legendre(ns, xs, ws);
  gauss_legendre(nt, xt, wt);
  TriangleQuadrature rule;
  rule.degree = degree;
  for (int j = 0; j < nt; ++j) {
    const double t = 0.5 * (xt[j] + 1.0);
    for (int i = 0; i < ns; ++i) {
      const double s = 0.5 * (xs[i] + 1.0);
      rule.points.emplace_back(s * (1.0 - t), t);
      rule.weights.push_back(0.25 * ws[i] * wt[j] * (1.0 - t));
    }
  }
  return rule;
}

}  // namespace brinkman
