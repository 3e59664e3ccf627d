#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/LU>

#include "brinkman/femspace.hpp"

namespace brinkman {

namespace {

void check_basis_degree(int k) {
  if (k < 0 || k > kMaxBasisDegree)
    throw std::invalid_argument("basis degree " + std::to_string(k) + " not supported (0.." +
                                std::to_string(kMaxBasisDegree) + ")");
}

std::vector<Point> lagrange_nodes(int k) {
  if (k == 0) return {Point(1.0 / 3.0, 1.0 / 3.0)};
  std::vector<Point> nodes{Point(0, 0), Point(1, 0), Point(0, 1)};
  const double h = 1.0 / k;
  // edges in local order: opposite vertex 0, 1, 2 -> (1,2), (2,0), (0,1)
  const std::array<std::array<int, 2>, 3> edges{{{1, 2}, {2, 0}, {0, 1}}};
  for (const auto& e : edges)
    for (int i = 1; i < k; ++i) nodes.push_back(nodes[e[0]] + (nodes[e[1]] - nodes[e[0]]) * (i * h));
  for (int j = 1; j < k; ++j)
    for (int i = 1; i + j < k; ++i) nodes.emplace_back(i * h, j * h);
  return nodes;
}

}  // namespace

LagrangeBasis::LagrangeBasis(int degree) : degree_(degree) {
  check_basis_degree(degree);
  nodes_ = lagrange_nodes(degree);
  for (const auto& n : nodes_) {
    const int i1 = static_cast<int>(std::lround(n.x() * degree));
    const int i2 = static_cast<int>(std::lround(n.y() * degree));
    multi_.push_back({degree - i1 - i2, i1, i2});
  }
}

LagrangeBasis::Factors LagrangeBasis::factors(int i, const Point& p) const {
  const double lambda[3] = {1.0 - p.x() - p.y(), p.x(), p.y()};
  Factors out;
  for (int c = 0; c < 3; ++c) {
    double f = 1.0, df = 0.0, ddf = 0.0;
    for (int s = 0; s < multi_[i][c]; ++s) {
      const double g = (degree_ * lambda[c] - s) / (s + 1);
      const double dg = static_cast<double>(degree_) / (s + 1);
      ddf = ddf * g + 2.0 * df * dg;
      df = df * g + f * dg;
      f *= g;
    }
    out.f[c][0] = f;
    out.f[c][1] = df;
    out.f[c][2] = ddf;
  }
  return out;
}

void LagrangeBasis::values_at(const Point& p, Eigen::Ref<Eigen::VectorXd> out) const {
  for (int i = 0; i < size(); ++i) {
    const Factors r = factors(i, p);
    out(i) = r.f[0][0] * r.f[1][0] * r.f[2][0];
  }
}

void LagrangeBasis::gradients_at(const Point& p, Eigen::Ref<Eigen::VectorXd> dx,
                                 Eigen::Ref<Eigen::VectorXd> dy) const {
  for (int i = 0; i < size(); ++i) {
    const auto [a, b, c] = factors(i, p).f;
    dx(i) = (-a[1] * b[0] + a[0] * b[1]) * c[0];
    dy(i) = (-a[1] * c[0] + a[0] * c[1]) * b[0];
  }
}

Eigen::MatrixXd LagrangeBasis::values(const std::vector<Point>& pts) const {
  Eigen::MatrixXd out(size(), pts.size());
  for (std::size_t q = 0; q < pts.size(); ++q) values_at(pts[q], out.col(q));
  return out;
}

std::array<Eigen::MatrixXd, 2> LagrangeBasis::gradients(const std::vector<Point>& pts) const {
  std::array<Eigen::MatrixXd, 2> out{Eigen::MatrixXd(size(), pts.size()), Eigen::MatrixXd(size(), pts.size())};
  for (std::size_t q = 0; q < pts.size(); ++q) gradients_at(pts[q], out[0].col(q), out[1].col(q));
  return out;
}

std::array<Eigen::MatrixXd, 3> LagrangeBasis::hessians(const std::vector<Point>& pts) const {
  const int n = size();
  std::array<Eigen::MatrixXd, 3> out;
  for (auto& m : out) m.resize(n, pts.size());
  for (std::size_t q = 0; q < pts.size(); ++q)
    for (int i = 0; i < n; ++i) {
      const auto [a, b, c] = factors(i, pts[q]).f;
      out[0](i, q) = (a[2] * b[0] - 2.0 * a[1] * b[1] + a[0] * b[2]) * c[0];
      out[1](i, q) = a[2] * b[0] * c[0] - a[1] * b[1] * c[0] - a[1] * b[0] * c[1] + a[0] * b[1] * c[1];
      out[2](i, q) = (a[2] * c[0] - 2.0 * a[1] * c[1] + a[0] * c[2]) * b[0];
    }
  return out;
}

Eigen::MatrixXd eval_basis(int k, const std::vector<Point>& pts) { return LagrangeBasis(k).values(pts); }

std::array<Eigen::MatrixXd, 2> eval_basis_grad(int k, const std::vector<Point>& pts) {
  return LagrangeBasis(k).gradients(pts);
}

AffineMap geometric_map(const Mesh& mesh, int element) {
  if (element < 0 || element >= mesh.num_elements()) throw std::out_of_range("geometric_map: bad element id");
  const auto& t = mesh.triangle(element);
  AffineMap map;
  map.origin = mesh.vertex(t[0]);
  map.jacobian.col(0) = mesh.vertex(t[1]) - map.origin;
  map.jacobian.col(1) = mesh.vertex(t[2]) - map.origin;
  map.det = map.jacobian.determinant();
  const double scale = map.jacobian.cwiseAbs().maxCoeff();
  if (!(std::abs(map.det) > 1e-14 * scale * scale))
    throw std::invalid_argument("geometric_map: degenerate element " + std::to_string(element));
  map.inverse = map.jacobian.inverse();
  map.inverse_transpose = map.inverse.transpose();
  return map;
}

DofMap::DofMap(int num_elements, int degree)
    : num_elements_(num_elements), degree_(degree), vel_local_(dim_pk(degree)), pres_local_(dim_pk(degree - 1)) {
  if (degree < 1 || degree > kMaxBasisDegree)
    throw std::invalid_argument("velocity degree must be in 1.." + std::to_string(kMaxBasisDegree));
  if (num_elements < 0) throw std::invalid_argument("negative element count");
}

}  // namespace brinkman
