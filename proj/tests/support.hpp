#pragma once

#include <cmath>
#include <functional>

#include "brinkman/assembly.hpp"
#include "brinkman/eigensolver.hpp"
#include "brinkman/femspace.hpp"
#include "brinkman/mesh.hpp"

namespace testing {

using brinkman::Point;
using Field = std::function<double(const Point&)>;

inline brinkman::Mesh reference_triangle() {
  using brinkman::BoundaryTag;
  return brinkman::Mesh({Point(0, 0), Point(1, 0), Point(0, 1)}, {{0, 1, 2}}, {0},
                        {{0, 1, BoundaryTag::Gamma1}, {1, 2, BoundaryTag::Gamma1}, {2, 0, BoundaryTag::Gamma1}});
}

/// Nodal interpolant of (fx, fy) in the DG velocity space of degree k.
inline Eigen::VectorXd interpolate_velocity(const brinkman::Mesh& mesh, int k, const Field& fx, const Field& fy) {
  const brinkman::DofMap dm(mesh.num_elements(), k);
  const brinkman::LagrangeBasis vb(k);
  Eigen::VectorXd u(dm.n_u());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto map = brinkman::geometric_map(mesh, e);
    for (int i = 0; i < vb.size(); ++i) {
      const Point x = map.to_physical(vb.nodes()[i]);
      u[dm.velocity(e, 0, i)] = fx(x);
      u[dm.velocity(e, 1, i)] = fy(x);
    }
  }
  return u;
}

/// Nodal interpolant of q in the pressure space of velocity degree k.
inline Eigen::VectorXd interpolate_pressure(const brinkman::Mesh& mesh, int k, const Field& q) {
  const brinkman::DofMap dm(mesh.num_elements(), k);
  const brinkman::LagrangeBasis pb(k - 1);
  Eigen::VectorXd p(dm.n_p());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto map = brinkman::geometric_map(mesh, e);
    for (int j = 0; j < pb.size(); ++j) p[dm.pressure(e, j)] = q(map.to_physical(pb.nodes()[j]));
  }
  return p;
}

inline brinkman::EigenPair make_pair(const Eigen::VectorXd& u, const Eigen::VectorXd& p, double lambda) {
  brinkman::EigenPair pair;
  pair.lambda = lambda;
  pair.u = u.cast<std::complex<double>>();
  pair.p = p.cast<std::complex<double>>();
  return pair;
}

inline double bubble(const Point& x) { return x.x() * (1 - x.x()) * x.y() * (1 - x.y()); }

inline double relative(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace testing
