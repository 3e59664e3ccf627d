#include "brinkman/assembly.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

namespace brinkman {

SparseMatrix TripletList::consolidate() const {
  SparseMatrix m(rows_, cols_);
  m.setFromTriplets(entries_.begin(), entries_.end());
  m.makeCompressed();
  return m;
}

void PhysicalParams::validate() const {
  if (!(nu > 0.0)) throw std::invalid_argument("viscosity nu must be positive");
  for (double k : kappa_by_region)
    if (!(k >= 0.0)) throw std::invalid_argument("inverse permeability kappa must be >= 0");
  if (epsilon < -1 || epsilon > 1) throw std::invalid_argument("epsilon must be -1, 0 or 1");
  if (!(a >= 0.0)) throw std::invalid_argument("stabilization a must be >= 0");
  if (degree < 1 || degree > kMaxBasisDegree)
    throw std::invalid_argument("polynomial degree must be in 1.." + std::to_string(kMaxBasisDegree));
}

double PhysicalParams::kappa(const Mesh& mesh, int element) const {
  const int r = mesh.region(element);
  if (r < 0 || r >= static_cast<int>(kappa_by_region.size()))
    throw std::out_of_range("no kappa value for region " + std::to_string(r));
  return kappa_by_region[r];
}

namespace {

struct ElementGeometry {
  Eigen::MatrixXd phi;       // nk x nq
  Eigen::MatrixXd gx, gy;    // physical gradients, nk x nq
  Eigen::VectorXd weights;   // physical weights
};

// Physical gradients from reference ones.
void map_gradients(const AffineMap& map, const Eigen::MatrixXd& rx, const Eigen::MatrixXd& ry,
                   Eigen::MatrixXd& gx, Eigen::MatrixXd& gy) {
  const auto& jit = map.inverse_transpose;
  gx = jit(0, 0) * rx + jit(0, 1) * ry;
  gy = jit(1, 0) * rx + jit(1, 1) * ry;
}

// Basis data of one side of a facet at the facet quadrature points.
struct Trace {
  int element = -1;
  Eigen::MatrixXd phi;   // nk x nq
  Eigen::MatrixXd dn;    // normal derivative (grad phi . n), nk x nq
  Eigen::MatrixXd psi;   // pressure basis, np x nq
};

Trace facet_trace(const Mesh& mesh, int element, const std::vector<Point>& xq, const Point& n,
                  const LagrangeBasis& vb, const LagrangeBasis* pb) {
  const AffineMap map = geometric_map(mesh, element);
  std::vector<Point> ref(xq.size());
  for (std::size_t q = 0; q < xq.size(); ++q) ref[q] = map.to_reference(xq[q]);
  Trace tr;
  tr.element = element;
  tr.phi = vb.values(ref);
  const auto g = vb.gradients(ref);
  Eigen::MatrixXd gx, gy;
  map_gradients(map, g[0], g[1], gx, gy);
  tr.dn = n.x() * gx + n.y() * gy;
  if (pb) tr.psi = pb->values(ref);
  return tr;
}

std::vector<Point> facet_points(const Mesh& mesh, int f, const EdgeQuadrature& quad) {
  const auto& fc = mesh.facet(f);
  const Point& x0 = mesh.vertex(fc.vertices[0]);
  const Point& x1 = mesh.vertex(fc.vertices[1]);
  std::vector<Point> pts(quad.size());
  for (int q = 0; q < quad.size(); ++q) pts[q] = x0 + quad.points[q] * (x1 - x0);
  return pts;
}

void check_dofs(const Mesh& mesh, const DofMap& dofs) {
  if (dofs.num_elements() != mesh.num_elements())
    throw std::invalid_argument("dof map has " + std::to_string(dofs.num_elements()) +
                                " elements, mesh has " + std::to_string(mesh.num_elements()));
}

}  // namespace

void assemble_volume(const Mesh& mesh, const DofMap& dofs, const PhysicalParams& params, TripletList& A,
                     TripletList& B, TripletList& M, const VolumeTerms& terms) {
  check_dofs(mesh, dofs);
  const int k = dofs.degree();
  const LagrangeBasis vb(k);
  const LagrangeBasis pb(k - 1);
  const auto quad = triangle_quadrature(2 * k + 2);
  const Eigen::MatrixXd phi = vb.values(quad.points);
  const auto rgrad = vb.gradients(quad.points);
  const Eigen::MatrixXd psi = pb.values(quad.points);
  const Eigen::VectorXd ref_w = Eigen::Map<const Eigen::VectorXd>(quad.weights.data(), quad.size());
  const int nk = dofs.velocity_local();
  const int np = dofs.pressure_local();

  A.reserve(A.size() + static_cast<std::size_t>(mesh.num_elements()) * 2 * nk * nk);
  M.reserve(M.size() + static_cast<std::size_t>(mesh.num_elements()) * 2 * nk * nk);
  B.reserve(B.size() + static_cast<std::size_t>(mesh.num_elements()) * 2 * nk * np);

  Eigen::MatrixXd gx, gy;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const AffineMap map = geometric_map(mesh, e);
    map_gradients(map, rgrad[0], rgrad[1], gx, gy);
    const Eigen::VectorXd w = ref_w * std::abs(map.det);
    const Eigen::MatrixXd mass = phi * w.asDiagonal() * phi.transpose();
    const Eigen::MatrixXd stiff = gx * w.asDiagonal() * gx.transpose() + gy * w.asDiagonal() * gy.transpose();
    const double kappa = params.kappa(mesh, e);

    Eigen::MatrixXd a_loc = Eigen::MatrixXd::Zero(nk, nk);
    if (terms.viscous) a_loc += params.nu * stiff;
    if (terms.reaction) a_loc += kappa * mass;

    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < nk; ++i)
        for (int j = 0; j < nk; ++j) {
          const int row = dofs.velocity(e, c, j);
          const int col = dofs.velocity(e, c, i);
          if (terms.viscous || terms.reaction) A.add(row, col, a_loc(j, i));
          if (terms.mass) M.add(row, col, mass(j, i));
        }

    if (terms.divergence) {
      const Eigen::MatrixXd bx = -psi * w.asDiagonal() * gx.transpose();
      const Eigen::MatrixXd by = -psi * w.asDiagonal() * gy.transpose();
      for (int jp = 0; jp < np; ++jp)
        for (int i = 0; i < nk; ++i) {
          B.add(dofs.pressure(e, jp), dofs.velocity(e, 0, i), bx(jp, i));
          B.add(dofs.pressure(e, jp), dofs.velocity(e, 1, i), by(jp, i));
        }
    }
  }
}

void assemble_facet(const Mesh& mesh, const DofMap& dofs, const PhysicalParams& params, TripletList& A,
                    TripletList& B, const FacetTerms& terms) {
  check_dofs(mesh, dofs);
  const int k = dofs.degree();
  const LagrangeBasis vb(k);
  const LagrangeBasis pb(k - 1);
  const auto quad = edge_quadrature(2 * k + 2);
  const Eigen::VectorXd ref_w = Eigen::Map<const Eigen::VectorXd>(quad.weights.data(), quad.size());
  const int nk = dofs.velocity_local();
  const int np = dofs.pressure_local();
  const double nu = params.nu;
  const double eps = params.epsilon;

  for (int f = 0; f < mesh.num_facets(); ++f) {
    const Facet& fc = mesh.facet(f);
    if (fc.kind == FacetKind::Gamma2) continue;
    if (fc.elements[0] < 0) throw std::runtime_error("facet without adjacent element");
    const double hf = mesh.facet_length(f);
    const Point n = mesh.facet_normal(f);
    const auto xq = facet_points(mesh, f, quad);
    const Eigen::VectorXd w = ref_w * hf;

    const int sides = fc.is_boundary() ? 1 : 2;
    const double avg = fc.is_boundary() ? 1.0 : 0.5;
    std::array<Trace, 2> tr;
    for (int s = 0; s < sides; ++s) tr[s] = facet_trace(mesh, fc.elements[s], xq, n, vb, &pb);
    const std::array<double, 2> sign{1.0, -1.0};
    const double pen = params.penalty() * nu / hf;

    for (int t = 0; t < sides; ++t) {
      for (int s = 0; s < sides; ++s) {
        // loc(j, i) = a_h(phi_i^s e_c, phi_j^t e_c)
        Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(nk, nk);
        const Eigen::MatrixXd phit_w = tr[t].phi * w.asDiagonal();
        if (terms.penalty) loc += pen * sign[s] * sign[t] * phit_w * tr[s].phi.transpose();
        if (terms.consistency) loc -= nu * avg * sign[t] * phit_w * tr[s].dn.transpose();
        if (terms.adjoint && eps != 0.0)
          loc -= eps * nu * avg * sign[s] * (tr[t].dn * w.asDiagonal()) * tr[s].phi.transpose();
        for (int c = 0; c < 2; ++c)
          for (int i = 0; i < nk; ++i)
            for (int j = 0; j < nk; ++j)
              A.add(dofs.velocity(tr[t].element, c, j), dofs.velocity(tr[s].element, c, i), loc(j, i));
      }
    }

    if (terms.pressure) {
      // b_h(v, q) facet part: {q} [v . n]
      for (int sp = 0; sp < sides; ++sp)
        for (int t = 0; t < sides; ++t) {
          const Eigen::MatrixXd loc = avg * sign[t] * tr[sp].psi * w.asDiagonal() * tr[t].phi.transpose();
          for (int jp = 0; jp < np; ++jp)
            for (int j = 0; j < nk; ++j) {
              const int row = dofs.pressure(tr[sp].element, jp);
              B.add(row, dofs.velocity(tr[t].element, 0, j), loc(jp, j) * n.x());
              B.add(row, dofs.velocity(tr[t].element, 1, j), loc(jp, j) * n.y());
            }
        }
    }
  }
}

SystemMatrices assemble_system(const Mesh& mesh, const PhysicalParams& params) {
  params.validate();
  const DofMap dofs(mesh.num_elements(), params.degree);
  TripletList A(dofs.n_u(), dofs.n_u());
  TripletList B(dofs.n_p(), dofs.n_u());
  TripletList M(dofs.n_u(), dofs.n_u());
  assemble_volume(mesh, dofs, params, A, B, M);
  assemble_facet(mesh, dofs, params, A, B);

  SystemMatrices sys;
  sys.A = A.consolidate();
  sys.B = B.consolidate();
  sys.M = M.consolidate();
  sys.n_u = dofs.n_u();
  sys.n_p = dofs.n_p();

  if (!mesh.has_gamma2()) {
    const LagrangeBasis pb(params.degree - 1);
    const auto quad = triangle_quadrature(2 * params.degree);
    const Eigen::MatrixXd psi = pb.values(quad.points);
    const Eigen::VectorXd ref_w = Eigen::Map<const Eigen::VectorXd>(quad.weights.data(), quad.size());
    const Eigen::VectorXd integrals = psi * ref_w;  // per unit Jacobian
    sys.mean_constraint.setZero(dofs.n_p());
    for (int e = 0; e < mesh.num_elements(); ++e)
      for (int j = 0; j < dofs.pressure_local(); ++j)
        sys.mean_constraint(dofs.pressure(e, j)) = integrals(j) * 2.0 * mesh.area(e);
  }
  return sys;
}

namespace {

ColMatrix build_pencil(const SystemMatrices& sys, double mass_scale, bool include_constraint_blocks) {
  const int n = sys.dimension();
  std::vector<Triplet> t;
  t.reserve(sys.A.nonZeros() + 2 * sys.B.nonZeros() + sys.M.nonZeros() + 2 * sys.n_p);
  if (include_constraint_blocks) {
    for (int r = 0; r < sys.A.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(sys.A, r); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (int r = 0; r < sys.B.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(sys.B, r); it; ++it) {
        t.emplace_back(sys.n_u + it.row(), it.col(), it.value());
        t.emplace_back(it.col(), sys.n_u + it.row(), it.value());
      }
    if (sys.bordered()) {
      const int border = sys.n_u + sys.n_p;
      for (int j = 0; j < sys.n_p; ++j) {
        t.emplace_back(sys.n_u + j, border, sys.mean_constraint(j));
        t.emplace_back(border, sys.n_u + j, sys.mean_constraint(j));
      }
    }
  }
  if (mass_scale != 0.0)
    for (int r = 0; r < sys.M.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(sys.M, r); it; ++it)
        t.emplace_back(it.row(), it.col(), mass_scale * it.value());
  ColMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace

ColMatrix pencil_lhs(const SystemMatrices& sys) { return build_pencil(sys, 0.0, true); }

ColMatrix pencil_rhs(const SystemMatrices& sys) { return build_pencil(sys, 1.0, false); }

ColMatrix shifted_operator(const SystemMatrices& sys, double sigma) { return build_pencil(sys, -sigma, true); }

SparseMatrix dg_norm_matrix(const Mesh& mesh, const DofMap& dofs) {
  check_dofs(mesh, dofs);
  TripletList N(dofs.n_u(), dofs.n_u());
  const int k = dofs.degree();
  {
    const LagrangeBasis vb(k);
    const auto quad = triangle_quadrature(2 * k + 2);
    const Eigen::MatrixXd phi = vb.values(quad.points);
    const auto rgrad = vb.gradients(quad.points);
    const Eigen::VectorXd ref_w = Eigen::Map<const Eigen::VectorXd>(quad.weights.data(), quad.size());
    const int nk = dofs.velocity_local();
    Eigen::MatrixXd gx, gy;
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const AffineMap map = geometric_map(mesh, e);
      map_gradients(map, rgrad[0], rgrad[1], gx, gy);
      const Eigen::VectorXd w = ref_w * std::abs(map.det);
      const Eigen::MatrixXd loc = phi * w.asDiagonal() * phi.transpose() + gx * w.asDiagonal() * gx.transpose() +
                                  gy * w.asDiagonal() * gy.transpose();
      for (int c = 0; c < 2; ++c)
        for (int i = 0; i < nk; ++i)
          for (int j = 0; j < nk; ++j) N.add(dofs.velocity(e, c, j), dofs.velocity(e, c, i), loc(j, i));
    }
  }
  {
    const LagrangeBasis vb(k);
    const auto quad = edge_quadrature(2 * k + 2);
    const Eigen::VectorXd ref_w = Eigen::Map<const Eigen::VectorXd>(quad.weights.data(), quad.size());
    const int nk = dofs.velocity_local();
    for (int f = 0; f < mesh.num_facets(); ++f) {
      const Facet& fc = mesh.facet(f);
      const double hf = mesh.facet_length(f);
      const Point n = mesh.facet_normal(f);
      const auto xq = facet_points(mesh, f, quad);
      const Eigen::VectorXd w = ref_w * hf;
      const int sides = fc.is_boundary() ? 1 : 2;
      std::array<Trace, 2> tr;
      for (int s = 0; s < sides; ++s) tr[s] = facet_trace(mesh, fc.elements[s], xq, n, vb, nullptr);
      const std::array<double, 2> sign{1.0, -1.0};
      for (int t = 0; t < sides; ++t)
        for (int s = 0; s < sides; ++s) {
          const Eigen::MatrixXd loc = (sign[s] * sign[t] / hf) * tr[t].phi * w.asDiagonal() * tr[s].phi.transpose();
          for (int c = 0; c < 2; ++c)
            for (int i = 0; i < nk; ++i)
              for (int j = 0; j < nk; ++j)
                N.add(dofs.velocity(tr[t].element, c, j), dofs.velocity(tr[s].element, c, i), loc(j, i));
        }
    }
  }
  return N.consolidate();
}

double dg_norm(const Mesh& mesh, const DofMap& dofs, const Eigen::VectorXd& v) {
  if (v.size() != dofs.n_u())
    throw std::invalid_argument("dg_norm: vector length " + std::to_string(v.size()) + " != n_u " +
                                std::to_string(dofs.n_u()));
  const SparseMatrix N = dg_norm_matrix(mesh, dofs);
  return std::sqrt(std::max(0.0, v.dot(N * v)));
}

void write_matrix(std::ostream& os, const SparseMatrix& m) {
  const auto precision = os.precision();
  os << "%%matrix " << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  os << std::setprecision(17);
  for (int r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  os.precision(precision);
}

void write_matrix_file(const std::string& path, const SparseMatrix& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_matrix(os, m);
}

}  // namespace brinkman
