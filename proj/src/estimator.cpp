#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "brinkman/estimator.hpp"

namespace brinkman {

namespace {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;

CVec mul(const Eigen::MatrixXd& A, const CVec& x) {
  CVec y(A.rows());
  y.real() = A * x.real();
  y.imag() = A * x.imag();
  return y;
}

struct LocalCoefficients {
  CVec ux, uy, p;
};

class PairView {
public:
  PairView(const Mesh& mesh, const EigenPair& pair, int degree) : dofs_(mesh.num_elements(), degree), pair_(pair) {
    if (pair.u.size() != dofs_.n_u() || pair.p.size() < dofs_.n_p())
      throw std::invalid_argument("estimator: eigenpair does not match the mesh and degree");
  }
  const DofMap& dofs() const { return dofs_; }
  LocalCoefficients local(int e) const {
    const int nk = dofs_.velocity_local();
    const int np = dofs_.pressure_local();
    return {pair_.u.segment(dofs_.velocity(e, 0, 0), nk), pair_.u.segment(dofs_.velocity(e, 1, 0), nk),
            pair_.p.segment(dofs_.pressure(e, 0), np)};
  }

private:
  DofMap dofs_;
  const EigenPair& pair_;
};

// Traces of u, grad u and p of one element at physical points.
struct Trace {
  std::vector<std::array<cplx, 2>> u;
  std::vector<std::array<cplx, 4>> grad;  // (d_x u_x, d_y u_x, d_x u_y, d_y u_y)
  std::vector<cplx> p;
};

Trace element_trace(const Mesh& mesh, const PairView& view, const LagrangeBasis& vb, const LagrangeBasis& pb, int e,
                    const std::vector<Point>& xs) {
  const AffineMap map = geometric_map(mesh, e);
  const LocalCoefficients c = view.local(e);
  const int nk = vb.size();
  const int np = pb.size();
  Trace t;
  Eigen::VectorXd phi(nk), dx(nk), dy(nk), psi(np);
  for (const Point& x : xs) {
    const Point ref = map.to_reference(x);
    vb.values_at(ref, phi);
    vb.gradients_at(ref, dx, dy);
    pb.values_at(ref, psi);
    const Eigen::VectorXd gx = map.inverse_transpose(0, 0) * dx + map.inverse_transpose(0, 1) * dy;
    const Eigen::VectorXd gy = map.inverse_transpose(1, 0) * dx + map.inverse_transpose(1, 1) * dy;
    t.u.push_back({phi.cast<cplx>().dot(c.ux), phi.cast<cplx>().dot(c.uy)});
    t.grad.push_back({gx.cast<cplx>().dot(c.ux), gy.cast<cplx>().dot(c.ux),
                      gx.cast<cplx>().dot(c.uy), gy.cast<cplx>().dot(c.uy)});
    t.p.push_back(psi.cast<cplx>().dot(c.p));
  }
  return t;
}

std::array<cplx, 2> traction(const Trace& t, int q, double nu, const Point& n) {
  const auto& g = t.grad[q];
  return {nu * (g[0] * n.x() + g[1] * n.y()) - t.p[q] * n.x(), nu * (g[2] * n.x() + g[3] * n.y()) - t.p[q] * n.y()};
}

}  // namespace

IndicatorField::IndicatorField(int n)
    : volume(n, 0.0),
      divergence(n, 0.0),
      stress_jump(n, 0.0),
      gamma2(n, 0.0),
      velocity_jump(n, 0.0),
      gamma1(n, 0.0),
      total(n, 0.0) {}

double IndicatorField::eta() const { return std::sqrt(eta_sq); }

void IndicatorField::accumulate() {
  eta_sq = 0.0;
  for (int e = 0; e < size(); ++e) {
    total[e] = volume[e] + divergence[e] + stress_jump[e] + gamma2[e] + velocity_jump[e] + gamma1[e];
    eta_sq += total[e];
  }
}

namespace {

// Reference-element data shared by all volume evaluations.
struct VolumeContext {
  explicit VolumeContext(int k)
      : quad(triangle_quadrature(2 * k)),
        phi(LagrangeBasis(k).values(quad.points).transpose()),
        grad(LagrangeBasis(k).gradients(quad.points)),
        hess(LagrangeBasis(k).hessians(quad.points)),
        pgrad(LagrangeBasis(k - 1).gradients(quad.points)) {}
  TriangleQuadrature quad;
  Eigen::MatrixXd phi;
  std::array<Eigen::MatrixXd, 2> grad;
  std::array<Eigen::MatrixXd, 3> hess;
  std::array<Eigen::MatrixXd, 2> pgrad;
};

ElementResidual volume_terms(const Mesh& mesh, int e, const PairView& view, const VolumeContext& ctx,
                             cplx lambda, const PhysicalParams& params) {
  const AffineMap map = geometric_map(mesh, e);
  const Eigen::Matrix2d& G = map.inverse;
  const Eigen::Matrix2d S = G * G.transpose();
  const Eigen::Matrix2d& Git = map.inverse_transpose;
  const Eigen::MatrixXd lap =
      (S(0, 0) * ctx.hess[0] + 2.0 * S(0, 1) * ctx.hess[1] + S(1, 1) * ctx.hess[2]).transpose();
  const Eigen::MatrixXd dx = (Git(0, 0) * ctx.grad[0] + Git(0, 1) * ctx.grad[1]).transpose();
  const Eigen::MatrixXd dy = (Git(1, 0) * ctx.grad[0] + Git(1, 1) * ctx.grad[1]).transpose();
  const Eigen::MatrixXd pdx = (Git(0, 0) * ctx.pgrad[0] + Git(0, 1) * ctx.pgrad[1]).transpose();
  const Eigen::MatrixXd pdy = (Git(1, 0) * ctx.pgrad[0] + Git(1, 1) * ctx.pgrad[1]).transpose();

  const LocalCoefficients c = view.local(e);
  const cplx shift = lambda - params.kappa(mesh, e);
  const CVec rx = shift * mul(ctx.phi, c.ux) + params.nu * mul(lap, c.ux) - mul(pdx, c.p);
  const CVec ry = shift * mul(ctx.phi, c.uy) + params.nu * mul(lap, c.uy) - mul(pdy, c.p);
  const CVec div = mul(dx, c.ux) + mul(dy, c.uy);

  ElementResidual out;
  const double jac = std::abs(map.det);
  for (int q = 0; q < ctx.quad.size(); ++q) {
    const double w = ctx.quad.weights[q] * jac;
    out.volume += w * (std::norm(rx(q)) + std::norm(ry(q)));
    out.divergence += w * std::norm(div(q));
  }
  const double h = mesh.diameter(e);
  out.volume *= h * h;
  return out;
}

}  // namespace

ElementResidual element_residual(const Mesh& mesh, int e, const EigenPair& pair, const PhysicalParams& params) {
  if (e < 0 || e >= mesh.num_elements()) throw std::out_of_range("element_residual: bad element id");
  return volume_terms(mesh, e, PairView(mesh, pair, params.degree), VolumeContext(params.degree), pair.lambda,
                      params);
}

void facet_residuals(const Mesh& mesh, const EigenPair& pair, const PhysicalParams& params, IndicatorField& field) {
  if (field.size() != mesh.num_elements()) throw std::invalid_argument("facet_residuals: field size mismatch");
  const int k = params.degree;
  const PairView view(mesh, pair, k);
  const LagrangeBasis vb(k);
  const LagrangeBasis pb(k - 1);
  const auto quad = edge_quadrature(2 * k);
  const double nu = params.nu;

  std::vector<Point> xs(quad.size());
  for (int f = 0; f < mesh.num_facets(); ++f) {
    const Facet& F = mesh.facet(f);
    const Point& a = mesh.vertex(F.vertices[0]);
    const Point& b = mesh.vertex(F.vertices[1]);
    for (int q = 0; q < quad.size(); ++q) xs[q] = a + quad.points[q] * (b - a);
    const double hf = mesh.facet_length(f);
    const Point n = mesh.facet_normal(f);
    const int e0 = F.elements[0];
    const Trace t0 = element_trace(mesh, view, vb, pb, e0, xs);

    switch (F.kind) {
      case FacetKind::Interior: {
        const int e1 = F.elements[1];
        const Trace t1 = element_trace(mesh, view, vb, pb, e1, xs);
        double stress = 0.0, jump = 0.0;
        for (int q = 0; q < quad.size(); ++q) {
          const double w = quad.weights[q] * hf;
          const auto s0 = traction(t0, q, nu, n);
          const auto s1 = traction(t1, q, nu, n);
          stress += w * (std::norm(s0[0] - s1[0]) + std::norm(s0[1] - s1[1]));
          jump += w * (std::norm(t0.u[q][0] - t1.u[q][0]) + std::norm(t0.u[q][1] - t1.u[q][1]));
        }
        const double s = 0.5 * hf * stress;
        const double v = 0.5 / hf * nu * nu * jump;
        field.stress_jump[e0] += s;
        field.stress_jump[e1] += s;
        field.velocity_jump[e0] += v;
        field.velocity_jump[e1] += v;
        break;
      }
      case FacetKind::Gamma2: {
        double stress = 0.0;
        for (int q = 0; q < quad.size(); ++q) {
          const auto s0 = traction(t0, q, nu, n);
          stress += quad.weights[q] * hf * (std::norm(s0[0]) + std::norm(s0[1]));
        }
        field.gamma2[e0] += 0.5 * hf * stress;
        break;
      }
      case FacetKind::Gamma1: {
        double trace = 0.0;
        for (int q = 0; q < quad.size(); ++q)
          trace += quad.weights[q] * hf * (std::norm(t0.u[q][0]) + std::norm(t0.u[q][1]));
        field.gamma1[e0] += 0.5 / hf * nu * nu * trace;
        break;
      }
    }
  }
}

IndicatorField compute_eta(const Mesh& mesh, const EigenPair& pair, const PhysicalParams& params) {
  params.validate();
  IndicatorField field(mesh.num_elements());
  const PairView view(mesh, pair, params.degree);
  const VolumeContext ctx(params.degree);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementResidual r = volume_terms(mesh, e, view, ctx, pair.lambda, params);
    field.volume[e] = r.volume;
    field.divergence[e] = r.divergence;
  }
  facet_residuals(mesh, pair, params, field);
  field.accumulate();
  return field;
}

double effectivity(double lambda_ref, double lambda_h, double eta) {
  const double err = std::abs(lambda_h - lambda_ref);
  if (err == 0.0) return 0.0;
  if (eta == 0.0) return std::numeric_limits<double>::infinity();
  return err / (eta * eta);
}

void write_indicators_csv(std::ostream& os, const IndicatorField& field) {
  const auto old_precision = os.precision(17);
  os << "element_id,eta_sq_volume,eta_sq_div,eta_sq_stress_jump,eta_sq_gamma2,eta_sq_vel_jump,eta_sq_gamma1,"
        "eta_sq_total\n";
  for (int e = 0; e < field.size(); ++e)
    os << e << ',' << field.volume[e] << ',' << field.divergence[e] << ',' << field.stress_jump[e] << ','
       << field.gamma2[e] << ',' << field.velocity_jump[e] << ',' << field.gamma1[e] << ',' << field.total[e] << '\n';
  os.precision(old_precision);
}

}  // namespace brinkman
