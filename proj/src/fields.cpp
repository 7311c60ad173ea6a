#include "eqflux/fields.hpp"

#include <cmath>
#include <stdexcept>

namespace eqflux {

ScalarField::ScalarField(const Mesh& mesh, int degree)
    : mesh_(&mesh), degree_(degree), basis_(make_scalar_basis(mesh.dim(), degree)),
      coeff_(Eigen::MatrixXd::Zero(mesh.num_elements(), basis_.size())) {}

Eigen::VectorXd ScalarField::values(int e, const Eigen::MatrixXd& ref_pts) const {
  return basis_.values(ref_pts) * coeff_.row(e).transpose();
}

Eigen::MatrixXd ScalarField::gradients(int e, const Eigen::MatrixXd& ref_pts) const {
  AffineMap map = affine_map(*mesh_, e);
  auto ref_grads = basis_.gradients(ref_pts);
  int d = mesh_->dim();
  Eigen::MatrixXd grad(ref_pts.rows(), d);
  for (int k = 0; k < d; ++k)
    grad.col(k) = ref_grads[static_cast<size_t>(k)] * coeff_.row(e).transpose();
  return grad * map.Jinv; // row_i = Jinv^T gradhat_i
}

Eigen::VectorXd ScalarField::laplacian(int e, const Eigen::MatrixXd& ref_pts) const {
  AffineMap map = affine_map(*mesh_, e);
  auto ref_hess = basis_.second_derivatives(ref_pts);
  int d = mesh_->dim();
  // Laplacian = sum_ij (Jinv Jinv^T)_ij d2/dxhat_i dxhat_j
  Eigen::MatrixXd c = map.Jinv * map.Jinv.transpose();
  Eigen::VectorXd lap = c(0, 0) * (ref_hess[0] * coeff_.row(e).transpose());
  if (d == 2) {
    lap += 2 * c(0, 1) * (ref_hess[1] * coeff_.row(e).transpose());
    lap += c(1, 1) * (ref_hess[2] * coeff_.row(e).transpose());
  }
  return lap;
}

Eigen::MatrixXd ScalarField::to_reference(int e, const Eigen::MatrixXd& phys_pts) const {
  AffineMap map = affine_map(*mesh_, e);
  Eigen::MatrixXd ref(phys_pts.rows(), phys_pts.cols());
  for (int i = 0; i < phys_pts.rows(); ++i)
    ref.row(i) = (map.Jinv * (phys_pts.row(i).transpose() - map.b)).transpose();
  return ref;
}

Eigen::VectorXd SourceTerm::values(const Mesh& mesh, int e, const Eigen::MatrixXd& ref_pts,
                                   const Eigen::MatrixXd& phys_pts) const {
  if (field_ != nullptr) {
    if (&field_->mesh() != &mesh)
      throw std::invalid_argument("SourceTerm: field lives on a different mesh");
    return field_->values(e, ref_pts);
  }
  if (!fn_)
    throw std::invalid_argument("SourceTerm: empty source");
  Eigen::VectorXd vals(phys_pts.rows());
  for (int q = 0; q < phys_pts.rows(); ++q)
    vals(q) = fn_(phys_pts.row(q).transpose());
  return vals;
}

ScalarField l2_project(const Mesh& mesh, int degree, const SourceTerm& f, int quad_degree) {
  ScalarField field(mesh, degree);
  const ScalarBasis& basis = field.basis();
  QuadratureRule rule = make_quadrature(mesh.dim(), std::max(quad_degree, 2 * degree));
  Eigen::MatrixXd vals = basis.values(rule.points);
  Eigen::MatrixXd mass = vals.transpose() * rule.weights.asDiagonal() * vals;
  Eigen::LLT<Eigen::MatrixXd> llt(mass);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    AffineMap map = affine_map(mesh, e);
    Eigen::MatrixXd phys(rule.points.rows(), mesh.dim());
    for (int q = 0; q < rule.points.rows(); ++q)
      phys.row(q) = (map.J * rule.points.row(q).transpose() + map.b).transpose();
    Eigen::VectorXd fvals = f.values(mesh, e, rule.points, phys);
    Eigen::VectorXd rhs = vals.transpose() * (rule.weights.asDiagonal() * fvals);
    field.coefficients().row(e) = llt.solve(rhs).transpose();
  }
  return field;
}

ScalarField l2_project(const Mesh& mesh, int degree, const ScalarFunction& f, int quad_degree) {
  return l2_project(mesh, degree, SourceTerm(f), quad_degree);
}

FluxField::FluxField(const Mesh& mesh, int degree) : mesh_(&mesh), degree_(degree) {
  bases_.reserve(static_cast<size_t>(mesh.num_elements()));
  for (int e = 0; e < mesh.num_elements(); ++e)
    bases_.emplace_back(mesh, e, degree);
  coeff_ = Eigen::MatrixXd::Zero(mesh.num_elements(), FluxBasis::space_dim(mesh.dim(), degree));
}

Eigen::MatrixXd FluxField::values(int e, const Eigen::MatrixXd& pts) const {
  int d = mesh_->dim();
  Eigen::MatrixXd vals(pts.rows(), d);
  for (int k = 0; k < d; ++k)
    vals.col(k) = basis(e).component_values(pts, k) * coeff_.row(e).transpose();
  return vals;
}

Eigen::VectorXd FluxField::divergence(int e, const Eigen::MatrixXd& pts) const {
  return basis(e).divergence_values(pts) * coeff_.row(e).transpose();
}

Eigen::VectorXd FluxField::normal_trace(int e, const Eigen::MatrixXd& pts,
                                        const Eigen::VectorXd& n) const {
  return basis(e).normal_values(pts, n) * coeff_.row(e).transpose();
}

Real max_normal_jump(const FluxField& v, int quad_degree) {
  const Mesh& mesh = v.mesh();
  Real jump = 0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (face.on_boundary)
      continue;
    PhysicalQuadrature fq = face_quadrature(mesh, f, quad_degree);
    Eigen::VectorXd n = face.normal.head(mesh.dim());
    Eigen::VectorXd a = v.normal_trace(face.owner, fq.points, n);
    Eigen::VectorXd b = v.normal_trace(face.neighbor, fq.points, n);
    jump = std::max(jump, (a - b).cwiseAbs().maxCoeff());
  }
  return jump;
}

Real max_trace_jump(const ScalarField& u, int quad_degree) {
  const Mesh& mesh = u.mesh();
  Real jump = 0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (face.on_boundary)
      continue;
    PhysicalQuadrature fq = face_quadrature(mesh, f, quad_degree);
    Eigen::VectorXd a = u.values(face.owner, u.to_reference(face.owner, fq.points));
    Eigen::VectorXd b = u.values(face.neighbor, u.to_reference(face.neighbor, fq.points));
    jump = std::max(jump, (a - b).cwiseAbs().maxCoeff());
  }
  return jump;
}

Real max_boundary_trace(const ScalarField& u, int quad_degree) {
  const Mesh& mesh = u.mesh();
  Real trace = 0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (!face.on_boundary)
      continue;
    PhysicalQuadrature fq = face_quadrature(mesh, f, quad_degree);
    Eigen::VectorXd a = u.values(face.owner, u.to_reference(face.owner, fq.points));
    trace = std::max(trace, a.cwiseAbs().maxCoeff());
  }
  return trace;
}

} // namespace eqflux
