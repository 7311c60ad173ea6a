#include "eqflux/fem.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <stdexcept>

#include "eqflux/quadrature.hpp"

namespace eqflux {

DofMap::DofMap(const Mesh& mesh, int degree)
    : degree_(degree), nodes_(lagrange_nodes(mesh.dim(), degree)) {
  if (degree < 1)
    throw std::invalid_argument("DofMap: need degree >= 1");
  int d = mesh.dim();
  int nloc = scalar_space_dim(d, degree);
  int nv = mesh.num_vertices();
  int nf = mesh.num_faces();
  int ne = mesh.num_elements();
  int per_face = degree - 1;
  int per_int = d == 1 ? degree - 1 : (degree - 1) * (degree - 2) / 2;

  num_dofs_ = d == 1 ? nv + ne * per_int : nv + nf * per_face + ne * per_int;
  element_dofs_.resize(ne, nloc);
  dirichlet_.assign(static_cast<size_t>(num_dofs_), false);

  for (int e = 0; e < ne; ++e) {
    int interior_seen = 0;
    for (int j = 0; j < nloc; ++j) {
      Eigen::RowVectorXi bary = nodes_.bary.row(j);
      int vertex_local = -1, zero_local = -1;
      int zeros = 0;
      for (int k = 0; k <= d; ++k) {
        if (bary(k) == degree)
          vertex_local = k;
        if (bary(k) == 0) {
          ++zeros;
          zero_local = k;
        }
      }
      int dof;
      if (vertex_local >= 0) {
        dof = mesh.elements()(e, vertex_local);
        if (mesh.vertex_on_boundary(dof))
          dirichlet_[static_cast<size_t>(dof)] = true;
      } else if (d == 2 && zeros == 1) {
        int f = mesh.element_face(e, zero_local);
        const Face& face = mesh.face(f);
        int k1 = (zero_local + 1) % 3, k2 = (zero_local + 2) % 3;
        int g1 = mesh.elements()(e, k1), g2 = mesh.elements()(e, k2);
        int steps = g1 < g2 ? bary(k2) : bary(k1);
        dof = nv + f * per_face + (steps - 1);
        if (face.on_boundary)
          dirichlet_[static_cast<size_t>(dof)] = true;
      } else {
        int base = d == 1 ? nv : nv + nf * per_face;
        dof = base + e * per_int + interior_seen++;
      }
      element_dofs_(e, j) = dof;
    }
  }

  ScalarBasis modal = make_scalar_basis(d, degree);
  Eigen::MatrixXd vand = modal.values(nodes_.points);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(vand);
  vinv_ = lu.solve(Eigen::MatrixXd::Identity(nloc, nloc));
  if (!((vand * vinv_ - Eigen::MatrixXd::Identity(nloc, nloc)).norm() < 1e-8 * nloc))
    throw std::runtime_error("DofMap: nodal Vandermonde is numerically singular");
}

FemSolution solve(const Mesh& mesh, const ProblemSpec& spec, int degree,
                  int source_quad_degree) {
  if (spec.dim != mesh.dim())
    throw std::invalid_argument("solve: problem and mesh dimension differ");
  if (!spec.f.valid())
    throw std::invalid_argument("solve: missing source term");
  int d = mesh.dim();
  int p = degree;
  if (source_quad_degree < 0)
    source_quad_degree = 2 * p + 4;

  DofMap dofs(mesh, p);
  int nloc = dofs.local_size();
  ScalarBasis modal = make_scalar_basis(d, p);

  QuadratureRule rule = make_quadrature(d, 2 * p + 2);
  Eigen::MatrixXd nodal_vals = modal.values(rule.points) * dofs.vandermonde_inv();
  auto modal_grads = modal.gradients(rule.points);
  std::array<Eigen::MatrixXd, 2> nodal_grads;
  for (int k = 0; k < d; ++k)
    nodal_grads[static_cast<size_t>(k)] = modal_grads[static_cast<size_t>(k)] * dofs.vandermonde_inv();

  QuadratureRule load_rule = make_quadrature(d, source_quad_degree);
  Eigen::MatrixXd load_vals = modal.values(load_rule.points) * dofs.vandermonde_inv();

  std::vector<int> free_index(static_cast<size_t>(dofs.num_dofs()), -1);
  int nfree = 0;
  for (int i = 0; i < dofs.num_dofs(); ++i)
    if (!dofs.dirichlet()[static_cast<size_t>(i)])
      free_index[static_cast<size_t>(i)] = nfree++;

  std::vector<Eigen::Triplet<Real>> triplets;
  triplets.reserve(static_cast<size_t>(mesh.num_elements() * nloc * nloc));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nfree);
  Real eps2 = spec.epsilon * spec.epsilon;
  Real kap2 = spec.kappa * spec.kappa;

  for (int e = 0; e < mesh.num_elements(); ++e) {
    AffineMap map = affine_map(mesh, e);
    // physical gradients of the nodal basis at quadrature points
    std::array<Eigen::MatrixXd, 2> phys;
    for (int k = 0; k < d; ++k) {
      phys[static_cast<size_t>(k)] = nodal_grads[0] * map.Jinv(0, k);
      for (int l = 1; l < d; ++l)
        phys[static_cast<size_t>(k)] += nodal_grads[static_cast<size_t>(l)] * map.Jinv(l, k);
    }
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nloc, nloc);
    for (int k = 0; k < d; ++k)
      local += eps2 * phys[static_cast<size_t>(k)].transpose() * rule.weights.asDiagonal() *
               phys[static_cast<size_t>(k)];
    local += kap2 * nodal_vals.transpose() * rule.weights.asDiagonal() * nodal_vals;
    local *= map.det;

    Eigen::MatrixXd lpts(load_rule.points.rows(), d);
    for (int q = 0; q < load_rule.points.rows(); ++q)
      lpts.row(q) = (map.J * load_rule.points.row(q).transpose() + map.b).transpose();
    Eigen::VectorXd fvals = spec.f.values(mesh, e, load_rule.points, lpts);
    Eigen::VectorXd local_rhs =
        map.det * load_vals.transpose() * (load_rule.weights.asDiagonal() * fvals);

    for (int i = 0; i < nloc; ++i) {
      int gi = free_index[static_cast<size_t>(dofs.element_dofs()(e, i))];
      if (gi < 0)
        continue;
      rhs(gi) += local_rhs(i);
      for (int j = 0; j < nloc; ++j) {
        int gj = free_index[static_cast<size_t>(dofs.element_dofs()(e, j))];
        if (gj >= 0)
          triplets.emplace_back(gi, gj, local(i, j));
      }
    }
  }

  Eigen::SparseMatrix<Real> A(nfree, nfree);
  A.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<Real>> ldlt(A);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("solve: sparse factorization failed");
  Eigen::VectorXd x = ldlt.solve(rhs);

  FemSolution sol{ScalarField(mesh, p), Eigen::VectorXd::Zero(dofs.num_dofs()), 0,
                  dofs.num_dofs(), nfree};
  Real bnorm = rhs.norm();
  sol.algebraic_residual = (A * x - rhs).norm() / (bnorm > 0 ? bnorm : Real(1));
  for (int i = 0; i < dofs.num_dofs(); ++i)
    if (free_index[static_cast<size_t>(i)] >= 0)
      sol.nodal(i) = x(free_index[static_cast<size_t>(i)]);

  for (int e = 0; e < mesh.num_elements(); ++e) {
    Eigen::VectorXd local(nloc);
    for (int j = 0; j < nloc; ++j)
      local(j) = sol.nodal(dofs.element_dofs()(e, j));
    sol.u.coefficients().row(e) = (dofs.vandermonde_inv() * local).transpose();
  }
  return sol;
}

Eigen::VectorXd element_energy_sq(const ScalarField& u, Real eps, Real kappa) {
  const Mesh& mesh = u.mesh();
  int d = mesh.dim();
  QuadratureRule rule = make_quadrature(d, 2 * u.degree());
  Eigen::VectorXd out(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    AffineMap map = affine_map(mesh, e);
    Eigen::VectorXd vals = u.values(e, rule.points);
    Eigen::MatrixXd grads = u.gradients(e, rule.points);
    Real acc = 0;
    for (int q = 0; q < rule.points.rows(); ++q)
      acc += rule.weights(q) * (eps * eps * grads.row(q).squaredNorm() +
                                kappa * kappa * vals(q) * vals(q));
    out(e) = acc * map.det;
  }
  return out;
}

Real energy_norm_sq(const ScalarField& u, Real eps, Real kappa) {
  return element_energy_sq(u, eps, kappa).sum();
}

ErrorReport error_energy_exact(const ScalarField& u, const ProblemSpec& spec) {
  if (!spec.exact_u || !spec.exact_grad)
    throw std::invalid_argument("error_energy_exact: case has no exact solution");
  const Mesh& mesh = u.mesh();
  int d = mesh.dim();
  int p = u.degree();
  QuadratureRule rule = make_quadrature(d, 2 * p + 8);
  Real eps2 = spec.epsilon * spec.epsilon;
  Real kap2 = spec.kappa * spec.kappa;

  ErrorReport report;
  report.mode = "exact";
  report.element_sq.resize(mesh.num_elements());
  Real source_pairing = 0; // (f, u_h)
  for (int e = 0; e < mesh.num_elements(); ++e) {
    AffineMap map = affine_map(mesh, e);
    Eigen::MatrixXd phys(rule.points.rows(), d);
    for (int q = 0; q < rule.points.rows(); ++q)
      phys.row(q) = (map.J * rule.points.row(q).transpose() + map.b).transpose();
    Eigen::VectorXd vals = u.values(e, rule.points);
    Eigen::MatrixXd grads = u.gradients(e, rule.points);
    Real acc = 0;
    for (int q = 0; q < rule.points.rows(); ++q) {
      Eigen::VectorXd x = phys.row(q).transpose();
      Real dv = spec.exact_u(x) - vals(q);
      Eigen::VectorXd dg = spec.exact_grad(x) - grads.row(q).transpose();
      acc += rule.weights(q) * (eps2 * dg.squaredNorm() + kap2 * dv * dv);
    }
    report.element_sq(e) = acc * map.det;
    if (spec.exact_energy_sq >= 0 && spec.f.valid()) {
      Eigen::VectorXd fvals = spec.f.values(mesh, e, rule.points, phys);
      source_pairing += map.det * (rule.weights.array() * fvals.array() * vals.array()).sum();
    }
  }

  if (spec.exact_energy_sq >= 0 && spec.f.valid()) {
    // |||u - u_h|||^2 = |||u|||^2 - 2 a(u,u_h) + |||u_h|||^2 with a(u,u_h) = (f,u_h)
    Real total = spec.exact_energy_sq - 2 * source_pairing +
                 energy_norm_sq(u, spec.epsilon, spec.kappa);
    report.total_sq = std::max(Real(0), total);
  } else {
    report.total_sq = report.element_sq.sum();
  }
  return report;
}

namespace {

// energy distance of u_h (coarse) to a refined solve, binned per coarse element
Eigen::VectorXd distance_to_reference(const ScalarField& u, const ProblemSpec& spec,
                                      const Mesh& fine, const std::vector<int>& parent,
                                      const ScalarField& uref) {
  const Mesh& coarse = u.mesh();
  int d = coarse.dim();
  QuadratureRule rule = make_quadrature(d, 2 * uref.degree() + 2);
  Real eps2 = spec.epsilon * spec.epsilon;
  Real kap2 = spec.kappa * spec.kappa;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(coarse.num_elements());
  for (int ef = 0; ef < fine.num_elements(); ++ef) {
    int ec = parent[static_cast<size_t>(ef)];
    AffineMap map = affine_map(fine, ef);
    Eigen::MatrixXd phys(rule.points.rows(), d);
    for (int q = 0; q < rule.points.rows(); ++q)
      phys.row(q) = (map.J * rule.points.row(q).transpose() + map.b).transpose();
    Eigen::MatrixXd coarse_ref = u.to_reference(ec, phys);
    Eigen::VectorXd vals_h = u.values(ec, coarse_ref);
    Eigen::MatrixXd grads_h = u.gradients(ec, coarse_ref);
    Eigen::VectorXd vals_r = uref.values(ef, rule.points);
    Eigen::MatrixXd grads_r = uref.gradients(ef, rule.points);
    Real acc = 0;
    for (int q = 0; q < rule.points.rows(); ++q) {
      Real dv = vals_r(q) - vals_h(q);
      acc += rule.weights(q) *
             (eps2 * (grads_r.row(q) - grads_h.row(q)).squaredNorm() + kap2 * dv * dv);
    }
    out(ec) += acc * map.det;
  }
  return out;
}

} // namespace

ErrorReport error_energy_reference(const ScalarField& u, const ProblemSpec& spec) {
  if (spec.f.polynomial())
    throw std::invalid_argument(
        "error_energy_reference: polynomial sources are tied to the coarse mesh");
  RefinedMesh level1 = refine_uniform(u.mesh());
  RefinedMesh level2 = refine_uniform(level1.mesh);
  std::vector<int> parent2(level2.parent.size());
  for (size_t i = 0; i < parent2.size(); ++i)
    parent2[i] = level1.parent[static_cast<size_t>(level2.parent[i])];

  FemSolution ref1 = solve(level1.mesh, spec, u.degree() + 1);
  FemSolution ref2 = solve(level2.mesh, spec, u.degree() + 1);

  Eigen::VectorXd err1 = distance_to_reference(u, spec, level1.mesh, level1.parent, ref1.u);
  Eigen::VectorXd err2 = distance_to_reference(u, spec, level2.mesh, parent2, ref2.u);

  ErrorReport report;
  report.mode = "reference";
  report.element_sq = err2;
  report.total_sq = err2.sum();
  report.bias = std::abs(err2.sum() - err1.sum());
  return report;
}

} // namespace eqflux
