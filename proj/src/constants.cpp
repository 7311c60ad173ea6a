#include "eqflux/constants.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "eqflux/basis.hpp"
#include "eqflux/quadrature.hpp"

namespace eqflux {

namespace {
constexpr Real pi = std::numbers::pi_v<Real>;

Mesh reference_simplex_mesh(int dim) {
  if (dim == 1) {
    Eigen::MatrixXd coords(2, 1);
    coords << 0, 1;
    Eigen::MatrixXi elems(1, 2);
    elems << 0, 1;
    return Mesh(1, coords, elems);
  }
  Eigen::MatrixXd coords(3, 2);
  coords << 0, 0, 1, 0, 0, 1;
  Eigen::MatrixXi elems(1, 3);
  elems << 0, 1, 2;
  return Mesh(2, coords, elems);
}

Real largest_generalized_eigenvalue(const Eigen::MatrixXd& b, const Eigen::MatrixXd& m) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(b, m);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigen oracle: generalized eigensolver failed");
  return es.eigenvalues().maxCoeff();
}

} // namespace

Real trace_constant(Real theta, int dim) {
  if (theta < 1 || (dim != 1 && dim != 2 && dim != 3))
    throw std::invalid_argument("trace_constant: bad arguments");
  return std::sqrt(theta * (dim + 1) * (2 + dim / pi));
}

Real face_inverse_constant(int p, int dim, Real theta) {
  if (p < 0 || theta < 1)
    throw std::invalid_argument("face_inverse_constant: bad arguments");
  return std::sqrt(Real(dim + 1) * (p + 2) * (p + dim + 1) * theta);
}

Real div_inverse_constant(int p, int dim, Real theta) {
  if (p < 0 || theta < 1)
    throw std::invalid_argument("div_inverse_constant: bad arguments");
  Real growth = std::sqrt(Real(p) * (p + 1) * (p + 2) * (p + 3));
  return std::sqrt(Real(dim)) * theta * (std::sqrt(Real(5)) / 4) *
         std::pow(2 * std::sqrt(Real(2)), dim) * growth;
}

Real cp1_bound(int p) {
  if (p < 0)
    throw std::invalid_argument("cp1_bound: negative degree");
  return std::sqrt(Real(p - 1) * p * (p + 1) * (p + 2)) / std::sqrt(Real(2));
}

Real cp1_effective(int p) {
  if (p == 0)
    return 0; // derivatives of constants vanish
  return std::max(cp1_bound(p), eigen_oracle_inverse_constant(1, p, InverseKind::derivative));
}

Real cpd_bound(int p, int dim) {
  if (dim < 1 || dim > 3)
    throw std::invalid_argument("cpd_bound: dim must be 1, 2 or 3");
  return (std::sqrt(Real(5)) / 4) * std::pow(2 * std::sqrt(Real(2)), dim) * cp1_bound(p);
}

Real eigen_oracle_inverse_constant(int dim, int p, InverseKind kind) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("eigen_oracle_inverse_constant: dim must be 1 or 2");
  if (p < 0)
    throw std::invalid_argument("eigen_oracle_inverse_constant: negative degree");

  if (kind == InverseKind::derivative) {
    if (dim != 1)
      throw std::invalid_argument("eigen_oracle_inverse_constant: derivative kind is 1d");
    if (p == 0)
      return 0;
    ScalarBasis basis = make_scalar_basis(1, p);
    QuadratureRule rule = make_quadrature(1, 2 * p);
    Eigen::MatrixXd vals = basis.values(rule.points);
    Eigen::MatrixXd grads = basis.gradients(rule.points)[0];
    Eigen::MatrixXd m = vals.transpose() * rule.weights.asDiagonal() * vals;
    Eigen::MatrixXd b = grads.transpose() * rule.weights.asDiagonal() * grads;
    return std::sqrt(largest_generalized_eigenvalue(b, m));
  }

  Mesh ref = reference_simplex_mesh(dim);
  FluxBasis basis(ref, 0, p);
  Real h = diameter(ref, 0);
  int n = basis.size();

  PhysicalQuadrature eq = element_quadrature(ref, 0, 2 * p + 2);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < dim; ++k) {
    Eigen::MatrixXd comp = basis.component_values(eq.points, k);
    m += comp.transpose() * eq.weights.asDiagonal() * comp;
  }

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  if (kind == InverseKind::divergence) {
    Eigen::MatrixXd div = basis.divergence_values(eq.points);
    b = h * h * div.transpose() * eq.weights.asDiagonal() * div;
  } else {
    for (int k = 0; k <= dim; ++k) {
      int f = ref.element_face(0, k);
      PhysicalQuadrature fq = face_quadrature(ref, f, 2 * p + 2);
      Eigen::VectorXd nrm = ref.face(f).normal.head(dim);
      Eigen::MatrixXd tr = basis.normal_values(fq.points, nrm);
      b += h * tr.transpose() * fq.weights.asDiagonal() * tr;
    }
  }
  return std::sqrt(largest_generalized_eigenvalue(b, m));
}

ConstantSet make_constants(int p, int dim, Real theta) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("make_constants: dim must be 1 or 2");
  if (p < 0 || theta < 1)
    throw std::invalid_argument("make_constants: bad arguments");
  ConstantSet set;
  set.p = p;
  set.dim = dim;
  set.theta = theta;
  set.c_trace = trace_constant(theta, dim);
  set.c_face = face_inverse_constant(p, dim, theta);

  Real formula = div_inverse_constant(p, dim, theta);
  // oracle bound transported to shape-regular elements: |J^-1| <= diam(ref)/rho
  Real oracle = theta * eigen_oracle_inverse_constant(dim, p, InverseKind::divergence);
  if (formula >= oracle * (1 - 1e-12)) { // prefer the closed form on ties
    set.c_div = formula;
    set.div_provenance = "formula";
  } else {
    set.c_div = oracle;
    set.div_provenance = "oracle";
  }
  set.c_star = (set.c_div / std::sqrt(pi) + set.c_trace * set.c_face) / std::sqrt(Real(2));
  return set;
}

} // namespace eqflux
