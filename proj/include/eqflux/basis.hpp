#pragma once

#include <Eigen/Dense>

#include <array>

#include "eqflux/mesh.hpp"
#include "eqflux/quadrature.hpp"

namespace eqflux {

/// Monomial exponent list for total degree <= p, ordered by total degree
/// then lexicographically. One column per space dimension.
Eigen::MatrixXi monomial_exponents(int dim, int degree);

int scalar_space_dim(int dim, int degree);

/// L2-orthonormalized modal basis on the reference interval (0,1) or the
/// reference triangle, stored as monomial coefficients.
struct ScalarBasis {
  int dim = 0;
  int degree = 0;
  Eigen::MatrixXi exps;  // nm x dim
  Eigen::MatrixXd coeff; // nm x nb

  int size() const { return static_cast<int>(coeff.cols()); }
  Eigen::MatrixXd values(const Eigen::MatrixXd& pts) const;
  /// gradients[k] holds d/dx_k values, each npts x nb.
  std::array<Eigen::MatrixXd, 2> gradients(const Eigen::MatrixXd& pts) const;
  /// second_derivatives[{0,1,2}] = dxx, dxy, dyy (only dxx used in 1d).
  std::array<Eigen::MatrixXd, 3> second_derivatives(const Eigen::MatrixXd& pts) const;
};

ScalarBasis make_scalar_basis(int dim, int degree);

/// Exact integral of the monomial over the reference simplex.
Real reference_monomial_integral(int dim, const Eigen::RowVectorXi& exp);

/// Equispaced Lagrange nodes on the reference simplex with barycentric
/// multi-indices (used to classify vertex/edge/interior nodes).
struct LagrangeNodes {
  Eigen::MatrixXd points; // nn x dim
  Eigen::MatrixXi bary;   // nn x (dim+1), rows sum to the degree
};

LagrangeNodes lagrange_nodes(int dim, int degree);

/// Shifted Legendre values P~_0..P~_p at points t in [0,1] (rows: points).
Eigen::MatrixXd shifted_legendre_values(int degree, const Eigen::VectorXd& t);

/// Raviart-Thomas-Nedelec space on one physical element: P_p(K)^d + x P_p(K).
/// The basis is dual to face normal moments taken against orthonormal
/// polynomials in the face's canonical parametrization with the face's global
/// normal, followed by interior moments. Face moments therefore coincide for
/// the two elements sharing a face, so equal coefficients glue H(div)-conformingly.
class FluxBasis {
public:
  FluxBasis(const Mesh& mesh, int element, int degree);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  int size() const { return nfuncs_; }
  int face_dof_count() const { return dim_ == 1 ? 1 : degree_ + 1; }
  int interior_dof_count() const;
  /// Local index of face moment j on local face k (k = opposite vertex index).
  int face_dof(int local_face, int j) const { return local_face * face_dof_count() + j; }
  int interior_dof(int j) const { return (dim_ + 1) * face_dof_count() + j; }

  /// Component k values of all basis functions at physical points, npts x nfuncs.
  Eigen::MatrixXd component_values(const Eigen::MatrixXd& pts, int k) const;
  /// Divergence values, npts x nfuncs.
  Eigen::MatrixXd divergence_values(const Eigen::MatrixXd& pts) const;
  /// v . n at physical points for a fixed unit normal.
  Eigen::MatrixXd normal_values(const Eigen::MatrixXd& pts, const Eigen::VectorXd& n) const;

  static int space_dim(int dim, int degree);

private:
  Eigen::MatrixXd span_component(const Eigen::MatrixXd& pts, int k) const;
  Eigen::MatrixXd span_divergence(const Eigen::MatrixXd& pts) const;

  int dim_;
  int degree_;
  int nfuncs_;
  Eigen::VectorXd center_;
  Real scale_ = 1;
  Eigen::MatrixXi aexps_; // vector-monomial block exponents
  Eigen::MatrixXi bexps_; // homogeneous radial block exponents
  Eigen::MatrixXd coeff_; // nspan x nfuncs
};

} // namespace eqflux
