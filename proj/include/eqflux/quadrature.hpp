#pragma once

#include <Eigen/Dense>

#include "eqflux/mesh.hpp"

namespace eqflux {

/// Quadrature on the reference interval (0,1) or the reference triangle
/// {x,y >= 0, x+y <= 1}. Exact for polynomials of total degree <= degree.
struct QuadratureRule {
  Eigen::MatrixXd points;  // n x d
  Eigen::VectorXd weights; // sum to the reference volume
  int degree = 0;
};

/// Gauss-Legendre rule with n points on (0,1), exact to degree 2n-1.
QuadratureRule gauss_legendre(int n);

QuadratureRule make_quadrature(int dim, int degree);

/// Quadrature mapped to a physical element or face, weights carrying the
/// volume or surface measure.
struct PhysicalQuadrature {
  Eigen::MatrixXd points; // n x dim(mesh)
  Eigen::VectorXd weights;
};

PhysicalQuadrature element_quadrature(const Mesh& mesh, int e, int degree);

/// Face quadrature; in 1d this is the single face point with weight 1.
PhysicalQuadrature face_quadrature(const Mesh& mesh, int face, int degree);

} // namespace eqflux
