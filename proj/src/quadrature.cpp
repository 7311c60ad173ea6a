#include "eqflux/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace eqflux {

QuadratureRule gauss_legendre(int n) {
  if (n <= 0)
    throw std::invalid_argument("gauss_legendre: need n >= 1");
  // Golub-Welsch on the Legendre Jacobi matrix, then map [-1,1] -> (0,1)
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    Real b = Real(k) / std::sqrt(Real(4 * k * k - 1));
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  QuadratureRule rule;
  rule.points.resize(n, 1);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.points(i, 0) = (es.eigenvalues()(i) + 1) / 2;
    Real w0 = es.eigenvectors()(0, i);
    rule.weights(i) = w0 * w0; // 2*w0^2 on [-1,1], halved by the affine map
  }
  rule.degree = 2 * n - 1;
  return rule;
}

QuadratureRule make_quadrature(int dim, int degree) {
  if (degree < 0)
    throw std::invalid_argument("make_quadrature: negative degree");
  if (dim == 1)
    return [&] {
      QuadratureRule r = gauss_legendre(degree / 2 + 1);
      r.degree = degree;
      return r;
    }();
  if (dim != 2)
    throw std::invalid_argument("make_quadrature: dim must be 1 or 2");

  // Duffy map (u,v) -> (u, v(1-u)) with Jacobian (1-u); a total-degree-m
  // integrand becomes degree m+1 in u and m in v.
  QuadratureRule gu = gauss_legendre((degree + 1) / 2 + 1);
  QuadratureRule gv = gauss_legendre(degree / 2 + 1);
  int n = static_cast<int>(gu.points.rows() * gv.points.rows());
  QuadratureRule rule;
  rule.points.resize(n, 2);
  rule.weights.resize(n);
  int q = 0;
  for (int i = 0; i < gu.points.rows(); ++i)
    for (int j = 0; j < gv.points.rows(); ++j, ++q) {
      Real u = gu.points(i, 0), v = gv.points(j, 0);
      rule.points(q, 0) = u;
      rule.points(q, 1) = v * (1 - u);
      rule.weights(q) = gu.weights(i) * gv.weights(j) * (1 - u);
    }
  rule.degree = degree;
  return rule;
}

PhysicalQuadrature element_quadrature(const Mesh& mesh, int e, int degree) {
  QuadratureRule ref = make_quadrature(mesh.dim(), degree);
  AffineMap map = affine_map(mesh, e);
  int n = static_cast<int>(ref.points.rows());
  PhysicalQuadrature pq;
  pq.points.resize(n, mesh.dim());
  for (int q = 0; q < n; ++q)
    pq.points.row(q) = (map.J * ref.points.row(q).transpose() + map.b).transpose();
  pq.weights = ref.weights * map.det;
  return pq;
}

PhysicalQuadrature face_quadrature(const Mesh& mesh, int face, int degree) {
  const Face& f = mesh.face(face);
  PhysicalQuadrature fq;
  if (mesh.dim() == 1) {
    fq.points.resize(1, 1);
    fq.points(0, 0) = mesh.coords()(f.vertices[0], 0);
    fq.weights = Eigen::VectorXd::Ones(1);
    return fq;
  }
  QuadratureRule line = gauss_legendre(degree / 2 + 1);
  Eigen::Vector2d a = mesh.coords().row(f.vertices[0]);
  Eigen::Vector2d b = mesh.coords().row(f.vertices[1]);
  int n = static_cast<int>(line.points.rows());
  fq.points.resize(n, 2);
  fq.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    Real t = line.points(i, 0);
    fq.points.row(i) = ((1 - t) * a + t * b).transpose();
    fq.weights(i) = line.weights(i) * f.measure;
  }
  return fq;
}

} // namespace eqflux
