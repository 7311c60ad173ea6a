#include "eqflux/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace eqflux {

Eigen::MatrixXi monomial_exponents(int dim, int degree) {
  if (degree < 0)
    throw std::invalid_argument("monomial_exponents: negative degree");
  Eigen::MatrixXi exps(scalar_space_dim(dim, degree), dim);
  int r = 0;
  if (dim == 1) {
    for (int a = 0; a <= degree; ++a)
      exps(r++, 0) = a;
  } else {
    for (int t = 0; t <= degree; ++t)
      for (int b = 0; b <= t; ++b) {
        exps(r, 0) = t - b;
        exps(r, 1) = b;
        ++r;
      }
  }
  return exps;
}

int scalar_space_dim(int dim, int degree) {
  if (degree < 0)
    return 0;
  return dim == 1 ? degree + 1 : (degree + 1) * (degree + 2) / 2;
}

namespace {

Eigen::MatrixXd monomial_values(const Eigen::MatrixXi& exps, const Eigen::MatrixXd& pts) {
  int n = static_cast<int>(pts.rows());
  int nm = static_cast<int>(exps.rows());
  Eigen::MatrixXd vals(n, nm);
  for (int m = 0; m < nm; ++m)
    for (int i = 0; i < n; ++i) {
      Real v = 1;
      for (int k = 0; k < exps.cols(); ++k)
        for (int rep = 0; rep < exps(m, k); ++rep)
          v *= pts(i, k);
      vals(i, m) = v;
    }
  return vals;
}

// d/dx_k of the monomials, evaluated at pts
Eigen::MatrixXd monomial_derivatives(const Eigen::MatrixXi& exps, const Eigen::MatrixXd& pts,
                                     int k) {
  Eigen::MatrixXi dexps = exps;
  Eigen::VectorXd factor(exps.rows());
  for (int m = 0; m < exps.rows(); ++m) {
    factor(m) = exps(m, k);
    dexps(m, k) = std::max(0, exps(m, k) - 1);
  }
  return monomial_values(dexps, pts) * factor.asDiagonal();
}

Eigen::MatrixXd monomial_second_derivatives(const Eigen::MatrixXi& exps,
                                            const Eigen::MatrixXd& pts, int k1, int k2) {
  Eigen::MatrixXi dexps = exps;
  Eigen::VectorXd factor(exps.rows());
  for (int m = 0; m < exps.rows(); ++m) {
    Real f = exps(m, k1);
    dexps(m, k1) = std::max(0, exps(m, k1) - 1);
    f *= dexps(m, k2);
    dexps(m, k2) = std::max(0, dexps(m, k2) - 1);
    factor(m) = f;
  }
  return monomial_values(dexps, pts) * factor.asDiagonal();
}

Real factorial(int n) {
  Real f = 1;
  for (int i = 2; i <= n; ++i)
    f *= i;
  return f;
}

} // namespace

Real reference_monomial_integral(int dim, const Eigen::RowVectorXi& exp) {
  if (dim == 1)
    return Real(1) / (exp(0) + 1);
  // int over the unit triangle of x^a y^b = a! b! / (a+b+2)!
  return factorial(exp(0)) * factorial(exp(1)) / factorial(exp(0) + exp(1) + 2);
}

Eigen::MatrixXd ScalarBasis::values(const Eigen::MatrixXd& pts) const {
  return monomial_values(exps, pts) * coeff;
}

std::array<Eigen::MatrixXd, 2> ScalarBasis::gradients(const Eigen::MatrixXd& pts) const {
  std::array<Eigen::MatrixXd, 2> g;
  for (int k = 0; k < dim; ++k)
    g[static_cast<size_t>(k)] = monomial_derivatives(exps, pts, k) * coeff;
  return g;
}

std::array<Eigen::MatrixXd, 3> ScalarBasis::second_derivatives(const Eigen::MatrixXd& pts) const {
  std::array<Eigen::MatrixXd, 3> h;
  h[0] = monomial_second_derivatives(exps, pts, 0, 0) * coeff;
  if (dim == 2) {
    h[1] = monomial_second_derivatives(exps, pts, 0, 1) * coeff;
    h[2] = monomial_second_derivatives(exps, pts, 1, 1) * coeff;
  }
  return h;
}

ScalarBasis make_scalar_basis(int dim, int degree) {
  ScalarBasis basis;
  basis.dim = dim;
  basis.degree = degree;
  basis.exps = monomial_exponents(dim, degree);
  int nm = static_cast<int>(basis.exps.rows());

  Eigen::MatrixXd gram(nm, nm);
  for (int i = 0; i < nm; ++i)
    for (int j = 0; j < nm; ++j)
      gram(i, j) = reference_monomial_integral(dim, basis.exps.row(i) + basis.exps.row(j));

  // Gram-Schmidt with reorthogonalization against the exact Gram matrix
  basis.coeff = Eigen::MatrixXd::Identity(nm, nm);
  for (int j = 0; j < nm; ++j) {
    Eigen::VectorXd c = basis.coeff.col(j);
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i < j; ++i)
        c -= (basis.coeff.col(i).dot(gram * c)) * basis.coeff.col(i);
    Real norm = std::sqrt(c.dot(gram * c));
    if (!(norm > 0))
      throw std::runtime_error("make_scalar_basis: orthogonalization broke down");
    basis.coeff.col(j) = c / norm;
  }
  return basis;
}

LagrangeNodes lagrange_nodes(int dim, int degree) {
  if (degree < 1)
    throw std::invalid_argument("lagrange_nodes: need degree >= 1");
  LagrangeNodes nodes;
  int nn = scalar_space_dim(dim, degree);
  nodes.points.resize(nn, dim);
  nodes.bary.resize(nn, dim + 1);
  int r = 0;
  if (dim == 1) {
    for (int i = 0; i <= degree; ++i) {
      nodes.points(r, 0) = Real(i) / degree;
      nodes.bary.row(r) << degree - i, i;
      ++r;
    }
  } else {
    for (int j = 0; j <= degree; ++j)
      for (int i = 0; i <= degree - j; ++i) {
        nodes.points.row(r) << Real(i) / degree, Real(j) / degree;
        nodes.bary.row(r) << degree - i - j, i, j;
        ++r;
      }
  }
  return nodes;
}

Eigen::MatrixXd shifted_legendre_values(int degree, const Eigen::VectorXd& t) {
  int n = static_cast<int>(t.size());
  Eigen::MatrixXd vals(n, degree + 1);
  vals.col(0).setOnes();
  if (degree >= 1)
    vals.col(1) = 2 * t.array() - 1;
  for (int k = 1; k < degree; ++k)
    vals.col(k + 1) = ((2 * k + 1) * (2 * t.array() - 1) * vals.col(k).array() -
                       k * vals.col(k - 1).array()) /
                      (k + 1);
  return vals;
}

int FluxBasis::space_dim(int dim, int degree) {
  return dim == 1 ? degree + 2 : (degree + 1) * (degree + 3);
}

int FluxBasis::interior_dof_count() const {
  return nfuncs_ - (dim_ + 1) * face_dof_count();
}

FluxBasis::FluxBasis(const Mesh& mesh, int element, int degree)
    : dim_(mesh.dim()), degree_(degree), nfuncs_(space_dim(mesh.dim(), degree)) {
  if (degree < 0)
    throw std::invalid_argument("FluxBasis: negative degree");
  Eigen::MatrixXd verts = mesh.element_vertices(element);
  center_ = verts.colwise().mean().transpose();
  scale_ = diameter(mesh, element);

  aexps_ = monomial_exponents(dim_, degree_);
  if (dim_ == 1) {
    bexps_.resize(1, 1);
    bexps_(0, 0) = degree_;
  } else {
    bexps_.resize(degree_ + 1, 2);
    for (int b = 0; b <= degree_; ++b)
      bexps_.row(b) << degree_ - b, b;
  }

  int nspan = dim_ * static_cast<int>(aexps_.rows()) + static_cast<int>(bexps_.rows());
  if (nspan != nfuncs_)
    throw std::runtime_error("FluxBasis: spanning set size mismatch");

  Eigen::MatrixXd dofs(nfuncs_, nspan);
  int quad_degree = 2 * degree_ + 2;

  for (int k = 0; k <= dim_; ++k) {
    int f = mesh.element_face(element, k);
    const Face& face = mesh.face(f);
    PhysicalQuadrature fq = face_quadrature(mesh, f, quad_degree);
    Eigen::VectorXd n = face.normal.head(dim_);
    int nq = static_cast<int>(fq.points.rows());

    Eigen::MatrixXd span_n = Eigen::MatrixXd::Zero(nq, nspan);
    for (int c = 0; c < dim_; ++c)
      span_n += n(c) * span_component(fq.points, c);

    Eigen::MatrixXd tests; // nq x face_dof_count, orthonormal on the face
    if (dim_ == 1) {
      tests = Eigen::MatrixXd::Ones(1, 1);
    } else {
      Eigen::Vector2d a = mesh.coords().row(face.vertices[0]);
      Eigen::Vector2d b = mesh.coords().row(face.vertices[1]);
      Eigen::VectorXd t(nq);
      for (int q = 0; q < nq; ++q)
        t(q) = (fq.points.row(q).transpose() - a).dot(b - a) / ((b - a).squaredNorm());
      tests = shifted_legendre_values(degree_, t);
      for (int j = 0; j <= degree_; ++j)
        tests.col(j) *= std::sqrt(Real(2 * j + 1)) / std::sqrt(face.measure);
    }
    for (int j = 0; j < face_dof_count(); ++j)
      dofs.row(face_dof(k, j)) =
          (fq.weights.array() * tests.col(j).array()).matrix().transpose() * span_n;
  }

  if (interior_dof_count() > 0) {
    PhysicalQuadrature eq = element_quadrature(mesh, element, quad_degree);
    Eigen::MatrixXi iexps = monomial_exponents(dim_, degree_ - 1);
    Real vol = volume(mesh, element);
    Eigen::MatrixXd local = (eq.points.rowwise() - center_.transpose()) / scale_;
    Eigen::MatrixXd tvals = monomial_values(iexps, local);
    int j = 0;
    for (int c = 0; c < dim_; ++c) {
      Eigen::MatrixXd span_c = span_component(eq.points, c);
      for (int m = 0; m < iexps.rows(); ++m, ++j)
        dofs.row(interior_dof(j)) =
            (eq.weights.array() * tvals.col(m).array()).matrix().transpose() * span_c / vol;
    }
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(dofs);
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(nfuncs_, nfuncs_);
  coeff_ = lu.solve(eye);
  // a couple of refinement sweeps keep the dual basis accurate on thin cells,
  // where the raw moment matrix conditions badly at high degree
  for (int sweep = 0; sweep < 2; ++sweep)
    coeff_ += lu.solve(eye - dofs * coeff_);
  Real residual = (dofs * coeff_ - eye).norm();
  if (!(residual < 1e-6 * std::sqrt(Real(nfuncs_))))
    throw std::runtime_error("FluxBasis: moment matrix is numerically singular");
}

Eigen::MatrixXd FluxBasis::span_component(const Eigen::MatrixXd& pts, int k) const {
  int n = static_cast<int>(pts.rows());
  int nmA = static_cast<int>(aexps_.rows());
  int nB = static_cast<int>(bexps_.rows());
  Eigen::MatrixXd local = (pts.rowwise() - center_.transpose()) / scale_;
  Eigen::MatrixXd span = Eigen::MatrixXd::Zero(n, dim_ * nmA + nB);
  span.middleCols(k * nmA, nmA) = monomial_values(aexps_, local);
  Eigen::MatrixXd bvals = monomial_values(bexps_, local);
  for (int m = 0; m < nB; ++m)
    span.col(dim_ * nmA + m) = bvals.col(m).array() * local.col(k).array();
  return span;
}

Eigen::MatrixXd FluxBasis::span_divergence(const Eigen::MatrixXd& pts) const {
  int n = static_cast<int>(pts.rows());
  int nmA = static_cast<int>(aexps_.rows());
  int nB = static_cast<int>(bexps_.rows());
  Eigen::MatrixXd local = (pts.rowwise() - center_.transpose()) / scale_;
  Eigen::MatrixXd div(n, dim_ * nmA + nB);
  for (int c = 0; c < dim_; ++c)
    div.middleCols(c * nmA, nmA) = monomial_derivatives(aexps_, local, c) / scale_;
  // radial block: div(m(x) x) = (deg m + d) m(x) for homogeneous m
  div.rightCols(nB) =
      monomial_values(bexps_, local) * Real(degree_ + dim_) / scale_;
  return div;
}

Eigen::MatrixXd FluxBasis::component_values(const Eigen::MatrixXd& pts, int k) const {
  return span_component(pts, k) * coeff_;
}

Eigen::MatrixXd FluxBasis::divergence_values(const Eigen::MatrixXd& pts) const {
  return span_divergence(pts) * coeff_;
}

Eigen::MatrixXd FluxBasis::normal_values(const Eigen::MatrixXd& pts,
                                         const Eigen::VectorXd& n) const {
  Eigen::MatrixXd vals = n(0) * component_values(pts, 0);
  for (int k = 1; k < dim_; ++k)
    vals += n(k) * component_values(pts, k);
  return vals;
}

} // namespace eqflux
