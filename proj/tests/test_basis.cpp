#include "doctest.h"

#include <cmath>

#include "eqflux/basis.hpp"
#include "eqflux/mesh.hpp"
#include "eqflux/quadrature.hpp"

using namespace eqflux;

TEST_CASE("scalar space dimensions") {
  CHECK(scalar_space_dim(1, 0) == 1);
  CHECK(scalar_space_dim(1, 3) == 4);
  CHECK(scalar_space_dim(2, 0) == 1);
  CHECK(scalar_space_dim(2, 1) == 3);
  CHECK(scalar_space_dim(2, 2) == 6);
  CHECK(scalar_space_dim(2, 4) == 15);
}

TEST_CASE("modal basis is orthonormal on the reference element") {
  for (int dim = 1; dim <= 2; ++dim) {
    for (int degree = 0; degree <= 4; ++degree) {
      ScalarBasis basis = make_scalar_basis(dim, degree);
      QuadratureRule rule = make_quadrature(dim, 2 * degree);
      Eigen::MatrixXd vals = basis.values(rule.points);
      Eigen::MatrixXd gram = vals.transpose() * rule.weights.asDiagonal() * vals;
      int n = scalar_space_dim(dim, degree);
      CHECK((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("basis gradients match finite differences") {
  ScalarBasis basis = make_scalar_basis(2, 3);
  Eigen::MatrixXd pts(3, 2);
  pts << 0.2, 0.3, 0.1, 0.05, 0.4, 0.5;
  std::array<Eigen::MatrixXd, 2> grads = basis.gradients(pts);
  double h = 1e-6;
  for (int c = 0; c < 2; ++c) {
    Eigen::MatrixXd plus = pts, minus = pts;
    plus.col(c).array() += h;
    minus.col(c).array() -= h;
    Eigen::MatrixXd fd = (basis.values(plus) - basis.values(minus)) / (2 * h);
    CHECK((fd - grads[static_cast<size_t>(c)]).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("second derivatives match finite differences") {
  ScalarBasis basis = make_scalar_basis(2, 4);
  Eigen::MatrixXd pts(2, 2);
  pts << 0.25, 0.3, 0.15, 0.45;
  std::array<Eigen::MatrixXd, 3> hess = basis.second_derivatives(pts);
  double h = 1e-4;
  Eigen::MatrixXd xp = pts, xm = pts, yp = pts, ym = pts;
  xp.col(0).array() += h;
  xm.col(0).array() -= h;
  yp.col(1).array() += h;
  ym.col(1).array() -= h;
  Eigen::MatrixXd v0 = basis.values(pts);
  Eigen::MatrixXd fxx = (basis.values(xp) - 2 * v0 + basis.values(xm)) / (h * h);
  CHECK((fxx - hess[0]).cwiseAbs().maxCoeff() < 1e-5);
  Eigen::MatrixXd fyy = (basis.values(yp) - 2 * v0 + basis.values(ym)) / (h * h);
  CHECK((fyy - hess[2]).cwiseAbs().maxCoeff() < 5e-5);
  Eigen::MatrixXd xpyp = pts, xpym = pts, xmyp = pts, xmym = pts;
  xpyp.col(0).array() += h;
  xpyp.col(1).array() += h;
  xpym.col(0).array() += h;
  xpym.col(1).array() -= h;
  xmyp.col(0).array() -= h;
  xmyp.col(1).array() += h;
  xmym.col(0).array() -= h;
  xmym.col(1).array() -= h;
  Eigen::MatrixXd fxy = (basis.values(xpyp) - basis.values(xpym) - basis.values(xmyp) +
                         basis.values(xmym)) /
                        (4 * h * h);
  CHECK((fxy - hess[1]).cwiseAbs().maxCoeff() < 5e-5);
}

TEST_CASE("shifted legendre orthogonality on the unit interval") {
  int degree = 5;
  QuadratureRule rule = gauss_legendre(8);
  Eigen::MatrixXd vals = shifted_legendre_values(degree, rule.points.col(0));
  for (int i = 0; i <= degree; ++i)
    for (int j = 0; j <= degree; ++j) {
      double dot = (rule.weights.array() * vals.col(i).array() * vals.col(j).array()).sum();
      double expected = (i == j) ? 1.0 / (2 * i + 1) : 0.0;
      CHECK(dot == doctest::Approx(expected).epsilon(1e-13));
    }
  CHECK(vals(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("lagrange nodes list vertices first") {
  LagrangeNodes n1 = lagrange_nodes(1, 2);
  CHECK(n1.points.rows() == 3);
  CHECK(n1.points(0, 0) == doctest::Approx(0.0));
  CHECK(n1.points(n1.points.rows() - 1, 0) == doctest::Approx(1.0));
  for (int r = 0; r < n1.bary.rows(); ++r)
    CHECK(n1.bary.row(r).sum() == 2);
  LagrangeNodes n2 = lagrange_nodes(2, 3);
  CHECK(n2.points.rows() == 10);
  for (int r = 0; r < n2.bary.rows(); ++r) {
    CHECK(n2.bary.row(r).sum() == 3);
    CHECK(n2.points(r, 0) == doctest::Approx(n2.bary(r, 1) / 3.0));
    CHECK(n2.points(r, 1) == doctest::Approx(n2.bary(r, 2) / 3.0));
  }
}

TEST_CASE("flux space dimensions") {
  Mesh line = make_interval_mesh(2, 0, 1);
  Mesh tri = make_triangle_mesh(1, 1, 0, 1, 0, 1);
  for (int p = 0; p <= 3; ++p) {
    CHECK(FluxBasis::space_dim(1, p) == p + 2);
    CHECK(FluxBasis::space_dim(2, p) == (p + 1) * (p + 3));
    CHECK(FluxBasis(line, 0, p).size() == p + 2);
    CHECK(FluxBasis(tri, 0, p).size() == (p + 1) * (p + 3));
  }
  CHECK(FluxBasis(tri, 0, 0).size() == 3);
  CHECK(FluxBasis(line, 0, 1).size() == 3);
}

TEST_CASE("flux basis is dual to its moments") {
  // recompute the defining functionals from scratch and apply them
  Mesh tri = make_triangle_mesh(2, 1, 0, 1.1, -0.3, 0.8);
  for (int e = 0; e < tri.num_elements(); ++e) {
    for (int p = 0; p <= 2; ++p) {
      FluxBasis fb(tri, e, p);
      int n = fb.size();
      Eigen::MatrixXd dof = Eigen::MatrixXd::Zero(n, n);
      int fd = fb.face_dof_count();
      for (int lf = 0; lf < 3; ++lf) {
        int f = tri.element_face(e, lf);
        const Face& face = tri.face(f);
        PhysicalQuadrature fq = face_quadrature(tri, f, 2 * p + 2);
        Eigen::MatrixXd ntr = fb.normal_values(fq.points, face.normal);
        Eigen::Vector2d a = tri.coords().row(face.vertices[0]).transpose();
        Eigen::Vector2d b = tri.coords().row(face.vertices[1]).transpose();
        Eigen::VectorXd t(fq.points.rows());
        for (int q = 0; q < fq.points.rows(); ++q)
          t(q) = (fq.points.row(q).transpose() - a).dot(b - a) / (b - a).squaredNorm();
        Eigen::MatrixXd leg = shifted_legendre_values(p, t);
        for (int j = 0; j < fd; ++j) {
          Eigen::VectorXd test =
              leg.col(j) * std::sqrt(2.0 * j + 1) / std::sqrt(face.measure);
          dof.row(fb.face_dof(lf, j)) =
              (fq.weights.array() * test.array()).matrix().transpose() * ntr;
        }
      }
      if (fb.interior_dof_count() > 0) {
        PhysicalQuadrature eq = element_quadrature(tri, e, 2 * p + 2);
        Eigen::MatrixXi iexps = monomial_exponents(2, p - 1);
        Eigen::RowVector2d center = tri.element_vertices(e).colwise().mean();
        double scale = diameter(tri, e);
        double vol = volume(tri, e);
        int j = 0;
        for (int c = 0; c < 2; ++c) {
          Eigen::MatrixXd comp = fb.component_values(eq.points, c);
          for (int m = 0; m < iexps.rows(); ++m, ++j) {
            Eigen::VectorXd moments(eq.points.rows());
            for (int q = 0; q < eq.points.rows(); ++q) {
              Eigen::RowVector2d local = (eq.points.row(q) - center) / scale;
              moments(q) = std::pow(local(0), iexps(m, 0)) * std::pow(local(1), iexps(m, 1));
            }
            dof.row(fb.interior_dof(j)) =
                (eq.weights.array() * moments.array()).matrix().transpose() * comp / vol;
          }
        }
      }
      CHECK((dof - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("1d flux dof is the endpoint normal value") {
  Mesh line = make_interval_mesh(3, 0, 1.5);
  int e = 1;
  for (int p = 0; p <= 2; ++p) {
    FluxBasis fb(line, e, p);
    for (int k = 0; k < 2; ++k) {
      int f = line.element_face(e, k);
      PhysicalQuadrature fq = face_quadrature(line, f, 1);
      Eigen::MatrixXd ntr = fb.normal_values(fq.points, line.face(f).normal.head(1));
      for (int col = 0; col < fb.size(); ++col)
        CHECK(ntr(0, col) ==
              doctest::Approx(col == fb.face_dof(k, 0) ? 1.0 : 0.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("flux divergence lands in the matching polynomial space") {
  Mesh tri = make_triangle_mesh(2, 2, 0, 1, 0, 1);
  int e = 3;
  AffineMap map = affine_map(tri, e);
  for (int p = 0; p <= 2; ++p) {
    FluxBasis fb(tri, e, p);
    ScalarBasis modal = make_scalar_basis(2, p);
    PhysicalQuadrature eq = element_quadrature(tri, e, 2 * p + 4);
    Eigen::MatrixXd ref(eq.points.rows(), 2);
    for (int q = 0; q < eq.points.rows(); ++q)
      ref.row(q) = (map.Jinv * (eq.points.row(q).transpose() - map.b)).transpose();
    Eigen::MatrixXd mv = modal.values(ref);
    Eigen::MatrixXd div = fb.divergence_values(eq.points);
    Eigen::MatrixXd mass = mv.transpose() * eq.weights.asDiagonal() * mv;
    for (int k = 0; k < fb.size(); ++k) {
      Eigen::VectorXd rhs = mv.transpose() * (eq.weights.array() * div.col(k).array()).matrix();
      Eigen::VectorXd c = mass.ldlt().solve(rhs);
      Eigen::VectorXd residual = div.col(k) - mv * c;
      CHECK(std::sqrt((eq.weights.array() * residual.array().square()).sum()) < 1e-9);
    }
  }
}

TEST_CASE("shared face dof glues normal traces") {
  Mesh tri = make_triangle_mesh(2, 2, 0.0, 1.3, -0.2, 1.0);
  int p = 2;
  for (int f = 0; f < tri.num_faces(); ++f) {
    const Face& face = tri.face(f);
    if (face.on_boundary)
      continue;
    FluxBasis owner(tri, face.owner, p);
    FluxBasis neighbor(tri, face.neighbor, p);
    int lf_o = -1, lf_n = -1;
    for (int k = 0; k < 3; ++k) {
      if (tri.element_face(face.owner, k) == f) lf_o = k;
      if (tri.element_face(face.neighbor, k) == f) lf_n = k;
    }
    REQUIRE(lf_o >= 0);
    REQUIRE(lf_n >= 0);
    PhysicalQuadrature fq = face_quadrature(tri, f, 2 * p + 2);
    Eigen::MatrixXd to = owner.normal_values(fq.points, face.normal);
    Eigen::MatrixXd tn = neighbor.normal_values(fq.points, face.normal);
    for (int j = 0; j <= p; ++j)
      CHECK((to.col(owner.face_dof(lf_o, j)) - tn.col(neighbor.face_dof(lf_n, j)))
                .cwiseAbs()
                .maxCoeff() < 1e-11);
    // every other dof has vanishing trace on this face
    for (int k = 0; k < owner.size(); ++k) {
      bool on_face = false;
      for (int j = 0; j <= p; ++j)
        on_face = on_face || k == owner.face_dof(lf_o, j);
      if (!on_face)
        CHECK(to.col(k).cwiseAbs().maxCoeff() < 1e-11);
    }
  }
}
