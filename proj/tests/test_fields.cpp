#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>

#include "eqflux/fields.hpp"
#include "eqflux/mesh.hpp"
#include "eqflux/quadrature.hpp"

using namespace eqflux;

TEST_CASE("projection of x^2 onto affine functions") {
  Mesh mesh = make_interval_mesh(1, 0, 1);
  ScalarField u = l2_project(mesh, 1, [](const Eigen::VectorXd& x) { return x(0) * x(0); }, 8);
  Eigen::MatrixXd pts(3, 1);
  pts << 0.0, 0.5, 1.0;
  Eigen::VectorXd vals = u.values(0, pts);
  // best affine fit is x - 1/6
  CHECK(vals(0) == doctest::Approx(-1.0 / 6).epsilon(1e-12));
  CHECK(vals(1) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(vals(2) == doctest::Approx(5.0 / 6).epsilon(1e-12));
}

TEST_CASE("projection reproduces polynomials of matching degree") {
  Mesh mesh = make_triangle_mesh(2, 2, 0, 1.2, -0.4, 1.0);
  auto f = [](const Eigen::VectorXd& x) {
    return 1 + 2 * x(0) - x(1) + x(0) * x(0) - x(0) * x(1);
  };
  ScalarField u = l2_project(mesh, 2, f, 6);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    PhysicalQuadrature pq = element_quadrature(mesh, e, 4);
    Eigen::MatrixXd ref = u.to_reference(e, pq.points);
    Eigen::VectorXd vals = u.values(e, ref);
    for (int q = 0; q < pq.points.rows(); ++q)
      CHECK(vals(q) == doctest::Approx(f(pq.points.row(q).transpose())).epsilon(1e-12));
  }
}

TEST_CASE("gradients and laplacian of a projected quadratic") {
  Mesh mesh = make_triangle_mesh(3, 2, 0, 1, 0, 1);
  ScalarField u = l2_project(
      mesh, 2, [](const Eigen::VectorXd& x) { return x(0) * x(0) + x(1) * x(1); }, 6);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    PhysicalQuadrature pq = element_quadrature(mesh, e, 2);
    Eigen::MatrixXd ref = u.to_reference(e, pq.points);
    Eigen::MatrixXd grad = u.gradients(e, ref);
    for (int q = 0; q < pq.points.rows(); ++q) {
      CHECK(grad(q, 0) == doctest::Approx(2 * pq.points(q, 0)).epsilon(1e-11));
      CHECK(grad(q, 1) == doctest::Approx(2 * pq.points(q, 1)).epsilon(1e-11));
    }
    Eigen::VectorXd lap = u.laplacian(e, ref);
    for (int q = 0; q < lap.size(); ++q)
      CHECK(lap(q) == doctest::Approx(4.0).epsilon(1e-11));
  }
}

TEST_CASE("polynomial source evaluates through the stored field") {
  Mesh mesh = make_interval_mesh(4, 0, 1);
  auto field = std::make_shared<ScalarField>(
      l2_project(mesh, 1, [](const Eigen::VectorXd& x) { return 3 * x(0) - 1; }, 4));
  SourceTerm src(std::static_pointer_cast<const ScalarField>(field));
  CHECK(src.polynomial());
  Eigen::MatrixXd ref(2, 1);
  ref << 0.25, 0.75;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    Eigen::MatrixXd phys(2, 1);
    for (int q = 0; q < 2; ++q)
      phys(q, 0) = (e + ref(q, 0)) * 0.25;
    Eigen::VectorXd vals = src.values(mesh, e, ref, phys);
    for (int q = 0; q < 2; ++q)
      CHECK(vals(q) == doctest::Approx(3 * phys(q, 0) - 1).epsilon(1e-12));
  }

  Mesh other = make_interval_mesh(3, 0, 1);
  CHECK_THROWS_AS(src.values(other, 0, ref, ref), std::invalid_argument);

  SourceTerm fn([](const Eigen::VectorXd& x) { return x(0); });
  CHECK_FALSE(fn.polynomial());
  SourceTerm empty;
  CHECK_FALSE(empty.valid());
}

TEST_CASE("projection of a stored field is the identity") {
  Mesh mesh = make_interval_mesh(5, -1, 1);
  auto base = std::make_shared<ScalarField>(
      l2_project(mesh, 2, [](const Eigen::VectorXd& x) { return std::sin(3 * x(0)); }, 10));
  ScalarField again = l2_project(mesh, 2, SourceTerm(std::static_pointer_cast<const ScalarField>(base)), 6);
  CHECK((again.coefficients() - base->coefficients()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("flux field with shared face moments is normal-continuous") {
  Mesh mesh = make_triangle_mesh(3, 2, 0, 1.5, 0, 1);
  int p = 1;
  FluxField v(mesh, p);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coef(-1, 1);
  Eigen::MatrixXd& c = v.coefficients();
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int k = 0; k < c.cols(); ++k)
      c(e, k) = coef(rng);
  // overwrite shared face dofs so owner and neighbor agree
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (face.on_boundary)
      continue;
    int lf_o = -1, lf_n = -1;
    for (int k = 0; k < 3; ++k) {
      if (mesh.element_face(face.owner, k) == f) lf_o = k;
      if (mesh.element_face(face.neighbor, k) == f) lf_n = k;
    }
    for (int j = 0; j <= p; ++j)
      c(face.neighbor, v.basis(face.neighbor).face_dof(lf_n, j)) =
          c(face.owner, v.basis(face.owner).face_dof(lf_o, j));
  }
  CHECK(max_normal_jump(v, 2 * p + 2) < 1e-11);

  // breaking one shared moment produces a visible jump
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (face.on_boundary)
      continue;
    for (int k = 0; k < 3; ++k)
      if (mesh.element_face(face.neighbor, k) == f)
        c(face.neighbor, v.basis(face.neighbor).face_dof(k, 0)) += 1.0;
    break;
  }
  CHECK(max_normal_jump(v, 2 * p + 2) > 0.1);
}

TEST_CASE("trace jump detectors") {
  Mesh mesh = make_triangle_mesh(2, 1, 0, 1, 0, 1);
  ScalarField ones = l2_project(mesh, 1, [](const Eigen::VectorXd&) { return 1.0; }, 2);
  CHECK(max_trace_jump(ones, 4) < 1e-13);
  CHECK(max_boundary_trace(ones, 4) == doctest::Approx(1.0).epsilon(1e-12));

  ScalarField step = l2_project(
      mesh, 1, [](const Eigen::VectorXd& x) { return x(0) < 0.5 ? 0.0 : 1.0; }, 2);
  CHECK(max_trace_jump(step, 4) == doctest::Approx(1.0).epsilon(1e-10));
}
