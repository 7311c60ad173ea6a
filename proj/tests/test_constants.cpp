#include "doctest.h"

#include <cmath>
#include <numbers>

#include "eqflux/constants.hpp"

using namespace eqflux;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("trace constant values") {
  CHECK(trace_constant(1, 1) == doctest::Approx(std::sqrt(2 * (2 + 1 / pi))).epsilon(1e-14));
  CHECK(trace_constant(1, 1) == doctest::Approx(2.1532811).epsilon(1e-6));
  double theta = 1 + std::sqrt(2.0);
  CHECK(trace_constant(theta, 2) ==
        doctest::Approx(std::sqrt(theta * 3 * (2 + 2 / pi))).epsilon(1e-14));
  CHECK(trace_constant(theta, 2) == doctest::Approx(4.369908).epsilon(1e-6));
  CHECK(trace_constant(2, 1) > trace_constant(1, 1));
  CHECK(trace_constant(1, 2) > trace_constant(1, 1));
  CHECK_THROWS_AS(trace_constant(0.5, 1), std::invalid_argument);
}

TEST_CASE("face inverse constant values") {
  CHECK(face_inverse_constant(0, 1, 1) ==
        doctest::Approx(2 * std::sqrt(2.0)).epsilon(1e-14));
  double theta = 1 + std::sqrt(2.0);
  // sqrt(3*3*4*theta) = 6 sqrt(theta)
  CHECK(face_inverse_constant(1, 2, theta) ==
        doctest::Approx(6 * std::sqrt(theta)).epsilon(1e-14));
  CHECK(face_inverse_constant(1, 2, theta) == doctest::Approx(9.3226438).epsilon(1e-6));
  for (int p = 0; p < 4; ++p)
    CHECK(face_inverse_constant(p + 1, 2, 1.0) > face_inverse_constant(p, 2, 1.0));
}

TEST_CASE("divergence inverse constant values") {
  // sqrt(2) * (sqrt(5)/4) * 8 * sqrt(24) = 2 sqrt(240)
  CHECK(div_inverse_constant(1, 2, 1) ==
        doctest::Approx(2 * std::sqrt(240.0)).epsilon(1e-13));
  CHECK(div_inverse_constant(1, 2, 1) == doctest::Approx(30.983866769659336).epsilon(1e-12));
  CHECK(div_inverse_constant(0, 1, 1) == doctest::Approx(0.0));
  CHECK(div_inverse_constant(0, 2, 1.5) == doctest::Approx(0.0));
  CHECK(div_inverse_constant(2, 2, 3.0) ==
        doctest::Approx(3 * div_inverse_constant(2, 2, 1.0)).epsilon(1e-13));
}

TEST_CASE("interval derivative bound values") {
  CHECK(cp1_bound(0) == doctest::Approx(0.0));
  CHECK(cp1_bound(1) == doctest::Approx(0.0));
  CHECK(cp1_bound(2) == doctest::Approx(std::sqrt(12.0)).epsilon(1e-14));
  CHECK(cp1_bound(3) == doctest::Approx(std::sqrt(60.0)).epsilon(1e-14));
  CHECK(cp1_bound(4) == doctest::Approx(std::sqrt(180.0)).epsilon(1e-14));
}

TEST_CASE("interval derivative oracle is the exact legendre eigenvalue") {
  // B is block diagonal in the orthonormal shifted-Legendre basis; the blocks
  // are small enough to diagonalize by hand.
  CHECK(eigen_oracle_inverse_constant(1, 1, InverseKind::derivative) ==
        doctest::Approx(2 * std::sqrt(3.0)).epsilon(1e-10));
  CHECK(eigen_oracle_inverse_constant(1, 2, InverseKind::derivative) ==
        doctest::Approx(std::sqrt(60.0)).epsilon(1e-10));
  CHECK(eigen_oracle_inverse_constant(1, 3, InverseKind::derivative) ==
        doctest::Approx(std::sqrt((180 + std::sqrt(25680.0)) / 2)).epsilon(1e-9));
  CHECK(eigen_oracle_inverse_constant(1, 4, InverseKind::derivative) ==
        doctest::Approx(std::sqrt(210 + std::sqrt(28980.0))).epsilon(1e-9));
  CHECK(eigen_oracle_inverse_constant(1, 0, InverseKind::derivative) == doctest::Approx(0.0));
}

TEST_CASE("closed form shifted by one degree bounds the derivative oracle") {
  // the closed form at p+1 equals the sharp value at p for p <= 2 and stays
  // above it afterwards; at p itself it is below the sharp value
  for (int p = 1; p <= 4; ++p) {
    double oracle = eigen_oracle_inverse_constant(1, p, InverseKind::derivative);
    CHECK(oracle <= cp1_bound(p + 1) * (1 + 1e-10));
    CHECK(oracle > cp1_bound(p));
  }
  CHECK(eigen_oracle_inverse_constant(1, 1, InverseKind::derivative) ==
        doctest::Approx(cp1_bound(2)).epsilon(1e-12));
  CHECK(eigen_oracle_inverse_constant(1, 2, InverseKind::derivative) ==
        doctest::Approx(cp1_bound(3)).epsilon(1e-12));
}

TEST_CASE("effective interval constant") {
  CHECK(cp1_effective(0) == doctest::Approx(0.0));
  CHECK(cp1_effective(1) == doctest::Approx(2 * std::sqrt(3.0)).epsilon(1e-10));
  CHECK(cp1_effective(2) == doctest::Approx(std::sqrt(60.0)).epsilon(1e-10));
}

TEST_CASE("simplex derivative bound values") {
  CHECK(cpd_bound(2, 2) == doctest::Approx(std::sqrt(240.0)).epsilon(1e-13));
  CHECK(cpd_bound(2, 3) == doctest::Approx(std::sqrt(1920.0)).epsilon(1e-13));
  CHECK(cpd_bound(1, 2) == doctest::Approx(0.0));
}

TEST_CASE("divergence constant composition identity") {
  for (int p = 1; p <= 4; ++p)
    for (int d = 1; d <= 3; ++d)
      for (double theta : {1.0, 1.7, 1 + std::sqrt(2.0)}) {
        double direct = div_inverse_constant(p, d, theta);
        double composed = std::sqrt(2.0 * d) * theta * cpd_bound(p + 1, d);
        CHECK(std::abs(direct - composed) <= 1e-12 * direct);
      }
}

TEST_CASE("1d flux oracles have closed forms") {
  // the 1d degree-p flux space is exactly P_{p+1}
  CHECK(eigen_oracle_inverse_constant(1, 0, InverseKind::divergence) ==
        doctest::Approx(2 * std::sqrt(3.0)).epsilon(1e-9));
  CHECK(eigen_oracle_inverse_constant(1, 1, InverseKind::divergence) ==
        doctest::Approx(std::sqrt(60.0)).epsilon(1e-9));
  // endpoint-value eigenproblem: lambda = (p+2)(p+3)
  for (int p = 0; p <= 3; ++p)
    CHECK(eigen_oracle_inverse_constant(1, p, InverseKind::normal_trace) ==
          doctest::Approx(std::sqrt(Real(p + 2) * (p + 3))).epsilon(1e-9));
}

TEST_CASE("reference triangle lowest-order divergence oracle") {
  // maximize 2|div v| h / |v| over v = a + c x: optimum at a = -(1/3, 1/3) c
  CHECK(eigen_oracle_inverse_constant(2, 0, InverseKind::divergence) ==
        doctest::Approx(6 * std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("flux oracles stay below the closed-form constants") {
  for (int d = 1; d <= 2; ++d) {
    for (int p = 0; p <= 4; ++p) {
      double face = eigen_oracle_inverse_constant(d, p, InverseKind::normal_trace);
      CHECK(face <= face_inverse_constant(p, d, 1.0) * (1 + 1e-10));
      if (p >= 1) {
        double div = eigen_oracle_inverse_constant(d, p, InverseKind::divergence);
        CHECK(div <= div_inverse_constant(p, d, 1.0) * (1 + 1e-10));
      }
    }
  }
}

TEST_CASE("constant set assembly and provenance") {
  ConstantSet set = make_constants(1, 1, 1.0);
  CHECK(set.div_provenance == "formula");
  CHECK(set.c_star == doctest::Approx((set.c_div / std::sqrt(pi) + set.c_trace * set.c_face) /
                                      std::sqrt(2.0))
                          .epsilon(1e-14));
  CHECK(set.c_star > 9.0);
  CHECK(set.c_star < 10.0);

  ConstantSet z = make_constants(0, 2, 1 + std::sqrt(2.0));
  CHECK(z.div_provenance == "oracle");
  CHECK(z.c_div > 0);
  CHECK(z.c_div == doctest::Approx((1 + std::sqrt(2.0)) * 6 * std::sqrt(2.0)).epsilon(1e-9));

  // monotone in p, dim, theta
  for (int d = 1; d <= 2; ++d)
    for (int p = 0; p <= 2; ++p)
      CHECK(make_constants(p + 1, d, 1.5).c_star >= make_constants(p, d, 1.5).c_star);
  for (int p = 0; p <= 3; ++p) {
    CHECK(make_constants(p, 2, 1.5).c_star >= make_constants(p, 1, 1.5).c_star);
    CHECK(make_constants(p, 2, 2.5).c_star >= make_constants(p, 2, 1.5).c_star);
  }
}
