#pragma once

#include <string>

#include "eqflux/fields.hpp"
#include "eqflux/mesh.hpp"

namespace eqflux {

/// Data of -eps^2 Lap(u) + kappa^2 u = f with homogeneous Dirichlet condition
/// on a rectangle or interval. Exact-solution members are optional.
struct ProblemSpec {
  std::string name;
  int dim = 1;
  Real epsilon = 1;
  Real kappa = 0;
  Real ax = 0, bx = 1, ay = 0, by = 1;
  SourceTerm f;
  ScalarFunction exact_u;    // empty when the solution is unknown
  VectorFunction exact_grad; // empty when the solution is unknown
  Real exact_energy_sq = -1; // |||u|||^2, negative when unavailable
};

/// 1d boundary layer on (-1/2,1/2): u = 1 - cosh(kappa x/eps)/cosh(kappa/(2 eps)),
/// f = kappa^2. Layers of width eps/kappa; evaluation is overflow-safe.
ProblemSpec make_layer_case(Real eps, Real kappa);

/// 1d smooth solution u = sin(pi x (2x-1)) on (0,1) with derived f.
ProblemSpec make_smooth_case(Real eps, Real kappa);

/// 2d u = sin(pi x) sin(pi y) on the unit square, f = (2 eps^2 pi^2 + kappa^2) u.
ProblemSpec make_sine_case(Real eps, Real kappa);

ProblemSpec make_case(const std::string& name, Real eps, Real kappa);

/// Mesh of the case domain with n intervals (1d) or an n x n split grid (2d).
Mesh make_case_mesh(const ProblemSpec& spec, int n);

} // namespace eqflux
