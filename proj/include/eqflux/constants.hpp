#pragma once

#include <string>

#include "eqflux/mesh.hpp"

namespace eqflux {

/// Trace inequality constant for zero-mean functions:
/// |v|_dK <= C(theta,d) |grad v|^(1/2) |v|^(1/2) scaled by element size.
Real trace_constant(Real theta, int dim);

/// h^(1/2) |v.n|_dK <= C |v| over the degree-p flux space.
Real face_inverse_constant(int p, int dim, Real theta);

/// h |div v| <= C |v| over the degree-p flux space. Vanishes at p = 0 even
/// though div is nonzero there; effective values fall back to the oracle.
Real div_inverse_constant(int p, int dim, Real theta);

/// Derivative bound on the unit interval: |v'| <= C |v| over P_p.
/// The closed form degenerates at p = 1 (true constant 2*sqrt(3)).
Real cp1_bound(int p);
Real cp1_effective(int p); // max of the closed form and the interval oracle

/// Componentwise derivative bound on the unit d-simplex, chained from the
/// closed-form interval bound; inherits its degeneracy at p <= 1.
Real cpd_bound(int p, int dim);

enum class InverseKind { derivative, divergence, normal_trace };

/// Sharp constant on the reference element by a generalized eigenproblem:
/// derivative over P_p (1d), or h|div v| / h^(1/2)|v.n| over the flux space.
Real eigen_oracle_inverse_constant(int dim, int p, InverseKind kind);

/// Constants entering the error bound for degree p on shape regularity theta.
struct ConstantSet {
  int p = 1;
  int dim = 1;
  Real theta = 1;
  Real c_trace = 0;
  Real c_face = 0;
  Real c_div = 0;
  Real c_star = 0;
  std::string div_provenance; // "formula" or "oracle"
};

/// Effective constants: each is the max of the closed-form bound and the
/// soundly rescaled oracle value, so anomalous formula zeros cannot
/// invalidate the guarantee.
ConstantSet make_constants(int p, int dim, Real theta);

} // namespace eqflux
