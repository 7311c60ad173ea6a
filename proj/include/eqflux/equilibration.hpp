#pragma once

#include <Eigen/Dense>

#include <vector>

#include "eqflux/constants.hpp"
#include "eqflux/fields.hpp"
#include "eqflux/mesh.hpp"
#include "eqflux/problem.hpp"

namespace eqflux {

/// Local mixed space around one vertex. Flux dofs are the per-element moment
/// dofs with a shared index on faces interior to the patch (H(div) glue) and
/// -1 where the normal flux is pinned to zero: the whole patch boundary for an
/// interior vertex, the patch boundary minus the domain boundary otherwise.
/// Scalar dofs are broken degree-p modes, element-major.
struct PatchSpace {
  int vertex = -1;
  int degree = 1;
  std::vector<int> elements;
  Eigen::MatrixXi flux_index; // nelem x nfluxdofs, -1 = constrained to zero
  int num_flux_dofs = 0;
  int num_scalar_dofs = 0;
  bool mean_constraint = false; // kappa = 0 and interior: (q,1) = 0 on the patch
};

PatchSpace make_patch_space(const Mesh& mesh, int vertex, int degree, Real kappa);

/// min{1, c_star sqrt(eps/(kappa h))}; 1 when kappa = 0.
Real patch_weight(Real eps, Real kappa, Real h, Real c_star);

/// Hat-function residual (f,psi_a) - eps^2(grad u_h,grad psi_a) - kappa^2(u_h,psi_a)
/// over the patch: zero for a Galerkin solution by orthogonality, and the
/// solvability condition of the kappa = 0 patch problems. Source moments use
/// quadrature of degree source_quad_degree (default 2p+4, as in solve()).
Real check_neumann_compatibility(const Mesh& mesh, const ScalarField& u_h,
                                 const ProblemSpec& spec, int vertex,
                                 int source_quad_degree = -1);

struct PatchSolution {
  int vertex = -1;
  Eigen::MatrixXd sigma; // nelem x nfluxdofs, element rows follow space.elements
  Eigen::MatrixXd phi;   // nelem x nscalar modal coefficients
  Eigen::MatrixXd gamma; // multiplier, phi = gamma + projection of psi_a u_h
  Real objective = 0;    // w^2 |eps psi grad u_h + inv(eps) sigma|^2 + |kappa gamma|^2
  Real stationarity = 0; // relative residual of the optimality system
  Real weight = 1;
  bool reaction_dropped = false; // kappa block numerically degenerate
};

/// One constrained least-squares patch problem, solved through its saddle
/// system in the scaled unknown inv(eps) sigma with a dense LU factorization.
/// When kappa^2 |omega_a| falls below 1e-12 of the remaining matrix scale the
/// reaction block is dropped and phi^a is the projection of psi_a u_h.
PatchSolution solve_patch(const Mesh& mesh, const PatchSpace& space,
                          const ScalarField& u_h, const ProblemSpec& spec,
                          Real weight, int source_quad_degree = -1);

struct Reconstruction {
  FluxField sigma;  // H(div)-conforming equilibrated flux
  ScalarField phi;  // broken postprocessed potential
  Eigen::VectorXd weights;    // per vertex
  Eigen::VectorXd objectives; // per vertex
  int degree = 1;
  int source_quad_degree = 0;
};

/// Solve all vertex patches and accumulate sigma = sum_a sigma^a,
/// phi = sum_a phi^a. Patch solves are independent and may run on
/// num_threads threads; the merge is serial in vertex order, so the
/// result is bitwise independent of the thread count.
Reconstruction reconstruct(const Mesh& mesh, const ScalarField& u_h,
                           const ProblemSpec& spec, const ConstantSet& constants,
                           int num_threads = 1, int source_quad_degree = -1);

struct EquilibrationCheck {
  Eigen::VectorXd element_residual; // L2(K) of div sigma + kappa^2 phi - Pi_p f
  Real l2 = 0;
  Real max = 0;   // largest elementwise residual norm
  Real scale = 0; // |Pi_p f| + kappa^2 |phi| + |div sigma|
};

EquilibrationCheck verify_equilibration(const Reconstruction& rec,
                                        const ProblemSpec& spec);

} // namespace eqflux
