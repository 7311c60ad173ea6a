#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "eqflux/fields.hpp"
#include "eqflux/mesh.hpp"
#include "eqflux/problem.hpp"

namespace eqflux {

/// Continuous Lagrange space of degree p: vertex dofs, then face (edge) dofs
/// ordered along the face's ascending-vertex-id direction, then element
/// interior dofs. Orientation-independent, so shared dofs coincide.
class DofMap {
public:
  DofMap(const Mesh& mesh, int degree);

  int degree() const { return degree_; }
  int num_dofs() const { return num_dofs_; }
  int local_size() const { return static_cast<int>(element_dofs_.cols()); }
  const Eigen::MatrixXi& element_dofs() const { return element_dofs_; }
  const std::vector<bool>& dirichlet() const { return dirichlet_; }
  const LagrangeNodes& nodes() const { return nodes_; }
  /// Modal coefficients of a local nodal vector: c = Vinv * values.
  const Eigen::MatrixXd& vandermonde_inv() const { return vinv_; }

private:
  int degree_;
  int num_dofs_ = 0;
  Eigen::MatrixXi element_dofs_;
  std::vector<bool> dirichlet_;
  LagrangeNodes nodes_;
  Eigen::MatrixXd vinv_;
};

struct FemSolution {
  ScalarField u;
  Eigen::VectorXd nodal;        // all dofs, Dirichlet entries zero
  Real algebraic_residual = 0;  // |A x - b| / max(|b|, tiny), free dofs only
  int dofs = 0;
  int free_dofs = 0;
};

/// Galerkin solution of the reaction-diffusion problem. Bilinear integrals are
/// quadrature-exact; source moments use source_quad_degree (default 2p+4).
FemSolution solve(const Mesh& mesh, const ProblemSpec& spec, int degree,
                  int source_quad_degree = -1);

Real energy_norm_sq(const ScalarField& u, Real eps, Real kappa);
Eigen::VectorXd element_energy_sq(const ScalarField& u, Real eps, Real kappa);

struct ErrorReport {
  Eigen::VectorXd element_sq;
  Real total_sq = 0;
  Real bias = 0; // reference mode: |total at two refinement levels|
  std::string mode;
};

/// Energy error against the exact solution. Per-element values come from
/// quadrature; the total uses |||u|||^2 - 2(f,u_h) + |||u_h|||^2 when the
/// exact energy is available (quadrature-robust even with unresolved layers).
ErrorReport error_energy_exact(const ScalarField& u, const ProblemSpec& spec);

/// Energy distance to a twice-refined degree-(p+1) Galerkin solution. Never
/// exceeds the true error for nested spaces; bias reports the level gap.
ErrorReport error_energy_reference(const ScalarField& u, const ProblemSpec& spec);

} // namespace eqflux
