#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "eqflux/constants.hpp"
#include "eqflux/equilibration.hpp"
#include "eqflux/fields.hpp"
#include "eqflux/mesh.hpp"
#include "eqflux/problem.hpp"

namespace eqflux {

/// Cut-off and residual weights. The 1/kappa branches follow the kappa = 0
/// convention 1/kappa = +inf, so the mesh-size branch always wins there.
struct ElementWeights {
  Eigen::VectorXd w;          // min{1, c_star sqrt(eps/(kappa h_K))}
  Eigen::VectorXd wtilde;     // min{h_K/(pi eps), 1/kappa}
  Eigen::VectorXd alpha;      // min{h_K/eps, 1/kappa}
  Eigen::VectorXd alpha_face; // min{h_F/eps, 1/kappa}, every face
};

ElementWeights element_weights(const Mesh& mesh, const ProblemSpec& spec,
                               const ConstantSet& constants);

/// Elementwise pieces of the two estimators. eta^2 is the sum of bound_sq,
/// the squared three-term brackets; eta_res^2 sums the squared element
/// residual terms plus the interior-face jump terms.
struct EstimatorReport {
  ElementWeights weights;

  Eigen::VectorXd flux;        // w_K |eps grad u_h + inv(eps) sigma|_K
  Eigen::VectorXd flux_raw;    // the same norm without w_K
  Eigen::VectorXd potential;   // |kappa (u_h - phi)|_K
  Eigen::VectorXd oscillation; // wtilde_K |f - Pi_p f|_K
  Eigen::VectorXd osc_raw;     // |f - Pi_p f|_K
  Eigen::VectorXd bound_sq;    // (flux + potential + oscillation)^2
  Real eta = 0;
  Real unweighted_flux = 0; // |eps grad u_h + inv(eps) sigma| over the domain

  Eigen::VectorXd residual; // alpha_K |Pi_p f + eps^2 lap u_h - kappa^2 u_h|_K
  Eigen::VectorXd jump_sq;  // per face: inv(eps) alpha_F |j_h|_F^2, boundary rows zero
  Real eta_res = 0;
};

/// Fill the guaranteed-bound part from an equilibrated reconstruction.
/// Pi_p f reuses the reconstruction's source quadrature degree so the
/// oscillation matches the equilibration identity exactly.
EstimatorReport guaranteed_estimate(const ScalarField& u_h, const Reconstruction& rec,
                                    const ProblemSpec& spec, const ElementWeights& weights);

/// Fill the residual-estimator part: element residuals against Pi_p f and
/// jumps -eps^2 [grad u_h . n] over interior faces.
EstimatorReport residual_estimate(const ScalarField& u_h, const ProblemSpec& spec,
                                  const ElementWeights& weights,
                                  int source_quad_degree = -1);

/// Both estimators in one report.
EstimatorReport estimate(const ScalarField& u_h, const Reconstruction& rec,
                         const ProblemSpec& spec, const ConstantSet& constants);

/// Local efficiency ratios. For element K the numerator is
/// flux_K^2 + potential_K^2; ratio_res divides by the residual terms summed
/// over the vertex-patch neighborhood of K (elements and patch-interior
/// faces of all patches touching K), ratio_err by the neighborhood error
/// plus alpha^2-weighted oscillation. Zero denominators are flagged as not
/// applicable instead of producing infinities.
struct EfficiencyReport {
  Eigen::VectorXd ratio_res;
  Eigen::VectorXd ratio_err;
  std::vector<std::uint8_t> res_applicable;
  std::vector<std::uint8_t> err_applicable;
  Real max_ratio_res = 0;
  Real max_ratio_err = 0;
  int not_applicable = 0; // elements with a zero ratio_res denominator
};

EfficiencyReport efficiency_report(const Mesh& mesh, const EstimatorReport& report,
                                   const Eigen::VectorXd& element_error_sq = Eigen::VectorXd());

/// One row per element: id, h, weights, estimator terms, then a totals row
/// holding the column norms, eta in the bound column and the face-summed
/// jump total (so eta_res^2 = residual_total^2 + jump_total^2).
void write_report_csv(std::ostream& out, const Mesh& mesh, const EstimatorReport& report);
void write_report_csv(const std::string& path, const Mesh& mesh, const EstimatorReport& report);

/// Least-squares slope of log(y) against log(x).
Real loglog_slope(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

} // namespace eqflux
