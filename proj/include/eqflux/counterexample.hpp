#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "eqflux/fields.hpp"
#include "eqflux/mesh.hpp"
#include "eqflux/problem.hpp"

namespace eqflux {

/// One-dimensional construction on (-1/2,1/2) with 2N = (m+1)^2 intervals of
/// size h = 1/(m+1)^2 and the piecewise-affine interpolant of cos(m pi x) as
/// source. f is then a discrete eigenfunction of the P1 Laplacian, so the
/// Galerkin solution, its element residual and its gradient jumps all reduce
/// to scalar multiples of f. Jump terms dominate, and the flux estimator
/// without the cut-off weights grows like sqrt(kappa h / eps).
struct CounterexampleConfig {
  int m = 7; // odd, so the interpolant vanishes at both endpoints
  Real epsilon = 1;
  Real kappa = 0;
};

inline int counterexample_intervals(int m) { return (m + 1) * (m + 1); }

/// Discrete eigenvalue 6/(2+cos(m pi h)) (1-cos(m pi h))/h^2 of the
/// interpolated cosine, h = 1/(m+1)^2.
Real counterexample_mu(int m);

/// cos(m pi x_i) at the node x_i = j h, j = i - N counted from the midpoint.
/// Evaluated by exact integer angle folding, so endpoint values are exact
/// zeros and the interior values are correctly rounded.
Real counterexample_node_value(int m, int i);

struct CounterexampleCase {
  CounterexampleConfig config;
  Real h = 0;
  Real mu = 0;
  Real solution_factor = 0; // u_h = solution_factor * f
  Real residual_factor = 0; // element residual = residual_factor * f
  Real jump_factor = 0;     // |jump at x_i| = jump_factor * |f(x_i)|
  std::shared_ptr<Mesh> mesh;
  std::shared_ptr<const ScalarField> f; // nodal P1 interpolant of cos(m pi x)
  ScalarField u_h;                      // closed-form Galerkin solution
  ProblemSpec spec;                     // feeds the fem/estimator pipeline
};

/// Throws invalid_argument unless m is odd and positive, eps > 0, kappa >= 0.
CounterexampleCase make_counterexample(const CounterexampleConfig& config);

/// Nodal interpolant values at all mesh vertices, endpoints exactly zero.
Eigen::VectorXd counterexample_nodal_values(const CounterexampleCase& c);

struct SweepPoint {
  int m = 0;
  Real h = 0;
  Real epsilon = 0;
  Real kappa = 0;
  Real ratio = 0;            // kappa h / eps
  Real jump_sum = 0;         // (sum_F inv(eps) alpha_F |j_h|_F^2)^(1/2)
  Real residual_sum = 0;     // (sum_K alpha_K^2 |r_h|_K^2)^(1/2)
  Real unweighted_ratio = 0; // |eps grad u_h + inv(eps) sigma| / jump_sum
  Real weighted_ratio = 0;   // w-weighted flux total / jump_sum
  Real mu_times_h = 0;
};

struct SweepStudy {
  std::vector<SweepPoint> rows;
  Real slope_unweighted = 0; // log-log slope of unweighted_ratio vs ratio
  Real slope_weighted = 0;
  Real dominance_max = 0; // max residual_sum^2 / jump_sum^2, bounded by design
  Real mu_times_h_min = 0;
  Real mu_times_h_max = 0;
  int excluded = 0; // points with kappa h / eps below 1
  std::vector<std::string> notices;
};

/// One sweep point per (m, target ratio) pair with kappa = ratio eps / h:
/// solve the closed form, equilibrate, and record the flux/jump ratios.
/// Pairs with ratio below 1 are excluded with a notice, since the residual
/// weights change branch there.
SweepStudy nonrobustness_study(Real epsilon, const std::vector<int>& ms,
                               const std::vector<Real>& ratios, int num_threads = 1);

/// Data rows, then key,value summary rows (slopes, dominance, mu h range,
/// exclusion count and notices).
void write_sweep_csv(std::ostream& out, const SweepStudy& study);
void write_sweep_csv(const std::string& path, const SweepStudy& study);

} // namespace eqflux
