#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "eqflux/config.hpp"
#include "eqflux/constants.hpp"

namespace eqflux {

struct RunArtifacts {
  std::vector<std::string> files;                           // paths written
  std::vector<std::pair<std::string, std::string>> summary; // summary.csv rows
};

/// Execute a CLI action: solve | estimate | residual | sweep | counterexample
/// | constants. "estimate" runs the experiment the config describes (single
/// or refine); sweep and counterexample insist on the matching kind. All
/// results are computed before the first file is opened, so a rejected config
/// or a failed run leaves the output directory untouched. CSV bytes depend on
/// the config (and, for sampling, the seed) but never on num_threads.
RunArtifacts run_action(const RunConfig& config, const std::string& action,
                        int num_threads = 1, unsigned seed = 0);

/// One row of the constants table. oracle_derivative and derivative_formula
/// (the closed form at degree p+1, which the divergence chain uses) apply to
/// d = 1 only and are negative otherwise. The note column marks the rows
/// where the closed form at the row's own degree degenerates and the oracle
/// is the authority.
struct ConstantsRow {
  int p = 0, d = 0;
  Real theta = 1;
  Real c_trace = 0, c_face = 0, c_div = 0, c_star = 0;
  Real oracle_derivative = -1;
  Real derivative_formula = -1;
  Real oracle_divergence = 0, oracle_trace = 0;
  std::string div_provenance;
  bool oracle_leq_formula = false;
  std::string note;
};

std::vector<ConstantsRow> constants_table(int p_min, int p_max, int d_min, int d_max,
                                          Real theta);
void write_constants_csv(std::ostream& out, const std::vector<ConstantsRow>& rows,
                         int precision = 17);

/// Monte Carlo soundness check of one closed-form bound on random simplices,
/// each judged with its own shape parameter. worst is the largest observed
/// left side over bound * right side; a violation is worst > 1 + 1e-10.
struct BoundSample {
  long long draws = 0;
  long long violations = 0;
  Real worst = 0;
};

/// kinds: derivative (1d, degree-p polynomials against the degree-shifted
/// closed form), divergence and normal_trace (degree-p flux fields against
/// the inverse-inequality constants).
BoundSample sample_inverse_bound(InverseKind kind, int p, int dim, int draws, unsigned seed);

/// Zero-mean polynomials of the given degree against the multiplicative
/// trace bound |w|_bdry <= C |grad w|^(1/2) |w|^(1/2).
BoundSample sample_trace_bound(int degree, int dim, int draws, unsigned seed);

} // namespace eqflux
