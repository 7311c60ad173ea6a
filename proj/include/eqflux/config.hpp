#pragma once

#include <memory>
#include <string>
#include <vector>

#include "eqflux/mesh.hpp"
#include "eqflux/problem.hpp"

namespace eqflux {

/// Run configuration, read from a JSON file with four blocks:
/// "problem", "discretization", "experiment", "output". Every key has a
/// default; unknown keys are rejected. See README.md for the schema.
struct RunConfig {
  // problem
  std::string case_name;      // builtin: layer1d | smooth1d | sine2d
  std::vector<Real> f_poly;   // or a source polynomial sum_k c_k x^k
  Real epsilon = 1;
  Real kappa = 0;

  // discretization
  int dim = 0;                // 0 = inferred from the case (f_poly: 1)
  int degree = 1;
  int n = 8;                  // generated mesh: intervals, or cells per side
  std::string mesh_file;      // overrides the generated mesh

  // experiment
  std::string kind = "single";   // single | refine | sweep | counterexample
  int levels = 4;                // refine: meshes n, 2n, ..., 2^(levels-1) n
  std::vector<Real> ratios;      // sweep, counterexample: kappa h / eps targets
  std::vector<int> ms;           // counterexample: oscillation frequencies
  std::string error_mode = "auto"; // auto | exact | reference | none
  int samples = 0;               // constants: random draws per table row

  // constants table ranges (constants subcommand only)
  int p_min = 1, p_max = 4;
  int d_min = 1, d_max = 2;
  Real theta = 2;

  // output
  std::string out_dir = "out";
  bool write_csv = true;
  int precision = 17;            // significant digits of CSV floats
};

/// Parse a config from text. `origin` names the source in error messages;
/// syntax errors keep the parser's line/column report.
RunConfig parse_config(const std::string& text, const std::string& origin = "config");

/// Read and parse a config file.
RunConfig load_config(const std::string& path);

/// Range and consistency checks. Rejects nonpositive epsilon, degrees
/// outside [1,4], missing mesh files, unknown case names, and experiment
/// blocks that do not fit their kind. Throws std::invalid_argument.
void validate_config(const RunConfig& config);

/// Problem described by the config: a builtin case or a polynomial source
/// with homogeneous Dirichlet data on the unit domain.
ProblemSpec problem_from_config(const RunConfig& config);

/// Mesh for the spec: read from config.mesh_file when set, otherwise
/// generated with parameter n (defaults to config.n when n <= 0).
std::shared_ptr<Mesh> mesh_from_config(const RunConfig& config, const ProblemSpec& spec,
                                       int n = 0);

} // namespace eqflux
