#include "eqflux/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "eqflux/basis.hpp"
#include "eqflux/counterexample.hpp"
#include "eqflux/equilibration.hpp"
#include "eqflux/estimators.hpp"
#include "eqflux/fem.hpp"
#include "eqflux/quadrature.hpp"

namespace eqflux {

namespace {

using Json = nlohmann::ordered_json;
using Summary = std::vector<std::pair<std::string, std::string>>;

std::string fmt(Real v, int precision) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*e", precision - 1, v);
  return buf;
}

Real mesh_h_max(const Mesh& mesh) {
  Real h = 0;
  for (int e = 0; e < mesh.num_elements(); ++e)
    h = std::max(h, diameter(mesh, e));
  return h;
}

// Everything below renders file contents in memory; commit() is the only
// place that touches the filesystem, so failed runs write nothing.
struct OutputSet {
  std::vector<std::pair<std::string, std::string>> files;

  void add(const std::string& name, std::string content) {
    files.emplace_back(name, std::move(content));
  }

  std::vector<std::string> commit(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> written;
    for (const auto& [name, content] : files) {
      fs::path target = fs::path(dir) / name;
      fs::path tmp = target;
      tmp += ".tmp";
      {
        std::ofstream out(tmp, std::ios::binary);
        if (!out)
          throw std::runtime_error("cannot open " + tmp.string());
        out << content;
        if (!out)
          throw std::runtime_error("cannot write " + tmp.string());
      }
      fs::rename(tmp, target);
      written.push_back(target.string());
    }
    return written;
  }
};

std::string summary_csv(const Summary& rows) {
  std::string s = "key,value\n";
  for (const auto& [k, v] : rows)
    s += k + "," + v + "\n";
  return s;
}

Json config_json(const RunConfig& c) {
  Json j;
  j["problem"] = {{"case", c.case_name},
                  {"f_poly", c.f_poly},
                  {"epsilon", c.epsilon},
                  {"kappa", c.kappa}};
  j["discretization"] = {
      {"dim", c.dim}, {"degree", c.degree}, {"n", c.n}, {"mesh", c.mesh_file}};
  j["experiment"] = {{"kind", c.kind},     {"levels", c.levels}, {"ratios", c.ratios},
                     {"ms", c.ms},         {"error", c.error_mode}, {"samples", c.samples},
                     {"p_min", c.p_min},   {"p_max", c.p_max},   {"d_min", c.d_min},
                     {"d_max", c.d_max},   {"theta", c.theta}};
  j["output"] = {{"dir", c.out_dir}, {"csv", c.write_csv}, {"precision", c.precision}};
  return j;
}

Json constants_json(const ConstantSet& s) {
  return Json{{"p", s.p},
              {"dim", s.dim},
              {"theta", s.theta},
              {"c_trace", s.c_trace},
              {"c_face", s.c_face},
              {"c_div", s.c_div},
              {"c_star", s.c_star},
              {"div_provenance", s.div_provenance}};
}

std::string manifest_json(const RunConfig& c, const std::string& action,
                          const std::optional<ConstantSet>& constants,
                          const Json& diagnostics, const std::vector<std::string>& names) {
  Json j;
  j["action"] = action;
  j["config"] = config_json(c);
  if (constants)
    j["constants"] = constants_json(*constants);
  if (!diagnostics.empty())
    j["diagnostics"] = diagnostics;
  j["outputs"] = names;
  return j.dump(2) + "\n";
}

enum class RunDepth { solve_only, residual_only, full };

struct SingleRun {
  std::shared_ptr<Mesh> mesh;
  ProblemSpec spec;
  ConstantSet constants;
  Real h_max = 0;
  std::optional<FemSolution> sol;
  std::optional<Reconstruction> rec;
  EstimatorReport rep;
  EfficiencyReport eff;
  ErrorReport err;
  EquilibrationCheck eq;
  Real sigma_jump = 0;
  bool have_error = false;
  std::string error_mode = "none";
};

std::string resolve_error_mode(const RunConfig& c, const ProblemSpec& spec) {
  if (c.error_mode != "auto")
    return c.error_mode;
  return (spec.exact_u || spec.exact_energy_sq >= 0) ? "exact" : "none";
}

SingleRun run_single(const RunConfig& c, const ProblemSpec& spec,
                     std::shared_ptr<Mesh> mesh, RunDepth depth, int threads) {
  SingleRun r;
  r.mesh = std::move(mesh);
  r.spec = spec;
  r.h_max = mesh_h_max(*r.mesh);
  r.constants = make_constants(c.degree, spec.dim, shape_regularity(*r.mesh));
  r.sol.emplace(solve(*r.mesh, spec, c.degree));

  if (depth == RunDepth::full) {
    r.rec.emplace(reconstruct(*r.mesh, r.sol->u, spec, r.constants, threads));
    r.rep = estimate(r.sol->u, *r.rec, spec, r.constants);
    r.eq = verify_equilibration(*r.rec, spec);
    r.sigma_jump = max_normal_jump(r.rec->sigma, 2 * c.degree + 2);
  } else if (depth == RunDepth::residual_only) {
    ElementWeights w = element_weights(*r.mesh, spec, r.constants);
    r.rep = residual_estimate(r.sol->u, spec, w);
  }

  r.error_mode = resolve_error_mode(c, spec);
  if (r.error_mode == "exact") {
    if (!(spec.exact_u || spec.exact_energy_sq >= 0))
      throw std::invalid_argument("experiment.error exact needs a case with a known solution");
    r.err = error_energy_exact(r.sol->u, spec);
    r.have_error = true;
  } else if (r.error_mode == "reference") {
    r.err = error_energy_reference(r.sol->u, spec);
    r.have_error = true;
  }

  if (depth == RunDepth::full)
    r.eff = efficiency_report(*r.mesh, r.rep,
                              r.have_error ? r.err.element_sq : Eigen::VectorXd());
  return r;
}

Real run_error(const SingleRun& r) {
  return r.have_error ? std::sqrt(std::max<Real>(r.err.total_sq, 0)) : 0;
}

Real run_effectivity(const SingleRun& r) {
  Real e = run_error(r);
  return e > 0 ? r.rep.eta / e : 0;
}

std::string solution_csv(const SingleRun& r, int prec) {
  const Mesh& mesh = *r.mesh;
  Eigen::VectorXd energy =
      element_energy_sq(r.sol->u, r.spec.epsilon, r.spec.kappa);
  std::string s = "element,h,energy_sq,error_sq\n";
  for (int e = 0; e < mesh.num_elements(); ++e) {
    Real esq = r.have_error ? r.err.element_sq(e) : 0;
    s += std::to_string(e) + "," + fmt(diameter(mesh, e), prec) + "," +
         fmt(energy(e), prec) + "," + fmt(esq, prec) + "\n";
  }
  s += "total,," + fmt(energy.sum(), prec) + "," +
       fmt(r.have_error ? r.err.total_sq : 0, prec) + "\n";
  return s;
}

std::string errors_csv(const SingleRun& r, int prec) {
  std::string s = "element,error_sq\n";
  for (int e = 0; e < r.err.element_sq.size(); ++e)
    s += std::to_string(e) + "," + fmt(r.err.element_sq(e), prec) + "\n";
  s += "total," + fmt(r.err.total_sq, prec) + "\n";
  return s;
}

std::string efficiency_csv(const SingleRun& r, int prec) {
  const int ne = r.mesh->num_elements();
  const bool have_err = static_cast<int>(r.eff.ratio_err.size()) == ne;
  std::string s = "element,ratio_res,res_applicable,ratio_err,err_applicable\n";
  for (int e = 0; e < ne; ++e) {
    s += std::to_string(e) + "," + fmt(r.eff.ratio_res(e), prec) + "," +
         std::to_string(int(r.eff.res_applicable[static_cast<size_t>(e)])) + "," +
         fmt(have_err ? r.eff.ratio_err(e) : 0, prec) + "," +
         std::to_string(have_err ? int(r.eff.err_applicable[static_cast<size_t>(e)]) : 0) +
         "\n";
  }
  return s;
}

std::string report_csv(const SingleRun& r) {
  std::ostringstream ss;
  write_report_csv(ss, *r.mesh, r.rep);
  return ss.str();
}

void estimate_summary(const SingleRun& r, int prec, Summary& s) {
  s.emplace_back("elements", std::to_string(r.mesh->num_elements()));
  s.emplace_back("h_max", fmt(r.h_max, prec));
  s.emplace_back("eta", fmt(r.rep.eta, prec));
  s.emplace_back("eta_res", fmt(r.rep.eta_res, prec));
  s.emplace_back("unweighted_flux", fmt(r.rep.unweighted_flux, prec));
  s.emplace_back("error_mode", r.error_mode);
  if (r.have_error) {
    s.emplace_back("error", fmt(run_error(r), prec));
    s.emplace_back("effectivity", fmt(run_effectivity(r), prec));
  }
  s.emplace_back("max_ratio_res", fmt(r.eff.max_ratio_res, prec));
  s.emplace_back("max_ratio_err", fmt(r.eff.max_ratio_err, prec));
  s.emplace_back("not_applicable", std::to_string(r.eff.not_applicable));
}

Json run_diagnostics(const SingleRun& r) {
  Json d = Json::object();
  d["dofs"] = r.sol->dofs;
  d["free_dofs"] = r.sol->free_dofs;
  d["algebraic_residual"] = r.sol->algebraic_residual;
  if (r.rec) {
    d["equilibration_l2"] = r.eq.l2;
    d["equilibration_max"] = r.eq.max;
    d["equilibration_scale"] = r.eq.scale;
    d["max_normal_jump"] = r.sigma_jump;
    d["flux_degree"] = r.rec->degree;
    d["source_quad_degree"] = r.rec->source_quad_degree;
  }
  if (r.have_error && r.err.mode == "reference")
    d["error_bias"] = r.err.bias;
  return d;
}

struct ActionResult {
  OutputSet out;
  Summary summary;
  std::optional<ConstantSet> constants;
  Json diagnostics = Json::object();
};

ActionResult do_solve(const RunConfig& c) {
  ProblemSpec spec = problem_from_config(c);
  SingleRun r = run_single(c, spec, mesh_from_config(c, spec), RunDepth::solve_only, 1);
  ActionResult res;
  if (c.write_csv)
    res.out.add("solution.csv", solution_csv(r, c.precision));
  res.summary.emplace_back("elements", std::to_string(r.mesh->num_elements()));
  res.summary.emplace_back("h_max", fmt(r.h_max, c.precision));
  res.summary.emplace_back(
      "energy_sq", fmt(element_energy_sq(r.sol->u, spec.epsilon, spec.kappa).sum(),
                       c.precision));
  res.summary.emplace_back("error_mode", r.error_mode);
  if (r.have_error)
    res.summary.emplace_back("error", fmt(run_error(r), c.precision));
  res.diagnostics = run_diagnostics(r);
  return res;
}

ActionResult do_residual(const RunConfig& c) {
  ProblemSpec spec = problem_from_config(c);
  SingleRun r = run_single(c, spec, mesh_from_config(c, spec), RunDepth::residual_only, 1);
  ActionResult res;
  if (c.write_csv)
    res.out.add("elements.csv", report_csv(r));
  res.summary.emplace_back("elements", std::to_string(r.mesh->num_elements()));
  res.summary.emplace_back("h_max", fmt(r.h_max, c.precision));
  res.summary.emplace_back("eta_res", fmt(r.rep.eta_res, c.precision));
  res.constants = r.constants;
  res.diagnostics = run_diagnostics(r);
  return res;
}

ActionResult do_estimate_single(const RunConfig& c, int threads) {
  ProblemSpec spec = problem_from_config(c);
  SingleRun r = run_single(c, spec, mesh_from_config(c, spec), RunDepth::full, threads);
  ActionResult res;
  if (c.write_csv) {
    res.out.add("elements.csv", report_csv(r));
    res.out.add("efficiency.csv", efficiency_csv(r, c.precision));
    if (r.have_error)
      res.out.add("errors.csv", errors_csv(r, c.precision));
  }
  estimate_summary(r, c.precision, res.summary);
  res.constants = r.constants;
  res.diagnostics = run_diagnostics(r);
  return res;
}

ActionResult do_refine(const RunConfig& c, int threads) {
  ProblemSpec spec = problem_from_config(c);
  const int levels = c.levels;
  std::vector<SingleRun> runs;
  runs.reserve(static_cast<size_t>(levels));
  for (int l = 0; l < levels; ++l) {
    int n = c.n << l;
    runs.push_back(run_single(c, spec, mesh_from_config(c, spec, n), RunDepth::full, threads));
  }
  const SingleRun& fine = runs.back();

  std::string csv =
      "level,n,elements,dofs,h_max,eta,eta_res,unweighted_flux,error,effectivity,"
      "max_ratio_res,max_ratio_err,not_applicable\n";
  for (int l = 0; l < levels; ++l) {
    const SingleRun& r = runs[static_cast<size_t>(l)];
    csv += std::to_string(l) + "," + std::to_string(c.n << l) + "," +
           std::to_string(r.mesh->num_elements()) + "," + std::to_string(r.sol->dofs) + "," +
           fmt(r.h_max, c.precision) + "," + fmt(r.rep.eta, c.precision) + "," +
           fmt(r.rep.eta_res, c.precision) + "," + fmt(r.rep.unweighted_flux, c.precision) +
           "," + fmt(run_error(r), c.precision) + "," + fmt(run_effectivity(r), c.precision) +
           "," + fmt(r.eff.max_ratio_res, c.precision) + "," +
           fmt(r.eff.max_ratio_err, c.precision) + "," + std::to_string(r.eff.not_applicable) +
           "\n";
  }

  ActionResult res;
  if (c.write_csv) {
    res.out.add("levels.csv", csv);
    for (int l = 0; l < levels; ++l)
      res.out.add("elements_" + std::to_string(l) + ".csv",
                  report_csv(runs[static_cast<size_t>(l)]));
  }

  res.summary.emplace_back("levels", std::to_string(levels));
  estimate_summary(fine, c.precision, res.summary);
  if (levels >= 2) {
    Eigen::VectorXd hs(levels), etas(levels), errs(levels);
    bool eta_pos = true, err_pos = true;
    for (int l = 0; l < levels; ++l) {
      const SingleRun& r = runs[static_cast<size_t>(l)];
      hs(l) = r.h_max;
      etas(l) = r.rep.eta;
      errs(l) = run_error(r);
      eta_pos = eta_pos && etas(l) > 0;
      err_pos = err_pos && errs(l) > 0;
    }
    if (eta_pos)
      res.summary.emplace_back("eta_rate", fmt(loglog_slope(hs, etas), c.precision));
    if (err_pos)
      res.summary.emplace_back("error_rate", fmt(loglog_slope(hs, errs), c.precision));
  }
  res.constants = fine.constants;
  res.diagnostics = run_diagnostics(fine);
  return res;
}

ActionResult do_sweep(const RunConfig& c, int threads) {
  ProblemSpec base = make_case(c.case_name, c.epsilon, 0);
  std::shared_ptr<Mesh> mesh = mesh_from_config(c, base);
  const Real h = mesh_h_max(*mesh);
  const int np = static_cast<int>(c.ratios.size());

  std::vector<ProblemSpec> specs;
  specs.reserve(static_cast<size_t>(np));
  for (Real ratio : c.ratios)
    specs.push_back(make_case(c.case_name, c.epsilon, ratio * c.epsilon / h));

  // points run concurrently, each on one thread; results keep point order
  std::vector<std::optional<SingleRun>> runs(static_cast<size_t>(np));
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const int workers = std::max(1, std::min(threads, np));
  auto work = [&](int t) {
    for (int i = t; i < np; i += workers) {
      try {
        runs[static_cast<size_t>(i)] =
            run_single(c, specs[static_cast<size_t>(i)], mesh, RunDepth::full, 1);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t)
      pool.emplace_back(work, t);
    for (auto& th : pool)
      th.join();
  }
  if (failure)
    std::rethrow_exception(failure);

  std::string csv =
      "ratio,kappa,n,eta,eta_res,unweighted_flux,error,effectivity,max_ratio_res,"
      "max_ratio_err,not_applicable\n";
  Eigen::VectorXd ratios(np), effs(np), resmax(np);
  int na_total = 0;
  for (int i = 0; i < np; ++i) {
    const SingleRun& r = *runs[static_cast<size_t>(i)];
    ratios(i) = c.ratios[static_cast<size_t>(i)];
    effs(i) = run_effectivity(r);
    resmax(i) = r.eff.max_ratio_res;
    na_total += r.eff.not_applicable;
    csv += fmt(ratios(i), c.precision) + "," + fmt(r.spec.kappa, c.precision) + "," +
           std::to_string(c.n) + "," + fmt(r.rep.eta, c.precision) + "," +
           fmt(r.rep.eta_res, c.precision) + "," + fmt(r.rep.unweighted_flux, c.precision) +
           "," + fmt(run_error(r), c.precision) + "," + fmt(effs(i), c.precision) + "," +
           fmt(resmax(i), c.precision) + "," + fmt(r.eff.max_ratio_err, c.precision) + "," +
           std::to_string(r.eff.not_applicable) + "\n";
  }

  ActionResult res;
  if (c.write_csv)
    res.out.add("sweep.csv", csv);
  res.summary.emplace_back("points", std::to_string(np));
  res.summary.emplace_back("effectivity_min", fmt(effs.minCoeff(), c.precision));
  res.summary.emplace_back("effectivity_max", fmt(effs.maxCoeff(), c.precision));
  if (effs.minCoeff() > 0)
    res.summary.emplace_back("effectivity_spread",
                             fmt(effs.maxCoeff() / effs.minCoeff(), c.precision));
  if (np >= 2 && effs.minCoeff() > 0)
    res.summary.emplace_back("effectivity_slope",
                             fmt(loglog_slope(ratios, effs), c.precision));
  res.summary.emplace_back("ratio_res_min", fmt(resmax.minCoeff(), c.precision));
  res.summary.emplace_back("ratio_res_max", fmt(resmax.maxCoeff(), c.precision));
  if (resmax.minCoeff() > 0)
    res.summary.emplace_back("ratio_res_spread",
                             fmt(resmax.maxCoeff() / resmax.minCoeff(), c.precision));
  res.summary.emplace_back("not_applicable_total", std::to_string(na_total));
  res.constants = runs[0]->constants;
  Json d = Json::object();
  Real alg = 0;
  for (const auto& r : runs)
    alg = std::max(alg, r->sol->algebraic_residual);
  d["max_algebraic_residual"] = alg;
  d["h"] = h;
  res.diagnostics = d;
  return res;
}

ActionResult do_counterexample(const RunConfig& c, int threads) {
  SweepStudy study = nonrobustness_study(c.epsilon, c.ms, c.ratios, threads);
  ActionResult res;
  if (c.write_csv) {
    std::ostringstream ss;
    write_sweep_csv(ss, study);
    res.out.add("sweep.csv", ss.str());
  }
  res.summary.emplace_back("rows", std::to_string(study.rows.size()));
  res.summary.emplace_back("excluded", std::to_string(study.excluded));
  res.summary.emplace_back("slope_unweighted", fmt(study.slope_unweighted, c.precision));
  res.summary.emplace_back("slope_weighted", fmt(study.slope_weighted, c.precision));
  res.summary.emplace_back("dominance_max", fmt(study.dominance_max, c.precision));
  res.summary.emplace_back("mu_times_h_min", fmt(study.mu_times_h_min, c.precision));
  res.summary.emplace_back("mu_times_h_max", fmt(study.mu_times_h_max, c.precision));
  res.constants = make_constants(1, 1, 1.0);
  if (!study.notices.empty())
    res.diagnostics["notices"] = study.notices;
  return res;
}

ActionResult do_constants(const RunConfig& c, unsigned seed) {
  std::vector<ConstantsRow> rows =
      constants_table(c.p_min, c.p_max, c.d_min, c.d_max, c.theta);
  ActionResult res;
  if (c.write_csv) {
    std::ostringstream ss;
    write_constants_csv(ss, rows, c.precision);
    res.out.add("constants.csv", ss.str());
  }

  int anomalies = 0;
  bool all_ok = true;
  for (const auto& row : rows) {
    anomalies += row.note.empty() ? 0 : 1;
    all_ok = all_ok && row.oracle_leq_formula;
  }
  res.summary.emplace_back("rows", std::to_string(rows.size()));
  res.summary.emplace_back("anomalies", std::to_string(anomalies));
  res.summary.emplace_back("all_oracles_bounded", all_ok ? "true" : "false");

  if (c.samples > 0) {
    std::string csv = "kind,p,d,draws,violations,worst\n";
    long long draws = 0, violations = 0;
    Real worst = 0;
    unsigned row_seed = seed;
    auto record = [&](const char* kind, int p, int d, const BoundSample& b) {
      draws += b.draws;
      violations += b.violations;
      worst = std::max(worst, b.worst);
      csv += std::string(kind) + "," + std::to_string(p) + "," + std::to_string(d) + "," +
             std::to_string(b.draws) + "," + std::to_string(b.violations) + "," +
             fmt(b.worst, c.precision) + "\n";
    };
    for (int d = c.d_min; d <= c.d_max; ++d) {
      for (int p = c.p_min; p <= c.p_max; ++p) {
        if (d == 1 && p >= 1)
          record("derivative", p, d,
                 sample_inverse_bound(InverseKind::derivative, p, d, c.samples, ++row_seed));
        if (p >= 1)
          record("divergence", p, d,
                 sample_inverse_bound(InverseKind::divergence, p, d, c.samples, ++row_seed));
        record("normal_trace", p, d,
               sample_inverse_bound(InverseKind::normal_trace, p, d, c.samples, ++row_seed));
      }
      record("trace", 6, d, sample_trace_bound(6, d, c.samples, ++row_seed));
    }
    if (c.write_csv)
      res.out.add("sampling.csv", csv);
    res.summary.emplace_back("draws_total", std::to_string(draws));
    res.summary.emplace_back("violations_total", std::to_string(violations));
    res.summary.emplace_back("worst_ratio", fmt(worst, c.precision));
  }
  return res;
}

} // namespace

RunArtifacts run_action(const RunConfig& config, const std::string& action, int num_threads,
                        unsigned seed) {
  validate_config(config);
  if (num_threads < 1 || num_threads > 256)
    throw std::invalid_argument("num_threads must be between 1 and 256");

  ActionResult r;
  if (action == "constants") {
    r = do_constants(config, seed);
  } else if (action == "counterexample") {
    if (config.kind != "counterexample")
      throw std::invalid_argument("counterexample action needs experiment.kind counterexample");
    r = do_counterexample(config, num_threads);
  } else if (action == "sweep") {
    if (config.kind != "sweep")
      throw std::invalid_argument("sweep action needs experiment.kind sweep");
    r = do_sweep(config, num_threads);
  } else if (action == "solve") {
    if (config.kind != "single")
      throw std::invalid_argument("solve action needs experiment.kind single");
    r = do_solve(config);
  } else if (action == "residual") {
    if (config.kind != "single")
      throw std::invalid_argument("residual action needs experiment.kind single");
    r = do_residual(config);
  } else if (action == "estimate") {
    if (config.kind == "single")
      r = do_estimate_single(config, num_threads);
    else if (config.kind == "refine")
      r = do_refine(config, num_threads);
    else if (config.kind == "sweep")
      r = do_sweep(config, num_threads);
    else
      r = do_counterexample(config, num_threads);
  } else {
    throw std::invalid_argument("unknown action " + action);
  }

  r.out.add("summary.csv", summary_csv(r.summary));
  std::vector<std::string> names;
  names.reserve(r.out.files.size() + 1);
  for (const auto& [name, content] : r.out.files)
    names.push_back(name);
  names.push_back("manifest.json");
  r.out.add("manifest.json", manifest_json(config, action, r.constants, r.diagnostics, names));

  RunArtifacts art;
  art.files = r.out.commit(config.out_dir);
  art.summary = std::move(r.summary);
  return art;
}

std::vector<ConstantsRow> constants_table(int p_min, int p_max, int d_min, int d_max,
                                          Real theta) {
  if (p_min < 0 || p_max > 4 || p_min > p_max)
    throw std::invalid_argument("constants_table: p range must lie within 0..4");
  if (d_min < 1 || d_max > 2 || d_min > d_max)
    throw std::invalid_argument("constants_table: d range must lie within 1..2");
  if (theta < 1)
    throw std::invalid_argument("constants_table: theta must be at least 1");

  const Real slack = 1 + 1e-10;
  std::vector<ConstantsRow> rows;
  for (int d = d_min; d <= d_max; ++d) {
    for (int p = p_min; p <= p_max; ++p) {
      ConstantsRow row;
      row.p = p;
      row.d = d;
      row.theta = theta;
      ConstantSet set = make_constants(p, d, theta);
      row.c_trace = set.c_trace;
      row.c_face = set.c_face;
      row.c_div = set.c_div;
      row.c_star = set.c_star;
      row.div_provenance = set.div_provenance;
      row.oracle_trace = eigen_oracle_inverse_constant(d, p, InverseKind::normal_trace);
      row.oracle_divergence = eigen_oracle_inverse_constant(d, p, InverseKind::divergence);

      bool ok = row.oracle_trace <= face_inverse_constant(p, d, 1) * slack;
      if (p >= 1)
        ok = ok && row.oracle_divergence <= div_inverse_constant(p, d, 1) * slack;
      if (d == 1) {
        row.oracle_derivative = eigen_oracle_inverse_constant(1, p, InverseKind::derivative);
        row.derivative_formula = cp1_bound(p + 1);
        ok = ok && row.oracle_derivative <= row.derivative_formula * slack;
      }
      row.oracle_leq_formula = ok;

      if (d == 1 && p == 1)
        row.note = "derivative closed form is 0 at this degree; oracle 2*sqrt(3) governs";
      if (p == 0)
        row.note = "degree-0 divergence closed form is 0; oracle governs";
      rows.push_back(row);
    }
  }
  return rows;
}

void write_constants_csv(std::ostream& out, const std::vector<ConstantsRow>& rows,
                         int precision) {
  out << "p,d,theta,c_trace,c_face,c_div,c_star,div_provenance,oracle_trace,"
         "oracle_divergence,oracle_derivative,derivative_bound,oracle_leq_formula,note\n";
  for (const auto& r : rows) {
    out << r.p << ',' << r.d << ',' << fmt(r.theta, precision) << ','
        << fmt(r.c_trace, precision) << ',' << fmt(r.c_face, precision) << ','
        << fmt(r.c_div, precision) << ',' << fmt(r.c_star, precision) << ','
        << r.div_provenance << ',' << fmt(r.oracle_trace, precision) << ','
        << fmt(r.oracle_divergence, precision) << ',';
    if (r.oracle_derivative >= 0)
      out << fmt(r.oracle_derivative, precision);
    out << ',';
    if (r.derivative_formula >= 0)
      out << fmt(r.derivative_formula, precision);
    out << ',' << (r.oracle_leq_formula ? "true" : "false") << ',' << r.note << '\n';
  }
}

namespace {

Real unit_uniform(std::mt19937_64& gen) {
  return Real(gen() >> 11) * 0x1p-53;
}

Real sym_uniform(std::mt19937_64& gen) {
  return 2 * unit_uniform(gen) - 1;
}

// nondegenerate simplex with moderate shape parameter, positively oriented
Mesh random_simplex(int dim, std::mt19937_64& gen) {
  if (dim == 1) {
    Real a = sym_uniform(gen);
    Real len = 0.5 + 2 * unit_uniform(gen);
    Eigen::MatrixXd coords(2, 1);
    coords << a, a + len;
    Eigen::MatrixXi elems(1, 2);
    elems << 0, 1;
    return Mesh(1, coords, elems);
  }
  for (;;) {
    Eigen::Matrix<Real, 3, 2> v;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 2; ++k)
        v(i, k) = sym_uniform(gen);
    Eigen::Vector2d ab = (v.row(1) - v.row(0)).transpose();
    Eigen::Vector2d ac = (v.row(2) - v.row(0)).transpose();
    Real area2 = ab.x() * ac.y() - ab.y() * ac.x();
    if (area2 < 0) {
      v.row(1).swap(v.row(2));
      area2 = -area2;
    }
    if (area2 < 0.2)
      continue;
    Real pa = (v.row(0) - v.row(1)).norm();
    Real pb = (v.row(1) - v.row(2)).norm();
    Real pc = (v.row(2) - v.row(0)).norm();
    Real h = std::max({pa, pb, pc});
    Real theta = h * (pa + pb + pc) / (2 * area2);
    if (theta > 8)
      continue;
    Eigen::MatrixXd coords = v;
    Eigen::MatrixXi elems(1, 3);
    elems << 0, 1, 2;
    return Mesh(2, coords, elems);
  }
}

} // namespace

BoundSample sample_inverse_bound(InverseKind kind, int p, int dim, int draws, unsigned seed) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("sample_inverse_bound: dim must be 1 or 2");
  if (kind == InverseKind::derivative && dim != 1)
    throw std::invalid_argument("sample_inverse_bound: derivative kind is 1d");
  // the derivative and divergence closed forms degenerate to zero over
  // degree-0 spaces, so only the face bound is samplable there
  if (p < 1 && kind != InverseKind::normal_trace)
    throw std::invalid_argument("sample_inverse_bound: needs p >= 1");

  std::mt19937_64 gen(seed);
  BoundSample out;

  if (kind == InverseKind::derivative) {
    ScalarBasis basis = make_scalar_basis(1, p);
    QuadratureRule rule = make_quadrature(1, 2 * p);
    Eigen::MatrixXd vals = basis.values(rule.points);
    Eigen::MatrixXd grads = basis.gradients(rule.points)[0];
    const Real bound = cp1_bound(p + 1);
    for (int i = 0; i < draws; ++i) {
      Real len = 0.1 + 1.9 * unit_uniform(gen);
      Eigen::VectorXd c(basis.size());
      for (int k = 0; k < c.size(); ++k)
        c(k) = sym_uniform(gen);
      Eigen::VectorXd v = vals * c;
      Eigen::VectorXd g = grads * c;
      Real norm_v = std::sqrt(len * v.array().square().matrix().dot(rule.weights));
      Real norm_g = std::sqrt(g.array().square().matrix().dot(rule.weights) / len);
      Real rhs = bound / len * norm_v;
      if (rhs <= 0)
        continue;
      ++out.draws;
      Real ratio = norm_g / rhs;
      out.worst = std::max(out.worst, ratio);
      if (ratio > 1 + 1e-10)
        ++out.violations;
    }
    return out;
  }

  for (int i = 0; i < draws; ++i) {
    Mesh mesh = random_simplex(dim, gen);
    Real h = diameter(mesh, 0);
    Real theta = shape_regularity(mesh);
    FluxBasis basis(mesh, 0, p);
    Eigen::VectorXd c(basis.size());
    for (int k = 0; k < c.size(); ++k)
      c(k) = sym_uniform(gen);

    PhysicalQuadrature eq = element_quadrature(mesh, 0, 2 * p + 2);
    Real norm_v_sq = 0;
    for (int k = 0; k < dim; ++k) {
      Eigen::VectorXd comp = basis.component_values(eq.points, k) * c;
      norm_v_sq += comp.array().square().matrix().dot(eq.weights);
    }
    Real norm_v = std::sqrt(norm_v_sq);

    Real lhs, rhs;
    if (kind == InverseKind::divergence) {
      Eigen::VectorXd dv = basis.divergence_values(eq.points) * c;
      lhs = h * std::sqrt(dv.array().square().matrix().dot(eq.weights));
      rhs = div_inverse_constant(p, dim, theta) * norm_v;
    } else {
      Real tr_sq = 0;
      for (int k = 0; k <= dim; ++k) {
        int f = mesh.element_face(0, k);
        PhysicalQuadrature fq = face_quadrature(mesh, f, 2 * p + 2);
        Eigen::VectorXd nrm = mesh.face(f).normal.head(dim);
        Eigen::VectorXd tv = basis.normal_values(fq.points, nrm) * c;
        tr_sq += tv.array().square().matrix().dot(fq.weights);
      }
      lhs = std::sqrt(h * tr_sq);
      rhs = face_inverse_constant(p, dim, theta) * norm_v;
    }
    if (rhs <= 0)
      continue;
    ++out.draws;
    Real ratio = lhs / rhs;
    out.worst = std::max(out.worst, ratio);
    if (ratio > 1 + 1e-10)
      ++out.violations;
  }
  return out;
}

BoundSample sample_trace_bound(int degree, int dim, int draws, unsigned seed) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("sample_trace_bound: dim must be 1 or 2");
  if (degree < 1)
    throw std::invalid_argument("sample_trace_bound: needs degree >= 1");

  std::mt19937_64 gen(seed);
  QuadratureRule rule = make_quadrature(dim, 2 * degree);
  BoundSample out;
  for (int i = 0; i < draws; ++i) {
    Mesh mesh = random_simplex(dim, gen);
    ScalarField w(mesh, degree);
    for (int k = 0; k < w.coefficients().cols(); ++k)
      w.coefficients()(0, k) = sym_uniform(gen);

    AffineMap map = affine_map(mesh, 0);
    Eigen::VectorXd dv = map.det * rule.weights;
    Eigen::VectorXd vals = w.values(0, rule.points);
    Eigen::MatrixXd grads = w.gradients(0, rule.points);
    Real vol = volume(mesh, 0);
    Real mean = vals.dot(dv) / vol;
    Real norm_w_sq =
        std::max<Real>(0, vals.array().square().matrix().dot(dv) - mean * mean * vol);
    Real norm_g_sq = grads.array().square().rowwise().sum().matrix().dot(dv);

    Real tr_sq = 0;
    for (int k = 0; k <= dim; ++k) {
      int f = mesh.element_face(0, k);
      PhysicalQuadrature fq = face_quadrature(mesh, f, 2 * degree);
      Eigen::VectorXd fv = w.values(0, w.to_reference(0, fq.points));
      tr_sq += (fv.array() - mean).square().matrix().dot(fq.weights);
    }

    Real theta = shape_regularity(mesh);
    Real rhs = trace_constant(theta, dim) *
               std::sqrt(std::sqrt(norm_g_sq) * std::sqrt(norm_w_sq));
    if (rhs <= 0)
      continue;
    ++out.draws;
    Real ratio = std::sqrt(tr_sq) / rhs;
    out.worst = std::max(out.worst, ratio);
    if (ratio > 1 + 1e-10)
      ++out.violations;
  }
  return out;
}

} // namespace eqflux
