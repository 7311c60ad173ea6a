#include "eqflux/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace eqflux {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw std::invalid_argument(origin + ": " + what);
}

void reject_unknown(const Json& block, const std::string& origin, const std::string& name,
                    const std::set<std::string>& known) {
  for (const auto& item : block.items())
    if (!known.count(item.key()))
      fail(origin, "unknown key " + name + "." + item.key());
}

template <typename T>
void read_key(const Json& block, const std::string& origin, const std::string& name,
              const char* key, T& out) {
  if (!block.contains(key))
    return;
  try {
    out = block.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(origin, "key " + name + "." + key + " has the wrong type");
  }
}

} // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
  if (!j.is_object())
    fail(origin, "top level must be an object");

  RunConfig c;
  static const std::set<std::string> blocks = {"problem", "discretization", "experiment",
                                               "output"};
  for (const auto& item : j.items())
    if (!blocks.count(item.key()))
      fail(origin, "unknown block " + item.key());
  for (const auto& name : blocks)
    if (j.contains(name) && !j.at(name).is_object())
      fail(origin, "block " + name + " must be an object");

  if (j.contains("problem")) {
    const Json& b = j.at("problem");
    reject_unknown(b, origin, "problem", {"case", "f_poly", "epsilon", "kappa"});
    read_key(b, origin, "problem", "case", c.case_name);
    read_key(b, origin, "problem", "f_poly", c.f_poly);
    read_key(b, origin, "problem", "epsilon", c.epsilon);
    read_key(b, origin, "problem", "kappa", c.kappa);
  }
  if (j.contains("discretization")) {
    const Json& b = j.at("discretization");
    reject_unknown(b, origin, "discretization", {"dim", "degree", "n", "mesh"});
    read_key(b, origin, "discretization", "dim", c.dim);
    read_key(b, origin, "discretization", "degree", c.degree);
    read_key(b, origin, "discretization", "n", c.n);
    read_key(b, origin, "discretization", "mesh", c.mesh_file);
  }
  if (j.contains("experiment")) {
    const Json& b = j.at("experiment");
    reject_unknown(b, origin, "experiment",
                   {"kind", "levels", "ratios", "ms", "error", "samples", "p_min", "p_max",
                    "d_min", "d_max", "theta"});
    read_key(b, origin, "experiment", "kind", c.kind);
    read_key(b, origin, "experiment", "levels", c.levels);
    read_key(b, origin, "experiment", "ratios", c.ratios);
    read_key(b, origin, "experiment", "ms", c.ms);
    read_key(b, origin, "experiment", "error", c.error_mode);
    read_key(b, origin, "experiment", "samples", c.samples);
    read_key(b, origin, "experiment", "p_min", c.p_min);
    read_key(b, origin, "experiment", "p_max", c.p_max);
    read_key(b, origin, "experiment", "d_min", c.d_min);
    read_key(b, origin, "experiment", "d_max", c.d_max);
    read_key(b, origin, "experiment", "theta", c.theta);
  }
  if (j.contains("output")) {
    const Json& b = j.at("output");
    reject_unknown(b, origin, "output", {"dir", "csv", "precision"});
    read_key(b, origin, "output", "dir", c.out_dir);
    read_key(b, origin, "output", "csv", c.write_csv);
    read_key(b, origin, "output", "precision", c.precision);
  }

  try {
    validate_config(c);
  } catch (const std::invalid_argument& e) {
    fail(origin, e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

void validate_config(const RunConfig& c) {
  auto bad = [](const std::string& what) { throw std::invalid_argument(what); };

  if (!(c.epsilon > 0))
    bad("problem.epsilon must be positive");
  if (c.kappa < 0)
    bad("problem.kappa must be nonnegative");
  if (!c.case_name.empty() && c.case_name != "layer1d" && c.case_name != "smooth1d" &&
      c.case_name != "sine2d")
    bad("problem.case must be layer1d, smooth1d or sine2d");
  if (!c.case_name.empty() && !c.f_poly.empty())
    bad("problem.case and problem.f_poly are mutually exclusive");

  if (c.dim < 0 || c.dim > 2)
    bad("discretization.dim must be 1 or 2");
  if (!c.case_name.empty() && c.dim != 0) {
    int expected = c.case_name == "sine2d" ? 2 : 1;
    if (c.dim != expected)
      bad("discretization.dim contradicts problem.case " + c.case_name);
  }
  if (c.degree < 1 || c.degree > 4)
    bad("discretization.degree must be between 1 and 4");
  if (c.n < 1)
    bad("discretization.n must be positive");
  if (!c.mesh_file.empty() && !std::filesystem::exists(c.mesh_file))
    bad("discretization.mesh file does not exist: " + c.mesh_file);

  if (c.kind != "single" && c.kind != "refine" && c.kind != "sweep" &&
      c.kind != "counterexample")
    bad("experiment.kind must be single, refine, sweep or counterexample");
  if (c.levels < 1 || c.levels > 12)
    bad("experiment.levels must be between 1 and 12");
  for (Real r : c.ratios)
    if (!(r > 0))
      bad("experiment.ratios must be positive");
  for (int m : c.ms)
    if (m < 1 || m % 2 == 0)
      bad("experiment.ms must be odd and positive");
  if (c.error_mode != "auto" && c.error_mode != "exact" && c.error_mode != "reference" &&
      c.error_mode != "none")
    bad("experiment.error must be auto, exact, reference or none");
  if (c.samples < 0)
    bad("experiment.samples must be nonnegative");
  if (c.p_min < 0 || c.p_max > 4 || c.p_min > c.p_max)
    bad("experiment.p_min..p_max must lie within 0..4");
  if (c.d_min < 1 || c.d_max > 2 || c.d_min > c.d_max)
    bad("experiment.d_min..d_max must lie within 1..2");
  if (c.theta < 1)
    bad("experiment.theta must be at least 1");

  if (c.kind == "refine" && !c.mesh_file.empty())
    bad("experiment.kind refine needs a generated mesh, not discretization.mesh");
  if (c.kind == "sweep") {
    if (c.case_name.empty())
      bad("experiment.kind sweep needs a builtin problem.case");
    if (c.ratios.empty())
      bad("experiment.kind sweep needs experiment.ratios");
  }
  if (c.kind == "counterexample") {
    if (c.ms.empty())
      bad("experiment.kind counterexample needs experiment.ms");
    if (c.ratios.size() != c.ms.size())
      bad("experiment.ratios must pair with experiment.ms");
  }

  if (c.out_dir.empty())
    bad("output.dir must not be empty");
  if (c.precision < 3 || c.precision > 17)
    bad("output.precision must be between 3 and 17");
}

ProblemSpec problem_from_config(const RunConfig& c) {
  if (!c.case_name.empty())
    return make_case(c.case_name, c.epsilon, c.kappa);
  if (c.f_poly.empty())
    throw std::invalid_argument("config names no problem: set problem.case or problem.f_poly");

  ProblemSpec spec;
  spec.name = "poly";
  spec.dim = c.dim == 0 ? 1 : c.dim;
  spec.epsilon = c.epsilon;
  spec.kappa = c.kappa;
  std::vector<Real> coeff = c.f_poly;
  spec.f = SourceTerm([coeff](const Eigen::VectorXd& x) {
    Real v = 0;
    for (int k = static_cast<int>(coeff.size()) - 1; k >= 0; --k)
      v = v * x[0] + coeff[k];
    return v;
  });
  return spec;
}

std::shared_ptr<Mesh> mesh_from_config(const RunConfig& c, const ProblemSpec& spec, int n) {
  if (!c.mesh_file.empty()) {
    auto mesh = std::make_shared<Mesh>(read_mesh(c.mesh_file));
    if (mesh->dim() != spec.dim)
      throw std::invalid_argument("mesh file dimension does not match the problem");
    return mesh;
  }
  return std::make_shared<Mesh>(make_case_mesh(spec, n > 0 ? n : c.n));
}

} // namespace eqflux
