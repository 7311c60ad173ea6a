#include "eqflux/counterexample.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "eqflux/basis.hpp"
#include "eqflux/constants.hpp"
#include "eqflux/equilibration.hpp"
#include "eqflux/estimators.hpp"

namespace eqflux {

namespace {

constexpr Real pi = std::numbers::pi_v<Real>;

void validate_m(int m) {
  if (m < 1 || m % 2 == 0)
    throw std::invalid_argument("counterexample: m must be odd and positive");
}

/// cos(pi t / M) with the angle folded by integer arithmetic into [0, pi/4],
/// so multiples of pi/2 come out exactly zero.
Real folded_cosine(long long t, long long M) {
  long long k = t % (2 * M);
  if (k < 0) k += 2 * M;
  if (k > M) k = 2 * M - k;
  Real sign = 1;
  if (2 * k > M) {
    sign = -1;
    k = M - k;
  }
  if (4 * k <= M) return sign * std::cos(pi * Real(k) / Real(M));
  return sign * std::sin(pi * Real(M / 2 - k) / Real(M));
}

std::string fmt(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string fmt_short(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

} // namespace

Real counterexample_mu(int m) {
  validate_m(m);
  const Real h = 1.0 / counterexample_intervals(m);
  const Real s = std::sin(0.5 * m * pi * h);
  const Real c = std::cos(m * pi * h);
  return 12 * s * s / (h * h * (2 + c));
}

Real counterexample_node_value(int m, int i) {
  validate_m(m);
  const long long two_n = counterexample_intervals(m);
  const long long j = i - two_n / 2; // node index counted from the midpoint
  return folded_cosine(m * j, two_n);
}

CounterexampleCase make_counterexample(const CounterexampleConfig& config) {
  validate_m(config.m);
  if (!(config.epsilon > 0) || config.kappa < 0)
    throw std::invalid_argument("counterexample: need eps > 0 and kappa >= 0");

  const int n = counterexample_intervals(config.m);
  const Real h = 1.0 / n;
  auto mesh = std::make_shared<Mesh>(make_interval_mesh(n, -0.5, 0.5));

  auto f = std::make_shared<ScalarField>(*mesh, 1);
  const ScalarBasis basis = make_scalar_basis(1, 1);
  Eigen::MatrixXd ref(2, 1);
  ref << 0, 1;
  const Eigen::Matrix2d vand_inv = Eigen::Matrix2d(basis.values(ref)).inverse();
  for (int e = 0; e < n; ++e) {
    const Eigen::Vector2d nodal(counterexample_node_value(config.m, e),
                                counterexample_node_value(config.m, e + 1));
    f->coefficients().row(e) = (vand_inv * nodal).transpose();
  }

  const Real mu = counterexample_mu(config.m);
  const Real eps = config.epsilon;
  const Real denom = eps * eps * mu + config.kappa * config.kappa;
  const Real half = std::sin(0.5 * config.m * pi * h);

  CounterexampleCase c{config, h,    mu, 1 / denom, eps * eps * mu / denom,
                       eps * eps / denom * 4 * half * half / h,
                       mesh,   f,    ScalarField(*mesh, 1), ProblemSpec{}};
  c.u_h.coefficients() = f->coefficients() * c.solution_factor;

  c.spec.name = "counterexample";
  c.spec.dim = 1;
  c.spec.epsilon = eps;
  c.spec.kappa = config.kappa;
  c.spec.ax = -0.5;
  c.spec.bx = 0.5;
  c.spec.f = SourceTerm(f);
  return c;
}

Eigen::VectorXd counterexample_nodal_values(const CounterexampleCase& c) {
  const int nv = c.mesh->num_vertices();
  Eigen::VectorXd vals(nv);
  for (int i = 0; i < nv; ++i) vals(i) = counterexample_node_value(c.config.m, i);
  return vals;
}

SweepStudy nonrobustness_study(Real epsilon, const std::vector<int>& ms,
                               const std::vector<Real>& ratios, int num_threads) {
  if (ms.size() != ratios.size() || ms.empty())
    throw std::invalid_argument("nonrobustness_study: m and ratio lists must pair up");
  if (!(epsilon > 0))
    throw std::invalid_argument("nonrobustness_study: eps must be positive");

  SweepStudy study;
  bool first = true;
  for (size_t i = 0; i < ms.size(); ++i) {
    const int m = ms[i];
    validate_m(m);
    const Real target = ratios[i];
    if (target < 1) {
      ++study.excluded;
      study.notices.push_back("excluded m=" + std::to_string(m) + " with kappa h / eps = " +
                              fmt_short(target) + " below 1");
      continue;
    }
    const Real h = 1.0 / counterexample_intervals(m);
    const CounterexampleCase c = make_counterexample({m, epsilon, target * epsilon / h});
    const ConstantSet cs = make_constants(1, 1, shape_regularity(*c.mesh));
    const Reconstruction rec = reconstruct(*c.mesh, c.u_h, c.spec, cs, num_threads);
    const EstimatorReport rep = estimate(c.u_h, rec, c.spec, cs);

    SweepPoint row;
    row.m = m;
    row.h = c.h;
    row.epsilon = epsilon;
    row.kappa = c.config.kappa;
    row.ratio = row.kappa * c.h / epsilon;
    row.jump_sum = std::sqrt(std::max(rep.jump_sq.sum(), 0.0));
    row.residual_sum = rep.residual.norm();
    row.mu_times_h = c.mu * c.h;
    if (row.jump_sum > 0) {
      row.unweighted_ratio = rep.unweighted_flux / row.jump_sum;
      row.weighted_ratio = rep.flux.norm() / row.jump_sum;
      study.dominance_max =
          std::max(study.dominance_max,
                   row.residual_sum * row.residual_sum / (row.jump_sum * row.jump_sum));
    } else {
      study.notices.push_back("zero jump estimator at m=" + std::to_string(m) +
                              "; flux ratios left unset");
    }
    study.mu_times_h_min = first ? row.mu_times_h : std::min(study.mu_times_h_min, row.mu_times_h);
    study.mu_times_h_max = first ? row.mu_times_h : std::max(study.mu_times_h_max, row.mu_times_h);
    first = false;
    study.rows.push_back(row);
  }

  if (study.rows.size() >= 2) {
    const int nr = static_cast<int>(study.rows.size());
    Eigen::VectorXd x(nr), yu(nr), yw(nr);
    for (int r = 0; r < nr; ++r) {
      x(r) = study.rows[static_cast<size_t>(r)].ratio;
      yu(r) = study.rows[static_cast<size_t>(r)].unweighted_ratio;
      yw(r) = study.rows[static_cast<size_t>(r)].weighted_ratio;
    }
    study.slope_unweighted = loglog_slope(x, yu);
    study.slope_weighted = loglog_slope(x, yw);
  } else {
    study.notices.emplace_back("too few sweep points for a regression");
  }
  return study;
}

void write_sweep_csv(std::ostream& out, const SweepStudy& study) {
  out << "m,h,epsilon,kappa,kappa_h_over_eps,jump_sum,residual_sum,"
         "unweighted_ratio,weighted_ratio\n";
  for (const SweepPoint& r : study.rows)
    out << r.m << ',' << fmt(r.h) << ',' << fmt(r.epsilon) << ',' << fmt(r.kappa) << ','
        << fmt(r.ratio) << ',' << fmt(r.jump_sum) << ',' << fmt(r.residual_sum) << ','
        << fmt(r.unweighted_ratio) << ',' << fmt(r.weighted_ratio) << '\n';
  out << "slope_unweighted," << fmt(study.slope_unweighted) << '\n';
  out << "slope_weighted," << fmt(study.slope_weighted) << '\n';
  out << "dominance_max," << fmt(study.dominance_max) << '\n';
  out << "mu_times_h_min," << fmt(study.mu_times_h_min) << '\n';
  out << "mu_times_h_max," << fmt(study.mu_times_h_max) << '\n';
  out << "excluded," << study.excluded << '\n';
  for (const std::string& n : study.notices) out << "notice," << n << '\n';
}

void write_sweep_csv(const std::string& path, const SweepStudy& study) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_sweep_csv(out, study);
}

} // namespace eqflux
