#include "eqflux/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "eqflux/quadrature.hpp"

namespace eqflux {

namespace {

constexpr Real pi = std::numbers::pi_v<Real>;

Real inv_or_inf(Real kappa) {
  return kappa > 0 ? 1.0 / kappa : std::numeric_limits<Real>::infinity();
}

Real weighted_sq(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  return std::max((v.array().square() * w.array()).sum(), 0.0);
}

std::string fmt(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

} // namespace

ElementWeights element_weights(const Mesh& mesh, const ProblemSpec& spec,
                               const ConstantSet& constants) {
  if (!(spec.epsilon > 0)) throw std::invalid_argument("element_weights: epsilon must be positive");
  const Real eps = spec.epsilon;
  const Real kap = spec.kappa;
  const Real invk = inv_or_inf(kap);
  ElementWeights wt;
  wt.w.resize(mesh.num_elements());
  wt.wtilde.resize(mesh.num_elements());
  wt.alpha.resize(mesh.num_elements());
  wt.alpha_face.resize(mesh.num_faces());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Real h = diameter(mesh, e);
    wt.w(e) = kap > 0 ? std::min(1.0, constants.c_star * std::sqrt(eps / (kap * h))) : 1.0;
    wt.wtilde(e) = std::min(h / (pi * eps), invk);
    wt.alpha(e) = std::min(h / eps, invk);
  }
  for (int f = 0; f < mesh.num_faces(); ++f)
    wt.alpha_face(f) = std::min(mesh.face(f).diameter / eps, invk);
  return wt;
}

EstimatorReport guaranteed_estimate(const ScalarField& u_h, const Reconstruction& rec,
                                    const ProblemSpec& spec, const ElementWeights& weights) {
  const Mesh& mesh = u_h.mesh();
  const int ne = mesh.num_elements();
  const int p = u_h.degree();
  const Real eps = spec.epsilon;
  const Real kap = spec.kappa;

  EstimatorReport rep;
  rep.weights = weights;
  rep.flux.resize(ne);
  rep.flux_raw.resize(ne);
  rep.potential.resize(ne);
  rep.oscillation.resize(ne);
  rep.osc_raw.resize(ne);
  rep.bound_sq.resize(ne);

  const ScalarField pif = l2_project(mesh, p, spec.f, rec.source_quad_degree);
  const QuadratureRule rule = make_quadrature(mesh.dim(), 2 * p + 2);
  const QuadratureRule src_rule =
      make_quadrature(mesh.dim(), std::max(rec.source_quad_degree, 2 * p + 2));

  Real sum_sq = 0;
  Real flux_sq_total = 0;
  for (int e = 0; e < ne; ++e) {
    const AffineMap map = affine_map(mesh, e);
    const Eigen::MatrixXd phys =
        (rule.points * map.J.transpose()).rowwise() + map.b.transpose();
    const Eigen::VectorXd wq = rule.weights * map.det;

    const Eigen::MatrixXd vec = eps * u_h.gradients(e, rule.points) +
                                rec.sigma.values(e, phys) / eps;
    const Real flux_sq =
        std::max((vec.array().square().rowwise().sum() * wq.array()).sum(), 0.0);
    const Eigen::VectorXd diff =
        u_h.values(e, rule.points) - rec.phi.values(e, rule.points);
    const Real pot_sq = kap * kap * weighted_sq(diff, wq);

    const Eigen::MatrixXd phys_s =
        (src_rule.points * map.J.transpose()).rowwise() + map.b.transpose();
    const Eigen::VectorXd wqs = src_rule.weights * map.det;
    const Eigen::VectorXd fv = spec.f.values(mesh, e, src_rule.points, phys_s);
    const Eigen::VectorXd osc = fv - pif.values(e, src_rule.points);
    const Real osc_sq = weighted_sq(osc, wqs);

    rep.flux_raw(e) = std::sqrt(flux_sq);
    rep.flux(e) = weights.w(e) * rep.flux_raw(e);
    rep.potential(e) = kap > 0 ? std::sqrt(pot_sq) : 0.0;
    rep.osc_raw(e) = std::sqrt(osc_sq);
    rep.oscillation(e) = weights.wtilde(e) * rep.osc_raw(e);

    const Real bracket = rep.flux(e) + rep.potential(e) + rep.oscillation(e);
    rep.bound_sq(e) = bracket * bracket;
    sum_sq += rep.bound_sq(e);
    flux_sq_total += flux_sq;
  }
  rep.eta = std::sqrt(sum_sq);
  rep.unweighted_flux = std::sqrt(flux_sq_total);
  return rep;
}

EstimatorReport residual_estimate(const ScalarField& u_h, const ProblemSpec& spec,
                                  const ElementWeights& weights, int source_quad_degree) {
  const Mesh& mesh = u_h.mesh();
  const int ne = mesh.num_elements();
  const int p = u_h.degree();
  const int sqd = source_quad_degree > 0 ? source_quad_degree : 2 * p + 4;
  const Real eps = spec.epsilon;
  const Real kap = spec.kappa;

  EstimatorReport rep;
  rep.weights = weights;
  rep.residual.resize(ne);
  rep.jump_sq = Eigen::VectorXd::Zero(mesh.num_faces());

  const ScalarField pif = l2_project(mesh, p, spec.f, sqd);
  const QuadratureRule rule = make_quadrature(mesh.dim(), 2 * p + 2);

  Real sum = 0;
  for (int e = 0; e < ne; ++e) {
    const AffineMap map = affine_map(mesh, e);
    const Eigen::VectorXd wq = rule.weights * map.det;
    const Eigen::VectorXd r = pif.values(e, rule.points) +
                              eps * eps * u_h.laplacian(e, rule.points) -
                              kap * kap * u_h.values(e, rule.points);
    rep.residual(e) = weights.alpha(e) * std::sqrt(weighted_sq(r, wq));
    sum += rep.residual(e) * rep.residual(e);
  }

  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (face.on_boundary) continue;
    const PhysicalQuadrature fq = face_quadrature(mesh, f, 2 * p);
    const Eigen::VectorXd n = face.normal.head(mesh.dim());
    const Eigen::VectorXd jump_n =
        (u_h.gradients(face.owner, u_h.to_reference(face.owner, fq.points)) -
         u_h.gradients(face.neighbor, u_h.to_reference(face.neighbor, fq.points))) *
        n;
    const Real j_sq = eps * eps * eps * eps * weighted_sq(jump_n, fq.weights);
    rep.jump_sq(f) = weights.alpha_face(f) / eps * j_sq;
    sum += rep.jump_sq(f);
  }
  rep.eta_res = std::sqrt(sum);
  return rep;
}

EstimatorReport estimate(const ScalarField& u_h, const Reconstruction& rec,
                         const ProblemSpec& spec, const ConstantSet& constants) {
  const ElementWeights wt = element_weights(u_h.mesh(), spec, constants);
  EstimatorReport rep = guaranteed_estimate(u_h, rec, spec, wt);
  EstimatorReport res = residual_estimate(u_h, spec, wt, rec.source_quad_degree);
  rep.residual = std::move(res.residual);
  rep.jump_sq = std::move(res.jump_sq);
  rep.eta_res = res.eta_res;
  return rep;
}

EfficiencyReport efficiency_report(const Mesh& mesh, const EstimatorReport& report,
                                   const Eigen::VectorXd& element_error_sq) {
  const int ne = mesh.num_elements();
  if (report.flux.size() != ne || report.residual.size() != ne ||
      report.jump_sq.size() != mesh.num_faces())
    throw std::invalid_argument("efficiency_report: needs both estimator parts");
  const bool have_err = element_error_sq.size() == ne;
  if (!have_err && element_error_sq.size() != 0)
    throw std::invalid_argument("efficiency_report: error vector has wrong length");

  EfficiencyReport eff;
  eff.ratio_res = Eigen::VectorXd::Zero(ne);
  eff.res_applicable.assign(static_cast<size_t>(ne), 0);
  if (have_err) {
    eff.ratio_err = Eigen::VectorXd::Zero(ne);
    eff.err_applicable.assign(static_cast<size_t>(ne), 0);
  }

  std::vector<int> elem_mark(static_cast<size_t>(ne), -1);
  std::vector<int> face_mark(static_cast<size_t>(mesh.num_faces()), -1);
  for (int e = 0; e < ne; ++e) {
    const Real num = report.flux(e) * report.flux(e) +
                     report.potential(e) * report.potential(e);
    Real den_res = 0;
    Real den_err = 0;
    for (int k = 0; k <= mesh.dim(); ++k) {
      const VertexPatch& pa = mesh.patch(mesh.elements()(e, k));
      for (int el : pa.elements) {
        if (elem_mark[static_cast<size_t>(el)] == e) continue;
        elem_mark[static_cast<size_t>(el)] = e;
        den_res += report.residual(el) * report.residual(el);
        if (have_err) {
          const Real osc = report.weights.alpha(el) * report.osc_raw(el);
          den_err += element_error_sq(el) + osc * osc;
        }
      }
      for (int f : pa.faces) {
        if (face_mark[static_cast<size_t>(f)] == e) continue;
        face_mark[static_cast<size_t>(f)] = e;
        den_res += report.jump_sq(f);
      }
    }
    if (den_res > 0) {
      eff.ratio_res(e) = num / den_res;
      eff.res_applicable[static_cast<size_t>(e)] = 1;
      eff.max_ratio_res = std::max(eff.max_ratio_res, eff.ratio_res(e));
    } else {
      ++eff.not_applicable;
    }
    if (have_err && den_err > 0) {
      eff.ratio_err(e) = num / den_err;
      eff.err_applicable[static_cast<size_t>(e)] = 1;
      eff.max_ratio_err = std::max(eff.max_ratio_err, eff.ratio_err(e));
    }
  }
  return eff;
}

void write_report_csv(std::ostream& out, const Mesh& mesh, const EstimatorReport& report) {
  const int ne = mesh.num_elements();
  const auto val = [](const Eigen::VectorXd& v, int i) -> Real {
    return v.size() > i ? v(i) : 0.0;
  };

  out << "element,h,w,wtilde,flux,potential,oscillation,bound,residual,jump\n";
  for (int e = 0; e < ne; ++e) {
    Real jump_sq = 0;
    for (int k = 0; k <= mesh.dim(); ++k) {
      const int f = mesh.element_face(e, k);
      if (!mesh.face(f).on_boundary) jump_sq += val(report.jump_sq, f);
    }
    out << e << ',' << fmt(diameter(mesh, e)) << ',' << fmt(val(report.weights.w, e))
        << ',' << fmt(val(report.weights.wtilde, e)) << ',' << fmt(val(report.flux, e))
        << ',' << fmt(val(report.potential, e)) << ',' << fmt(val(report.oscillation, e))
        << ',' << fmt(std::sqrt(val(report.bound_sq, e))) << ','
        << fmt(val(report.residual, e)) << ',' << fmt(std::sqrt(jump_sq)) << '\n';
  }
  Real jump_total_sq = 0;
  for (int f = 0; f < mesh.num_faces(); ++f) jump_total_sq += val(report.jump_sq, f);
  out << "total,,,," << fmt(report.flux.size() ? std::sqrt(report.flux.squaredNorm()) : 0.0)
      << ',' << fmt(report.potential.size() ? std::sqrt(report.potential.squaredNorm()) : 0.0)
      << ',' << fmt(report.oscillation.size() ? std::sqrt(report.oscillation.squaredNorm()) : 0.0)
      << ',' << fmt(report.eta) << ','
      << fmt(report.residual.size() ? std::sqrt(report.residual.squaredNorm()) : 0.0) << ','
      << fmt(std::sqrt(jump_total_sq)) << '\n';
}

void write_report_csv(const std::string& path, const Mesh& mesh, const EstimatorReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_report_csv(out, mesh, report);
}

Real loglog_slope(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("loglog_slope: need two or more paired points");
  if ((x.array() <= 0).any() || (y.array() <= 0).any())
    throw std::invalid_argument("loglog_slope: values must be positive");
  const Eigen::ArrayXd lx = x.array().log();
  const Eigen::ArrayXd ly = y.array().log();
  const Eigen::ArrayXd dx = lx - lx.mean();
  const Real denom = (dx * dx).sum();
  if (denom <= 0) throw std::invalid_argument("loglog_slope: x values coincide");
  return (dx * (ly - ly.mean())).sum() / denom;
}

} // namespace eqflux
