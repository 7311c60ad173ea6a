#include "eqflux/equilibration.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "eqflux/basis.hpp"
#include "eqflux/quadrature.hpp"

namespace eqflux {

namespace {

bool face_has_vertex(const Face& f, int v) {
  return f.vertices[0] == v || f.vertices[1] == v;
}

/// Reference rule mapped to an element, keeping both coordinate systems.
struct MappedRule {
  Eigen::MatrixXd ref;
  Eigen::MatrixXd phys;
  Eigen::VectorXd weights;
};

MappedRule mapped_rule(const Mesh& mesh, int e, int degree) {
  QuadratureRule qr = make_quadrature(mesh.dim(), degree);
  AffineMap map = affine_map(mesh, e);
  MappedRule out;
  out.ref = qr.points;
  out.phys = (qr.points * map.J.transpose()).rowwise() + map.b.transpose();
  out.weights = qr.weights * map.det;
  return out;
}

/// Barycentric coordinate of local vertex k at reference points.
Eigen::VectorXd hat_values(const Eigen::MatrixXd& ref, int k) {
  if (k == 0) return (1 - ref.rowwise().sum().array()).matrix();
  return ref.col(k - 1);
}

int default_source_degree(int p, int requested) {
  return requested > 0 ? requested : 2 * p + 4;
}

} // namespace

PatchSpace make_patch_space(const Mesh& mesh, int vertex, int degree, Real kappa) {
  const VertexPatch& patch = mesh.patch(vertex);
  const int d = mesh.dim();
  const int nfuncs = FluxBasis::space_dim(d, degree);
  const int per_face = d == 1 ? 1 : degree + 1;
  const bool on_boundary = mesh.vertex_on_boundary(vertex);

  PatchSpace sp;
  sp.vertex = vertex;
  sp.degree = degree;
  sp.elements = patch.elements;
  const int ne = static_cast<int>(sp.elements.size());
  sp.flux_index = Eigen::MatrixXi::Constant(ne, nfuncs, -1);

  std::map<std::pair<int, int>, int> shared;
  int next = 0;
  for (int ei = 0; ei < ne; ++ei) {
    int e = sp.elements[ei];
    for (int k = 0; k <= d; ++k) {
      int fid = mesh.element_face(e, k);
      const Face& f = mesh.face(fid);
      for (int j = 0; j < per_face; ++j) {
        int local = k * per_face + j;
        if (f.on_boundary) {
          // on the domain boundary the normal flux stays free only for
          // boundary vertices; interior patches pin the whole patch boundary
          if (on_boundary) sp.flux_index(ei, local) = next++;
        } else if (face_has_vertex(f, vertex)) {
          // interior to the patch: one dof shared by both elements
          auto key = std::make_pair(fid, j);
          auto it = shared.find(key);
          if (it == shared.end()) it = shared.emplace(key, next++).first;
          sp.flux_index(ei, local) = it->second;
        }
      }
    }
    for (int j = (d + 1) * per_face; j < nfuncs; ++j) sp.flux_index(ei, j) = next++;
  }
  sp.num_flux_dofs = next;
  sp.num_scalar_dofs = ne * scalar_space_dim(d, degree);
  sp.mean_constraint = kappa <= 0 && !on_boundary;
  return sp;
}

Real patch_weight(Real eps, Real kappa, Real h, Real c_star) {
  if (kappa <= 0) return 1;
  return std::min(Real(1), c_star * std::sqrt(eps / (kappa * h)));
}

Real check_neumann_compatibility(const Mesh& mesh, const ScalarField& u_h,
                                 const ProblemSpec& spec, int vertex,
                                 int source_quad_degree) {
  const int deg = default_source_degree(u_h.degree(), source_quad_degree);
  const Real eps2 = spec.epsilon * spec.epsilon;
  const Real kap2 = spec.kappa * spec.kappa;
  Real res = 0;
  for (int e : mesh.patch(vertex).elements) {
    MappedRule q = mapped_rule(mesh, e, deg);
    int la = mesh.local_vertex_index(e, vertex);
    Eigen::ArrayXd psi = hat_values(q.ref, la).array();
    Eigen::ArrayXd fv = spec.f.values(mesh, e, q.ref, q.phys).array();
    Eigen::ArrayXd uv = u_h.values(e, q.ref).array();
    Eigen::MatrixXd gu = u_h.gradients(e, q.ref);
    Eigen::VectorXd gpsi = hat_gradient(mesh, e, la);
    Eigen::ArrayXd integrand = psi * (fv - kap2 * uv) - eps2 * (gu * gpsi).array();
    res += (q.weights.array() * integrand).sum();
  }
  return res;
}

PatchSolution solve_patch(const Mesh& mesh, const PatchSpace& space,
                          const ScalarField& u_h, const ProblemSpec& spec,
                          Real weight, int source_quad_degree) {
  const int d = mesh.dim();
  const int p = space.degree;
  const int ne = static_cast<int>(space.elements.size());
  const int nq = scalar_space_dim(d, p);
  const int nv = space.num_flux_dofs;
  const int deg = std::max(default_source_degree(p, source_quad_degree), 2 * p + 2);
  const Real eps = spec.epsilon;
  const Real kap2 = spec.kappa * spec.kappa;
  const Real w2 = weight * weight;

  ScalarBasis qbasis = make_scalar_basis(d, p);

  std::vector<Eigen::MatrixXd> Mv(ne), B(ne), MQ(ne);
  std::vector<Eigen::VectorXd> r(ne), g(ne), proj(ne), meanq(ne);
  Real grad_term = 0;
  Real patch_vol = 0;
  for (int ei = 0; ei < ne; ++ei) {
    int e = space.elements[ei];
    FluxBasis fb(mesh, e, p);
    MappedRule q = mapped_rule(mesh, e, deg);
    int la = mesh.local_vertex_index(e, space.vertex);
    Eigen::ArrayXd psi = hat_values(q.ref, la).array();
    Eigen::VectorXd gpsi = hat_gradient(mesh, e, la);
    Eigen::MatrixXd gu = u_h.gradients(e, q.ref);
    Eigen::ArrayXd uv = u_h.values(e, q.ref).array();
    Eigen::ArrayXd fv = spec.f.values(mesh, e, q.ref, q.phys).array();
    Eigen::MatrixXd qv = qbasis.values(q.ref);
    Eigen::MatrixXd dv = fb.divergence_values(q.phys);

    Mv[ei].setZero(fb.size(), fb.size());
    r[ei].setZero(fb.size());
    for (int k = 0; k < d; ++k) {
      Eigen::MatrixXd ck = fb.component_values(q.phys, k);
      Mv[ei] += ck.transpose() * q.weights.asDiagonal() * ck;
      r[ei] += ck.transpose() * (q.weights.array() * psi * gu.col(k).array()).matrix();
    }
    B[ei] = qv.transpose() * q.weights.asDiagonal() * dv;
    MQ[ei] = qv.transpose() * q.weights.asDiagonal() * qv;
    Eigen::ArrayXd gsrc = psi * (fv - kap2 * uv) - eps * eps * (gu * gpsi).array();
    g[ei] = qv.transpose() * (q.weights.array() * gsrc).matrix();
    Eigen::VectorXd pm = qv.transpose() * (q.weights.array() * psi * uv).matrix();
    proj[ei] = MQ[ei].llt().solve(pm);
    meanq[ei] = qv.transpose() * q.weights;
    grad_term += (q.weights.array() * psi.square() * gu.array().square().rowwise().sum()).sum();
    patch_vol += q.weights.sum();
  }

  // reaction block scale against the rest of the matrix
  Real amax = 0;
  for (int ei = 0; ei < ne; ++ei)
    amax = std::max({amax, w2 * Mv[ei].cwiseAbs().maxCoeff(),
                     eps * B[ei].cwiseAbs().maxCoeff()});
  bool drop_reaction = kap2 <= 0 || kap2 * patch_vol < 1e-12 * amax;
  bool mean_row = drop_reaction && !mesh.vertex_on_boundary(space.vertex);

  const int n = nv + space.num_scalar_dofs + (mean_row ? 1 : 0);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (int ei = 0; ei < ne; ++ei) {
    const int nf = static_cast<int>(Mv[ei].rows());
    const int qoff = nv + ei * nq;
    for (int i = 0; i < nf; ++i) {
      int vi = space.flux_index(ei, i);
      if (vi < 0) continue;
      for (int j = 0; j < nf; ++j) {
        int vj = space.flux_index(ei, j);
        if (vj >= 0) A(vi, vj) += w2 * Mv[ei](i, j);
      }
      for (int k = 0; k < nq; ++k) {
        A(vi, qoff + k) -= eps * B[ei](k, i);
        A(qoff + k, vi) -= eps * B[ei](k, i);
      }
      rhs(vi) -= eps * w2 * r[ei](i);
    }
    if (!drop_reaction)
      A.block(qoff, qoff, nq, nq) -= kap2 * MQ[ei];
    rhs.segment(qoff, nq) = -g[ei];
    if (mean_row) {
      A.block(qoff, n - 1, nq, 1) = meanq[ei];
      A.block(n - 1, qoff, 1, nq) = meanq[ei].transpose();
    }
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd x = lu.solve(rhs);
  Real res = (A * x - rhs).norm();
  Real scale = rhs.norm() + A.cwiseAbs().rowwise().sum().maxCoeff() * x.norm();
  Real stationarity = res / std::max(scale, std::numeric_limits<Real>::min());
  if (!x.allFinite() || !(stationarity < 1e-6)) {
    std::ostringstream msg;
    msg << "patch solve failed at vertex " << space.vertex
        << ": optimality residual " << stationarity << " on " << n << " dofs";
    throw std::runtime_error(msg.str());
  }

  PatchSolution sol;
  sol.vertex = space.vertex;
  sol.weight = weight;
  sol.stationarity = stationarity;
  sol.reaction_dropped = drop_reaction && spec.kappa > 0;
  sol.sigma.setZero(ne, space.flux_index.cols());
  sol.gamma.setZero(ne, nq);
  sol.phi.setZero(ne, nq);
  Real obj = w2 * eps * eps * grad_term;
  for (int ei = 0; ei < ne; ++ei) {
    const int nf = static_cast<int>(Mv[ei].rows());
    Eigen::VectorXd tau = Eigen::VectorXd::Zero(nf);
    for (int i = 0; i < nf; ++i) {
      int vi = space.flux_index(ei, i);
      if (vi >= 0) tau(i) = x(vi);
    }
    sol.sigma.row(ei) = eps * tau.transpose();
    obj += w2 * (2 * eps * r[ei].dot(tau) + tau.dot(Mv[ei] * tau));
    if (!drop_reaction) {
      Eigen::VectorXd gam = x.segment(nv + ei * nq, nq);
      sol.gamma.row(ei) = gam.transpose();
      obj += kap2 * gam.dot(MQ[ei] * gam);
    }
    sol.phi.row(ei) = sol.gamma.row(ei) + proj[ei].transpose();
  }
  sol.objective = std::max(obj, Real(0));
  return sol;
}

Reconstruction reconstruct(const Mesh& mesh, const ScalarField& u_h,
                           const ProblemSpec& spec, const ConstantSet& constants,
                           int num_threads, int source_quad_degree) {
  const int p = u_h.degree();
  const int deg = default_source_degree(p, source_quad_degree);
  const int nverts = mesh.num_vertices();

  std::vector<PatchSpace> spaces(static_cast<size_t>(nverts));
  std::vector<PatchSolution> sols(static_cast<size_t>(nverts));
  auto run = [&](int begin, int end, std::exception_ptr& err) {
    try {
      for (int a = begin; a < end; ++a) {
        spaces[static_cast<size_t>(a)] = make_patch_space(mesh, a, p, spec.kappa);
        Real w = patch_weight(spec.epsilon, spec.kappa, mesh.patch(a).diameter,
                              constants.c_star);
        sols[static_cast<size_t>(a)] =
            solve_patch(mesh, spaces[static_cast<size_t>(a)], u_h, spec, w, deg);
      }
    } catch (...) {
      err = std::current_exception();
    }
  };

  int nt = std::max(1, std::min(num_threads, nverts));
  std::vector<std::exception_ptr> errs(static_cast<size_t>(nt));
  if (nt == 1) {
    run(0, nverts, errs[0]);
  } else {
    std::vector<std::thread> pool;
    int chunk = (nverts + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
      int begin = t * chunk;
      int end = std::min(nverts, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run, begin, end, std::ref(errs[static_cast<size_t>(t)]));
    }
    for (auto& th : pool) th.join();
  }
  for (auto& err : errs)
    if (err) std::rethrow_exception(err);

  Reconstruction rec{FluxField(mesh, p), ScalarField(mesh, p),
                     Eigen::VectorXd::Zero(nverts), Eigen::VectorXd::Zero(nverts),
                     p, deg};
  // fixed vertex-order merge keeps the sums bitwise reproducible
  for (int a = 0; a < nverts; ++a) {
    const PatchSpace& sp = spaces[static_cast<size_t>(a)];
    const PatchSolution& sol = sols[static_cast<size_t>(a)];
    for (size_t ei = 0; ei < sp.elements.size(); ++ei) {
      int e = sp.elements[ei];
      rec.sigma.coefficients().row(e) += sol.sigma.row(static_cast<Eigen::Index>(ei));
      rec.phi.coefficients().row(e) += sol.phi.row(static_cast<Eigen::Index>(ei));
    }
    rec.weights(a) = sol.weight;
    rec.objectives(a) = sol.objective;
  }
  return rec;
}

EquilibrationCheck verify_equilibration(const Reconstruction& rec,
                                        const ProblemSpec& spec) {
  const Mesh& mesh = rec.sigma.mesh();
  const int p = rec.degree;
  const Real kap2 = spec.kappa * spec.kappa;
  ScalarField pif = l2_project(mesh, p, spec.f, rec.source_quad_degree);

  EquilibrationCheck out;
  out.element_residual.setZero(mesh.num_elements());
  Real pif_sq = 0, phi_sq = 0, div_sq = 0, res_sq = 0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    MappedRule q = mapped_rule(mesh, e, 2 * p + 2);
    Eigen::ArrayXd divs = rec.sigma.divergence(e, q.phys).array();
    Eigen::ArrayXd phiv = rec.phi.values(e, q.ref).array();
    Eigen::ArrayXd fv = pif.values(e, q.ref).array();
    Eigen::ArrayXd w = q.weights.array();
    Eigen::ArrayXd rv = divs + kap2 * phiv - fv;
    Real elem_sq = (w * rv.square()).sum();
    out.element_residual(e) = std::sqrt(std::max(elem_sq, Real(0)));
    res_sq += elem_sq;
    pif_sq += (w * fv.square()).sum();
    phi_sq += (w * phiv.square()).sum();
    div_sq += (w * divs.square()).sum();
  }
  out.l2 = std::sqrt(std::max(res_sq, Real(0)));
  out.max = out.element_residual.maxCoeff();
  out.scale = std::sqrt(pif_sq) + kap2 * std::sqrt(phi_sq) + std::sqrt(div_sq);
  return out;
}

} // namespace eqflux
