#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <vector>

#include "eqflux/basis.hpp"
#include "eqflux/mesh.hpp"

namespace eqflux {

using ScalarFunction = std::function<Real(const Eigen::VectorXd&)>;
using VectorFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Piecewise polynomial scalar field, coefficients per element in the modal
/// reference basis. Continuity is a property of the coefficients, not the type.
class ScalarField {
public:
  ScalarField(const Mesh& mesh, int degree);

  const Mesh& mesh() const { return *mesh_; }
  int degree() const { return degree_; }
  const ScalarBasis& basis() const { return basis_; }
  Eigen::MatrixXd& coefficients() { return coeff_; }
  const Eigen::MatrixXd& coefficients() const { return coeff_; }

  /// Field values on element e at reference points.
  Eigen::VectorXd values(int e, const Eigen::MatrixXd& ref_pts) const;
  /// Physical gradients on element e at reference points, npts x dim.
  Eigen::MatrixXd gradients(int e, const Eigen::MatrixXd& ref_pts) const;
  Eigen::VectorXd laplacian(int e, const Eigen::MatrixXd& ref_pts) const;

  /// Map physical points on element e to reference coordinates.
  Eigen::MatrixXd to_reference(int e, const Eigen::MatrixXd& phys_pts) const;

private:
  const Mesh* mesh_;
  int degree_;
  ScalarBasis basis_;
  Eigen::MatrixXd coeff_; // ne x nb
};

/// Source data: an analytic function, or a piecewise polynomial living on the
/// discretization mesh (then all moment integrals are quadrature-exact).
class SourceTerm {
public:
  SourceTerm() = default;
  explicit SourceTerm(ScalarFunction fn) : fn_(std::move(fn)) {}
  explicit SourceTerm(std::shared_ptr<const ScalarField> field) : field_(std::move(field)) {}

  bool valid() const { return static_cast<bool>(fn_) || field_ != nullptr; }
  bool polynomial() const { return field_ != nullptr; }
  Eigen::VectorXd values(const Mesh& mesh, int e, const Eigen::MatrixXd& ref_pts,
                         const Eigen::MatrixXd& phys_pts) const;

private:
  ScalarFunction fn_;
  std::shared_ptr<const ScalarField> field_;
};

/// Elementwise L2 projection onto degree-p polynomials.
ScalarField l2_project(const Mesh& mesh, int degree, const SourceTerm& f, int quad_degree);
ScalarField l2_project(const Mesh& mesh, int degree, const ScalarFunction& f, int quad_degree);

/// H(div) flux field with per-element moment bases; equal shared-face moments
/// make the normal component continuous across interior faces.
class FluxField {
public:
  FluxField(const Mesh& mesh, int degree);

  const Mesh& mesh() const { return *mesh_; }
  int degree() const { return degree_; }
  const FluxBasis& basis(int e) const { return bases_[static_cast<size_t>(e)]; }
  Eigen::MatrixXd& coefficients() { return coeff_; }
  const Eigen::MatrixXd& coefficients() const { return coeff_; }

  /// Vector values on element e at physical points, npts x dim.
  Eigen::MatrixXd values(int e, const Eigen::MatrixXd& pts) const;
  Eigen::VectorXd divergence(int e, const Eigen::MatrixXd& pts) const;
  Eigen::VectorXd normal_trace(int e, const Eigen::MatrixXd& pts, const Eigen::VectorXd& n) const;

private:
  const Mesh* mesh_;
  int degree_;
  std::vector<FluxBasis> bases_;
  Eigen::MatrixXd coeff_; // ne x nfuncs
};

/// Largest normal-component jump of v over interior faces, sampled at face
/// quadrature points of the given degree.
Real max_normal_jump(const FluxField& v, int quad_degree);

/// Largest value jump of u over interior faces plus its largest boundary trace.
Real max_trace_jump(const ScalarField& u, int quad_degree);
Real max_boundary_trace(const ScalarField& u, int quad_degree);

} // namespace eqflux
