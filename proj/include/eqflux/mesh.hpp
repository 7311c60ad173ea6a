#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace eqflux {

using Real = double;

/// Oriented face record. In 1d a face is a mesh vertex; in 2d an edge with
/// canonical parametrization from vertices[0] to vertices[1] (ascending ids).
struct Face {
  std::array<int, 2> vertices{-1, -1};
  int owner = -1;
  int neighbor = -1;
  Eigen::Vector2d normal = Eigen::Vector2d::Zero(); // unit, points out of owner
  Real measure = 0;  // edge length in 2d, counting measure 1 in 1d
  Real diameter = 0; // weight length scale; in 1d the max adjacent element size
  bool on_boundary = false;
};

/// Per-vertex patch: elements sharing the vertex and the patch-interior faces
/// (faces containing the vertex, omitting those on the domain boundary).
struct VertexPatch {
  int vertex = -1;
  std::vector<int> elements;
  std::vector<int> faces;
  Real diameter = 0; // max pairwise distance of patch vertices
  bool on_boundary = false;
};

/// Conforming simplicial mesh, d in {1,2}. Elements are stored with positive
/// orientation; faces and boundary flags are derived on construction.
class Mesh {
public:
  Mesh(int dim, Eigen::MatrixXd coords, Eigen::MatrixXi elements);

  int dim() const { return dim_; }
  int num_vertices() const { return static_cast<int>(coords_.rows()); }
  int num_elements() const { return static_cast<int>(elems_.rows()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }

  const Eigen::MatrixXd& coords() const { return coords_; }
  const Eigen::MatrixXi& elements() const { return elems_; }
  const std::vector<Face>& faces() const { return faces_; }
  const Face& face(int f) const { return faces_[static_cast<size_t>(f)]; }

  Eigen::VectorXd vertex(int v) const { return coords_.row(v); }
  /// (d+1) x d matrix of element vertex coordinates.
  Eigen::MatrixXd element_vertices(int e) const;
  /// Face id opposite to local vertex k of element e.
  int element_face(int e, int k) const { return elem_faces_(e, k); }
  int local_vertex_index(int e, int global_vertex) const;

  bool vertex_on_boundary(int v) const { return vertex_boundary_[static_cast<size_t>(v)]; }
  const std::vector<VertexPatch>& patches() const { return patches_; }
  const VertexPatch& patch(int v) const { return patches_[static_cast<size_t>(v)]; }

private:
  void build_faces();
  void build_patches();

  int dim_;
  Eigen::MatrixXd coords_;
  Eigen::MatrixXi elems_;
  Eigen::MatrixXi elem_faces_;
  std::vector<Face> faces_;
  std::vector<bool> vertex_boundary_;
  std::vector<VertexPatch> patches_;
};

/// Affine element map x = J xhat + b from the reference simplex.
struct AffineMap {
  Eigen::MatrixXd J;
  Eigen::VectorXd b;
  Eigen::MatrixXd Jinv;
  Real det = 0; // positive by element orientation
};

AffineMap affine_map(const Mesh& mesh, int e);

Real volume(const Mesh& mesh, int e);
Real diameter(const Mesh& mesh, int e);
/// Inscribed ball diameter; equals the element length in 1d.
Real inball_diameter(const Mesh& mesh, int e);
/// max_K h_K / rho_K over the mesh.
Real shape_regularity(const Mesh& mesh);

/// Constant gradient of the hat function of local vertex k on element e.
Eigen::VectorXd hat_gradient(const Mesh& mesh, int e, int k);

/// Uniform mesh of (a,b) with n intervals.
Mesh make_interval_mesh(int n, Real a, Real b);
/// nx x ny grid on [ax,bx] x [ay,by], each cell split along the same diagonal.
Mesh make_triangle_mesh(int nx, int ny, Real ax, Real bx, Real ay, Real by);

struct RefinedMesh {
  Mesh mesh;
  std::vector<int> parent; // fine element -> coarse element
};

/// Uniform refinement: intervals split in two, triangles into four by edge
/// midpoints. Children are geometrically nested in their parent.
RefinedMesh refine_uniform(const Mesh& mesh);

Mesh read_mesh(const std::string& path);
void write_mesh(const Mesh& mesh, const std::string& path);

} // namespace eqflux
