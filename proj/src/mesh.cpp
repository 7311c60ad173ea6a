#include "eqflux/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace eqflux {

Mesh::Mesh(int dim, Eigen::MatrixXd coords, Eigen::MatrixXi elements)
    : dim_(dim), coords_(std::move(coords)), elems_(std::move(elements)) {
  if (dim_ != 1 && dim_ != 2)
    throw std::invalid_argument("Mesh: dim must be 1 or 2");
  if (coords_.cols() != dim_)
    throw std::invalid_argument("Mesh: coordinate dimension mismatch");
  if (elems_.cols() != dim_ + 1)
    throw std::invalid_argument("Mesh: element arity mismatch");
  if (coords_.rows() == 0 || elems_.rows() == 0)
    throw std::invalid_argument("Mesh: empty mesh");
  if (elems_.minCoeff() < 0 || elems_.maxCoeff() >= coords_.rows())
    throw std::invalid_argument("Mesh: vertex index out of range");

  // enforce positive orientation so affine maps have det J > 0
  for (int e = 0; e < num_elements(); ++e) {
    if (dim_ == 1) {
      if (coords_(elems_(e, 0), 0) > coords_(elems_(e, 1), 0))
        std::swap(elems_(e, 0), elems_(e, 1));
      if (coords_(elems_(e, 0), 0) == coords_(elems_(e, 1), 0))
        throw std::invalid_argument("Mesh: degenerate interval");
    } else {
      Eigen::Vector2d a = coords_.row(elems_(e, 0));
      Eigen::Vector2d b = coords_.row(elems_(e, 1));
      Eigen::Vector2d c = coords_.row(elems_(e, 2));
      Real det = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
      if (det == 0)
        throw std::invalid_argument("Mesh: degenerate triangle");
      if (det < 0)
        std::swap(elems_(e, 1), elems_(e, 2));
    }
  }

  build_faces();
  build_patches();
}

Eigen::MatrixXd Mesh::element_vertices(int e) const {
  Eigen::MatrixXd v(dim_ + 1, dim_);
  for (int k = 0; k <= dim_; ++k)
    v.row(k) = coords_.row(elems_(e, k));
  return v;
}

int Mesh::local_vertex_index(int e, int global_vertex) const {
  for (int k = 0; k <= dim_; ++k)
    if (elems_(e, k) == global_vertex)
      return k;
  throw std::invalid_argument("local_vertex_index: vertex not in element");
}

void Mesh::build_faces() {
  elem_faces_.setConstant(num_elements(), dim_ + 1, -1);
  faces_.clear();

  if (dim_ == 1) {
    // faces are the mesh vertices; key by vertex id
    std::map<int, int> face_of_vertex;
    for (int e = 0; e < num_elements(); ++e) {
      for (int k = 0; k < 2; ++k) {
        int v = elems_(e, 1 - k); // face opposite local vertex k
        auto it = face_of_vertex.find(v);
        if (it == face_of_vertex.end()) {
          Face f;
          f.vertices = {v, -1};
          f.owner = e;
          f.measure = 1;
          face_of_vertex.emplace(v, static_cast<int>(faces_.size()));
          elem_faces_(e, k) = static_cast<int>(faces_.size());
          faces_.push_back(f);
        } else {
          Face& f = faces_[static_cast<size_t>(it->second)];
          if (f.neighbor != -1)
            throw std::invalid_argument("Mesh: vertex shared by more than two intervals");
          f.neighbor = e;
          elem_faces_(e, k) = it->second;
        }
      }
    }
    for (Face& f : faces_) {
      f.on_boundary = (f.neighbor == -1);
      Real x = coords_(f.vertices[0], 0);
      Real mid = Real(0.5) * (coords_(elems_(f.owner, 0), 0) + coords_(elems_(f.owner, 1), 0));
      f.normal = Eigen::Vector2d(x > mid ? 1 : -1, 0);
      f.diameter = std::abs(coords_(elems_(f.owner, 1), 0) - coords_(elems_(f.owner, 0), 0));
      if (f.neighbor != -1) {
        Real hn = std::abs(coords_(elems_(f.neighbor, 1), 0) - coords_(elems_(f.neighbor, 0), 0));
        f.diameter = std::max(f.diameter, hn);
      }
    }
  } else {
    std::map<std::pair<int, int>, int> face_of_edge;
    for (int e = 0; e < num_elements(); ++e) {
      for (int k = 0; k < 3; ++k) {
        int a = elems_(e, (k + 1) % 3);
        int b = elems_(e, (k + 2) % 3);
        auto key = std::minmax(a, b);
        auto it = face_of_edge.find(key);
        if (it == face_of_edge.end()) {
          Face f;
          f.vertices = {key.first, key.second};
          f.owner = e;
          Eigen::Vector2d pa = coords_.row(key.first);
          Eigen::Vector2d pb = coords_.row(key.second);
          f.measure = (pb - pa).norm();
          f.diameter = f.measure;
          Eigen::Vector2d t = (pb - pa) / f.measure;
          Eigen::Vector2d n(t.y(), -t.x());
          Eigen::Vector2d opp = coords_.row(elems_(e, k));
          if (n.dot(Real(0.5) * (pa + pb) - opp) < 0)
            n = -n;
          f.normal = n;
          face_of_edge.emplace(key, static_cast<int>(faces_.size()));
          elem_faces_(e, k) = static_cast<int>(faces_.size());
          faces_.push_back(f);
        } else {
          Face& f = faces_[static_cast<size_t>(it->second)];
          if (f.neighbor != -1)
            throw std::invalid_argument("Mesh: edge shared by more than two triangles");
          f.neighbor = e;
          elem_faces_(e, k) = it->second;
        }
      }
    }
    for (Face& f : faces_)
      f.on_boundary = (f.neighbor == -1);
  }

  vertex_boundary_.assign(static_cast<size_t>(num_vertices()), false);
  for (const Face& f : faces_)
    if (f.on_boundary)
      for (int v : f.vertices)
        if (v >= 0)
          vertex_boundary_[static_cast<size_t>(v)] = true;
}

void Mesh::build_patches() {
  patches_.assign(static_cast<size_t>(num_vertices()), VertexPatch{});
  for (int v = 0; v < num_vertices(); ++v) {
    patches_[static_cast<size_t>(v)].vertex = v;
    patches_[static_cast<size_t>(v)].on_boundary = vertex_boundary_[static_cast<size_t>(v)];
  }
  for (int e = 0; e < num_elements(); ++e)
    for (int k = 0; k <= dim_; ++k)
      patches_[static_cast<size_t>(elems_(e, k))].elements.push_back(e);
  for (int fi = 0; fi < num_faces(); ++fi) {
    const Face& f = faces_[static_cast<size_t>(fi)];
    if (f.on_boundary)
      continue;
    for (int v : f.vertices)
      if (v >= 0)
        patches_[static_cast<size_t>(v)].faces.push_back(fi);
  }
  for (VertexPatch& p : patches_) {
    std::set<int> verts;
    for (int e : p.elements)
      for (int k = 0; k <= dim_; ++k)
        verts.insert(elems_(e, k));
    Real d = 0;
    for (auto i = verts.begin(); i != verts.end(); ++i)
      for (auto j = std::next(i); j != verts.end(); ++j)
        d = std::max(d, (coords_.row(*i) - coords_.row(*j)).norm());
    p.diameter = d;
  }
}

AffineMap affine_map(const Mesh& mesh, int e) {
  int d = mesh.dim();
  Eigen::MatrixXd v = mesh.element_vertices(e);
  AffineMap map;
  map.J.resize(d, d);
  for (int k = 0; k < d; ++k)
    map.J.col(k) = (v.row(k + 1) - v.row(0)).transpose();
  map.b = v.row(0).transpose();
  map.det = map.J.determinant();
  map.Jinv = map.J.inverse();
  return map;
}

Real volume(const Mesh& mesh, int e) {
  AffineMap map = affine_map(mesh, e);
  return mesh.dim() == 1 ? map.det : map.det / 2;
}

Real diameter(const Mesh& mesh, int e) {
  Eigen::MatrixXd v = mesh.element_vertices(e);
  Real h = 0;
  for (int i = 0; i <= mesh.dim(); ++i)
    for (int j = i + 1; j <= mesh.dim(); ++j)
      h = std::max(h, (v.row(i) - v.row(j)).norm());
  return h;
}

Real inball_diameter(const Mesh& mesh, int e) {
  if (mesh.dim() == 1)
    return diameter(mesh, e);
  Eigen::MatrixXd v = mesh.element_vertices(e);
  Real perimeter = (v.row(0) - v.row(1)).norm() + (v.row(1) - v.row(2)).norm() +
                   (v.row(2) - v.row(0)).norm();
  return 4 * volume(mesh, e) / perimeter;
}

Real shape_regularity(const Mesh& mesh) {
  Real theta = 0;
  for (int e = 0; e < mesh.num_elements(); ++e)
    theta = std::max(theta, diameter(mesh, e) / inball_diameter(mesh, e));
  return theta;
}

Eigen::VectorXd hat_gradient(const Mesh& mesh, int e, int k) {
  AffineMap map = affine_map(mesh, e);
  int d = mesh.dim();
  Eigen::VectorXd ref(d);
  if (k == 0)
    ref.setConstant(-1);
  else {
    ref.setZero();
    ref(k - 1) = 1;
  }
  return map.Jinv.transpose() * ref;
}

Mesh make_interval_mesh(int n, Real a, Real b) {
  if (n <= 0 || !(a < b))
    throw std::invalid_argument("make_interval_mesh: need n >= 1 and a < b");
  Eigen::MatrixXd coords(n + 1, 1);
  for (int i = 0; i <= n; ++i)
    coords(i, 0) = a + (b - a) * Real(i) / Real(n);
  Eigen::MatrixXi elems(n, 2);
  for (int i = 0; i < n; ++i)
    elems.row(i) << i, i + 1;
  return Mesh(1, coords, elems);
}

Mesh make_triangle_mesh(int nx, int ny, Real ax, Real bx, Real ay, Real by) {
  if (nx <= 0 || ny <= 0 || !(ax < bx) || !(ay < by))
    throw std::invalid_argument("make_triangle_mesh: invalid grid");
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  Eigen::MatrixXd coords((nx + 1) * (ny + 1), 2);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      coords.row(vid(i, j)) << ax + (bx - ax) * Real(i) / Real(nx),
          ay + (by - ay) * Real(j) / Real(ny);
  Eigen::MatrixXi elems(2 * nx * ny, 3);
  int e = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int v00 = vid(i, j), v10 = vid(i + 1, j);
      int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      elems.row(e++) << v00, v10, v11;
      elems.row(e++) << v00, v11, v01;
    }
  return Mesh(2, coords, elems);
}

RefinedMesh refine_uniform(const Mesh& mesh) {
  int d = mesh.dim();
  if (d == 1) {
    int ne = mesh.num_elements();
    int nv = mesh.num_vertices();
    Eigen::MatrixXd coords(nv + ne, 1);
    coords.topRows(nv) = mesh.coords();
    Eigen::MatrixXi elems(2 * ne, 2);
    std::vector<int> parent(static_cast<size_t>(2 * ne));
    for (int e = 0; e < ne; ++e) {
      int a = mesh.elements()(e, 0), b = mesh.elements()(e, 1);
      int m = nv + e;
      coords(m, 0) = Real(0.5) * (mesh.coords()(a, 0) + mesh.coords()(b, 0));
      elems.row(2 * e) << a, m;
      elems.row(2 * e + 1) << m, b;
      parent[static_cast<size_t>(2 * e)] = e;
      parent[static_cast<size_t>(2 * e + 1)] = e;
    }
    return {Mesh(1, coords, elems), parent};
  }

  int ne = mesh.num_elements();
  int nv = mesh.num_vertices();
  int nf = mesh.num_faces();
  Eigen::MatrixXd coords(nv + nf, 2);
  coords.topRows(nv) = mesh.coords();
  for (int f = 0; f < nf; ++f) {
    const Face& face = mesh.face(f);
    coords.row(nv + f) =
        Real(0.5) * (mesh.coords().row(face.vertices[0]) + mesh.coords().row(face.vertices[1]));
  }
  Eigen::MatrixXi elems(4 * ne, 3);
  std::vector<int> parent(static_cast<size_t>(4 * ne));
  for (int e = 0; e < ne; ++e) {
    int v0 = mesh.elements()(e, 0), v1 = mesh.elements()(e, 1), v2 = mesh.elements()(e, 2);
    int m12 = nv + mesh.element_face(e, 0);
    int m02 = nv + mesh.element_face(e, 1);
    int m01 = nv + mesh.element_face(e, 2);
    elems.row(4 * e + 0) << v0, m01, m02;
    elems.row(4 * e + 1) << v1, m12, m01;
    elems.row(4 * e + 2) << v2, m02, m12;
    elems.row(4 * e + 3) << m01, m12, m02;
    for (int c = 0; c < 4; ++c)
      parent[static_cast<size_t>(4 * e + c)] = e;
  }
  return {Mesh(2, coords, elems), parent};
}

Mesh read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("read_mesh: cannot open " + path);
  int dim = 0, nv = 0, ne = 0;
  if (!(in >> dim >> nv >> ne))
    throw std::invalid_argument("read_mesh: malformed header in " + path);
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("read_mesh: unsupported dimension in " + path);
  if (nv <= 0 || ne <= 0)
    throw std::invalid_argument("read_mesh: empty mesh in " + path);
  Eigen::MatrixXd coords(nv, dim);
  for (int i = 0; i < nv; ++i)
    for (int k = 0; k < dim; ++k)
      if (!(in >> coords(i, k)))
        throw std::invalid_argument("read_mesh: truncated coordinates in " + path);
  Eigen::MatrixXi elems(ne, dim + 1);
  for (int e = 0; e < ne; ++e)
    for (int k = 0; k <= dim; ++k)
      if (!(in >> elems(e, k)))
        throw std::invalid_argument("read_mesh: truncated connectivity in " + path);
  return Mesh(dim, coords, elems);
}

void write_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::invalid_argument("write_mesh: cannot open " + path);
  out.precision(17);
  out << mesh.dim() << ' ' << mesh.num_vertices() << ' ' << mesh.num_elements() << '\n';
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    for (int k = 0; k < mesh.dim(); ++k)
      out << (k ? " " : "") << mesh.coords()(i, k);
    out << '\n';
  }
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (int k = 0; k <= mesh.dim(); ++k)
      out << (k ? " " : "") << mesh.elements()(e, k);
    out << '\n';
  }
}

} // namespace eqflux
