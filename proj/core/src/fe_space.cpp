#include "almlab/fe_space.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace almlab {

Point CellGeometry::map(const std::array<double, 3>& b) const {
  return {b[0] * x[0].x + b[1] * x[1].x + b[2] * x[2].x,
          b[0] * x[0].y + b[1] * x[1].y + b[2] * x[2].y};
}

CellGeometry cell_geometry(const Mesh& mesh, int cell) {
  CellGeometry g;
  const auto& t = mesh.cells()[cell];
  for (int i = 0; i < 3; ++i) g.x[i] = mesh.vertices()[t[i]];
  const double det =
      (g.x[1].x - g.x[0].x) * (g.x[2].y - g.x[0].y) - (g.x[2].x - g.x[0].x) * (g.x[1].y - g.x[0].y);
  g.area = 0.5 * det;
  for (int i = 0; i < 3; ++i) {
    const Point& a = g.x[(i + 1) % 3];
    const Point& b = g.x[(i + 2) % 3];
    g.grad_lambda[i] = {(a.y - b.y) / det, (b.x - a.x) / det};
  }
  return g;
}

int local_size(Family f) { return f == Family::P1 ? 3 : 6; }

void shape_values(Family f, const std::array<double, 3>& l, double* out) {
  if (f == Family::P1) {
    out[0] = l[0];
    out[1] = l[1];
    out[2] = l[2];
    return;
  }
  for (int i = 0; i < 3; ++i) {
    out[i] = l[i] * (2.0 * l[i] - 1.0);
    out[3 + i] = 4.0 * l[(i + 1) % 3] * l[(i + 2) % 3];
  }
}

void shape_gradients(Family f, const CellGeometry& g, const std::array<double, 3>& l, Point* out) {
  const auto& d = g.grad_lambda;
  if (f == Family::P1) {
    for (int i = 0; i < 3; ++i) out[i] = d[i];
    return;
  }
  for (int i = 0; i < 3; ++i) {
    const double s = 4.0 * l[i] - 1.0;
    out[i] = {s * d[i].x, s * d[i].y};
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    out[3 + i] = {4.0 * (l[k] * d[j].x + l[j] * d[k].x), 4.0 * (l[k] * d[j].y + l[j] * d[k].y)};
  }
}

void shape_hessians(Family f, const CellGeometry& g, Hessian* out) {
  if (f == Family::P1) {
    for (int i = 0; i < 3; ++i) out[i] = {0.0, 0.0, 0.0};
    return;
  }
  const auto& d = g.grad_lambda;
  for (int i = 0; i < 3; ++i) {
    out[i] = {4.0 * d[i].x * d[i].x, 4.0 * d[i].x * d[i].y, 4.0 * d[i].y * d[i].y};
    const Point& a = d[(i + 1) % 3];
    const Point& b = d[(i + 2) % 3];
    out[3 + i] = {8.0 * a.x * b.x, 4.0 * (a.x * b.y + a.y * b.x), 8.0 * a.y * b.y};
  }
}

std::array<double, 3> edge_bary(int local_edge, double s) {
  std::array<double, 3> b{0.0, 0.0, 0.0};
  b[(local_edge + 1) % 3] = 1.0 - s;
  b[(local_edge + 2) % 3] = s;
  return b;
}

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh, Family family, int components)
    : mesh_(std::move(mesh)), family_(family), components_(components) {
  if (!mesh_) throw std::invalid_argument("FeSpace needs a mesh");
  if (components_ != 1 && components_ != 2)
    throw std::invalid_argument("FeSpace supports 1 or 2 components");
  num_nodes_ = mesh_->num_vertices() + (family_ == Family::P2 ? mesh_->num_edges() : 0);
}

std::array<int, 6> FeSpace::cell_nodes(int cell) const {
  const auto& t = mesh_->cells()[cell];
  std::array<int, 6> n{t[0], t[1], t[2], -1, -1, -1};
  if (family_ == Family::P2) {
    const auto& e = mesh_->cell_edges()[cell];
    const int nv = mesh_->num_vertices();
    n[3] = nv + e[0];
    n[4] = nv + e[1];
    n[5] = nv + e[2];
  }
  return n;
}

std::vector<int> FeSpace::facet_nodes(const BoundaryFacet& f) const {
  std::vector<int> n{f.v[0], f.v[1]};
  if (family_ == Family::P2) n.push_back(mesh_->num_vertices() + f.edge);
  return n;
}

std::vector<int> FeSpace::boundary_nodes(const std::vector<int>& tags) const {
  std::set<int> nodes;
  for (const auto& f : mesh_->facets())
    if (std::find(tags.begin(), tags.end(), f.tag) != tags.end())
      for (int n : facet_nodes(f)) nodes.insert(n);
  return {nodes.begin(), nodes.end()};
}

Point FeSpace::node_coordinate(int node) const {
  const int nv = mesh_->num_vertices();
  if (node < nv) return mesh_->vertices()[node];
  const auto& e = mesh_->edges()[node - nv];
  const Point& a = mesh_->vertices()[e[0]];
  const Point& b = mesh_->vertices()[e[1]];
  return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
}

Vector FeSpace::interpolate(const ScalarFn& fn) const {
  if (components_ != 1) throw std::invalid_argument("scalar interpolation on a vector space");
  Vector v(num_nodes_);
  for (int i = 0; i < num_nodes_; ++i) v[i] = fn(node_coordinate(i));
  return v;
}

Vector FeSpace::interpolate(const VectorFn& fn) const {
  if (components_ != 2) throw std::invalid_argument("vector interpolation on a scalar space");
  Vector v(n_dofs());
  for (int i = 0; i < num_nodes_; ++i) {
    const Point p = fn(node_coordinate(i));
    v[dof(i, 0)] = p.x;
    v[dof(i, 1)] = p.y;
  }
  return v;
}

double FeSpace::evaluate(const Vector& coeffs, int cell, const std::array<double, 3>& bary,
                         int component) const {
  double phi[6];
  shape_values(family_, bary, phi);
  const auto nodes = cell_nodes(cell);
  double s = 0.0;
  for (int a = 0; a < local_size(); ++a) s += coeffs[dof(nodes[a], component)] * phi[a];
  return s;
}

double FeSpace::evaluate_at(const Vector& coeffs, const Point& x, int component) const {
  for (int c = 0; c < mesh_->num_cells(); ++c) {
    const auto geo = cell_geometry(*mesh_, c);
    std::array<double, 3> b;
    for (int i = 0; i < 3; ++i) {
      const Point& v = geo.x[(i + 1) % 3];
      b[i] = geo.grad_lambda[i].x * (x.x - v.x) + geo.grad_lambda[i].y * (x.y - v.y);
    }
    if (std::min({b[0], b[1], b[2]}) >= -1e-12) return evaluate(coeffs, c, b, component);
  }
  throw std::invalid_argument("point lies outside the mesh");
}

Point FeSpace::evaluate_gradient(const Vector& coeffs, int cell, const std::array<double, 3>& bary,
                                 int component) const {
  Point grad[6];
  shape_gradients(family_, cell_geometry(*mesh_, cell), bary, grad);
  const auto nodes = cell_nodes(cell);
  Point s{0.0, 0.0};
  for (int a = 0; a < local_size(); ++a) {
    const double c = coeffs[dof(nodes[a], component)];
    s.x += c * grad[a].x;
    s.y += c * grad[a].y;
  }
  return s;
}

}  // namespace almlab
