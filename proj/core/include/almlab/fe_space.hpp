#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "almlab/linalg.hpp"
#include "almlab/mesh.hpp"

namespace almlab {

enum class Family { P1, P2 };

using ScalarFn = std::function<double(const Point&)>;
using VectorFn = std::function<Point(const Point&)>;

struct CellGeometry {
  std::array<Point, 3> x;
  std::array<Point, 3> grad_lambda;
  double area = 0.0;

  Point map(const std::array<double, 3>& bary) const;
};

CellGeometry cell_geometry(const Mesh& mesh, int cell);

// Hessian entries (xx, xy, yy)
using Hessian = std::array<double, 3>;

// Local numbering: vertices 0..2, then P2 edge midpoints 3..5 with local edge e
// opposite vertex e.
int local_size(Family f);
void shape_values(Family f, const std::array<double, 3>& bary, double* out);
void shape_gradients(Family f, const CellGeometry& g, const std::array<double, 3>& bary, Point* out);
void shape_hessians(Family f, const CellGeometry& g, Hessian* out);

// Scalar nodes are vertices then (P2) edges; component c of node i is dof
// c * num_nodes + i.
class FeSpace {
public:
  FeSpace(std::shared_ptr<const Mesh> mesh, Family family, int components = 1);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  Family family() const { return family_; }
  int degree() const { return family_ == Family::P1 ? 1 : 2; }
  int components() const { return components_; }
  int num_nodes() const { return num_nodes_; }
  int n_dofs() const { return num_nodes_ * components_; }
  int local_size() const { return almlab::local_size(family_); }
  int dof(int node, int component) const { return component * num_nodes_ + node; }

  // scalar node indices of a cell in local order
  std::array<int, 6> cell_nodes(int cell) const;
  // nodes on a boundary facet: its two vertices, then the midpoint for P2
  std::vector<int> facet_nodes(const BoundaryFacet& f) const;
  std::vector<int> boundary_nodes(const std::vector<int>& tags) const;
  Point node_coordinate(int node) const;

  Vector interpolate(const ScalarFn& fn) const;
  Vector interpolate(const VectorFn& fn) const;

  double evaluate(const Vector& coeffs, int cell, const std::array<double, 3>& bary,
                  int component = 0) const;
  Point evaluate_gradient(const Vector& coeffs, int cell, const std::array<double, 3>& bary,
                          int component = 0) const;
  // value at an arbitrary point of the domain; throws if the point is outside
  double evaluate_at(const Vector& coeffs, const Point& x, int component = 0) const;

private:
  std::shared_ptr<const Mesh> mesh_;
  Family family_;
  int components_;
  int num_nodes_;
};

// Barycentric coordinates of a point s in [0,1] along local edge e of a cell.
std::array<double, 3> edge_bary(int local_edge, double s);

}  // namespace almlab
