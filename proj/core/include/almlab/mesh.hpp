#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace almlab {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class Side { left, right, bottom, top };

// Boundary edge. Vertex order follows the owning cell's counter-clockwise
// orientation, so the domain lies to the left of v[0] -> v[1].
struct BoundaryFacet {
  std::array<int, 2> v{};
  int cell = -1;
  int local_edge = -1;  // local edge index in the owning cell (opposite vertex)
  int edge = -1;        // global edge index
  int tag = 0;
};

struct TagRule {
  std::map<Side, int> tags{{Side::left, 1}, {Side::right, 2}, {Side::bottom, 3}, {Side::top, 4}};
  int operator()(Side s) const;
};

class Mesh {
public:
  Mesh() = default;
  Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> cells,
       const std::map<std::pair<int, int>, int>& boundary_tags);

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& cells() const { return cells_; }
  const std::vector<BoundaryFacet>& facets() const { return facets_; }
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  // local edge e of cell c is opposite local vertex e
  const std::vector<std::array<int, 3>>& cell_edges() const { return cell_edges_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  double h_max() const { return h_max_; }

  double signed_area(int cell) const;
  double total_area() const;
  std::vector<int> facets_with_tag(int tag) const;
  bool has_tag(int tag) const;
  // outward unit normal and length of a boundary facet
  Point facet_normal(const BoundaryFacet& f) const;
  double facet_length(const BoundaryFacet& f) const;

  void validate() const;

private:
  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> cells_;
  std::vector<BoundaryFacet> facets_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> cell_edges_;
  double h_max_ = 0.0;
};

Mesh generate_rect_mesh(std::array<double, 2> x_range, std::array<double, 2> y_range, int nx,
                        int ny, const TagRule& tag_rule = {});

Mesh refine_uniform(const Mesh& mesh);

// Moves vertices through a map; topology and tags are kept.
Mesh map_vertices(const Mesh& mesh, const std::function<Point(const Point&)>& map);

// Retags boundary facets; the callback receives the facet midpoint and its current tag.
Mesh retag(const Mesh& mesh, const std::function<int(const Point&, int)>& rule);

struct PocketGeometry {
  double length = 4.0;
  double height = 1.0;
  double pocket_center = 2.0;
  double pocket_half_width = 1.0;
  double pocket_depth = 0.4;
  int floor_tag = 3;
  int lid_tag = 4;
  int inlet_tag = 1;
  int outlet_tag = 2;
};

// Channel [0,L]x[0,H] with an elliptic pocket cut into the floor; grid lines
// are pulled down onto the pocket arc.
Mesh generate_pocket_channel(int nx, int ny, const PocketGeometry& geo = {});

struct HalfDiscTags {
  int symmetry = 1;
  int contact = 3;
  int free = 4;
};

// Right half of a disc (x >= cx). Boundary facets on the arc below the centre
// are tagged contact, the rest of the arc free, the cut x = cx symmetry. n is
// the number of concentric rings.
Mesh generate_half_disc(int n, double radius, Point center, const HalfDiscTags& tags = {});

// Plain-text mesh: "vertices N" then N lines "x y", "cells M" then M lines
// "a b c", "facets K" then K lines "a b tag".
void write_mesh_text(const Mesh& mesh, const std::string& path);
Mesh read_mesh_text(const std::string& path);

enum class FieldLocation { point, cell };

struct VtkField {
  std::string name;
  FieldLocation location = FieldLocation::point;
  int components = 1;  // 1 or 2 (2D vectors are padded to 3 on output)
  std::vector<double> data;
};

void write_vtk(const Mesh& mesh, const std::vector<VtkField>& fields, const std::string& path);

}  // namespace almlab
