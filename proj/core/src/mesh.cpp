#include "almlab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "almlab/errors.hpp"

namespace almlab {

namespace {

std::pair<int, int> key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

int TagRule::operator()(Side s) const {
  auto it = tags.find(s);
  if (it == tags.end()) throw std::invalid_argument("tag rule has no entry for a side");
  return it->second;
}

Mesh::Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> cells,
           const std::map<std::pair<int, int>, int>& boundary_tags)
    : vertices_(std::move(vertices)), cells_(std::move(cells)) {
  const int nv = num_vertices();
  for (const auto& c : cells_)
    for (int v : c)
      if (v < 0 || v >= nv) throw MeshError("cell references vertex out of range");

  std::map<std::pair<int, int>, int> edge_index;
  std::vector<int> edge_count;
  std::vector<std::pair<int, int>> edge_owner;  // first (cell, local edge)
  cell_edges_.resize(cells_.size());
  for (int c = 0; c < num_cells(); ++c) {
    const auto& t = cells_[c];
    for (int e = 0; e < 3; ++e) {
      const int a = t[(e + 1) % 3];
      const int b = t[(e + 2) % 3];
      auto [it, inserted] = edge_index.emplace(key(a, b), num_edges());
      if (inserted) {
        edges_.push_back({std::min(a, b), std::max(a, b)});
        edge_count.push_back(0);
        edge_owner.emplace_back(c, e);
      }
      ++edge_count[it->second];
      cell_edges_[c][e] = it->second;
    }
  }

  for (int e = 0; e < num_edges(); ++e) {
    h_max_ = std::max(h_max_, dist(vertices_[edges_[e][0]], vertices_[edges_[e][1]]));
    if (edge_count[e] > 2) throw MeshError("edge shared by more than two cells");
    if (edge_count[e] != 1) continue;
    auto [c, le] = edge_owner[e];
    BoundaryFacet f;
    f.v = {cells_[c][(le + 1) % 3], cells_[c][(le + 2) % 3]};
    f.cell = c;
    f.local_edge = le;
    f.edge = e;
    auto it = boundary_tags.find(key(f.v[0], f.v[1]));
    if (it == boundary_tags.end()) throw MeshError("boundary edge without a tag");
    f.tag = it->second;
    facets_.push_back(f);
  }
  validate();
}

double Mesh::signed_area(int cell) const {
  const auto& t = cells_[cell];
  const Point& a = vertices_[t[0]];
  const Point& b = vertices_[t[1]];
  const Point& c = vertices_[t[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double Mesh::total_area() const {
  double s = 0.0;
  for (int c = 0; c < num_cells(); ++c) s += signed_area(c);
  return s;
}

std::vector<int> Mesh::facets_with_tag(int tag) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(facets_.size()); ++i)
    if (facets_[i].tag == tag) out.push_back(i);
  return out;
}

bool Mesh::has_tag(int tag) const {
  return std::any_of(facets_.begin(), facets_.end(), [&](const auto& f) { return f.tag == tag; });
}

Point Mesh::facet_normal(const BoundaryFacet& f) const {
  const Point& a = vertices_[f.v[0]];
  const Point& b = vertices_[f.v[1]];
  const double len = dist(a, b);
  // counter-clockwise cell: interior on the left, outward normal on the right
  return {(b.y - a.y) / len, -(b.x - a.x) / len};
}

double Mesh::facet_length(const BoundaryFacet& f) const {
  return dist(vertices_[f.v[0]], vertices_[f.v[1]]);
}

void Mesh::validate() const {
  for (int c = 0; c < num_cells(); ++c)
    if (!(signed_area(c) > 0.0))
      throw MeshError("cell " + std::to_string(c) + " has non-positive signed area");
  std::vector<int> count(edges_.size(), 0);
  for (const auto& ce : cell_edges_)
    for (int e : ce) ++count[e];
  std::size_t boundary = 0;
  for (int n : count) {
    if (n < 1 || n > 2) throw MeshError("edge incidence is not 1 or 2");
    if (n == 1) ++boundary;
  }
  if (boundary != facets_.size()) throw MeshError("boundary facets do not match boundary edges");
  std::vector<int> seen(edges_.size(), 0);
  for (const auto& f : facets_) {
    if (count[f.edge] != 1) throw MeshError("facet on an interior edge");
    if (seen[f.edge]++) throw MeshError("boundary edge tagged twice");
  }
}

Mesh generate_rect_mesh(std::array<double, 2> x_range, std::array<double, 2> y_range, int nx,
                        int ny, const TagRule& tag_rule) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("rect mesh needs nx, ny >= 1");
  if (!(x_range[1] > x_range[0]) || !(y_range[1] > y_range[0]))
    throw std::invalid_argument("rect mesh needs nonempty intervals");
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      pts.push_back({x_range[0] + (x_range[1] - x_range[0]) * i / nx,
                     y_range[0] + (y_range[1] - y_range[0]) * j / ny});
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<std::array<int, 3>> cells;
  cells.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      cells.push_back({a, b, c});
      cells.push_back({a, c, d});
    }
  std::map<std::pair<int, int>, int> tags;
  for (int i = 0; i < nx; ++i) {
    tags[key(id(i, 0), id(i + 1, 0))] = tag_rule(Side::bottom);
    tags[key(id(i, ny), id(i + 1, ny))] = tag_rule(Side::top);
  }
  for (int j = 0; j < ny; ++j) {
    tags[key(id(0, j), id(0, j + 1))] = tag_rule(Side::left);
    tags[key(id(nx, j), id(nx, j + 1))] = tag_rule(Side::right);
  }
  return Mesh(std::move(pts), std::move(cells), tags);
}

Mesh refine_uniform(const Mesh& mesh) {
  const int nv = mesh.num_vertices();
  std::vector<Point> pts = mesh.vertices();
  for (const auto& e : mesh.edges()) {
    const Point& a = mesh.vertices()[e[0]];
    const Point& b = mesh.vertices()[e[1]];
    pts.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
  }
  std::vector<std::array<int, 3>> cells;
  cells.reserve(mesh.cells().size() * 4);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cells()[c];
    const auto& ce = mesh.cell_edges()[c];
    const int m0 = nv + ce[0], m1 = nv + ce[1], m2 = nv + ce[2];
    cells.push_back({t[0], m2, m1});
    cells.push_back({m2, t[1], m0});
    cells.push_back({m1, m0, t[2]});
    cells.push_back({m0, m1, m2});
  }
  std::map<std::pair<int, int>, int> tags;
  for (const auto& f : mesh.facets()) {
    const int m = nv + f.edge;
    tags[key(f.v[0], m)] = f.tag;
    tags[key(m, f.v[1])] = f.tag;
  }
  return Mesh(std::move(pts), std::move(cells), tags);
}

namespace {

std::map<std::pair<int, int>, int> facet_tags(const Mesh& mesh) {
  std::map<std::pair<int, int>, int> tags;
  for (const auto& f : mesh.facets()) tags[key(f.v[0], f.v[1])] = f.tag;
  return tags;
}

}  // namespace

Mesh map_vertices(const Mesh& mesh, const std::function<Point(const Point&)>& map) {
  std::vector<Point> pts;
  pts.reserve(mesh.vertices().size());
  for (const auto& p : mesh.vertices()) pts.push_back(map(p));
  return Mesh(std::move(pts), mesh.cells(), facet_tags(mesh));
}

Mesh retag(const Mesh& mesh, const std::function<int(const Point&, int)>& rule) {
  std::map<std::pair<int, int>, int> tags;
  for (const auto& f : mesh.facets()) {
    const Point& a = mesh.vertices()[f.v[0]];
    const Point& b = mesh.vertices()[f.v[1]];
    tags[key(f.v[0], f.v[1])] = rule({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}, f.tag);
  }
  return Mesh(mesh.vertices(), mesh.cells(), tags);
}

Mesh generate_pocket_channel(int nx, int ny, const PocketGeometry& geo) {
  TagRule rule;
  rule.tags = {{Side::left, geo.inlet_tag},
               {Side::right, geo.outlet_tag},
               {Side::bottom, geo.floor_tag},
               {Side::top, geo.lid_tag}};
  Mesh base = generate_rect_mesh({0.0, geo.length}, {0.0, geo.height}, nx, ny, rule);
  return map_vertices(base, [&](const Point& p) {
    const double s = (p.x - geo.pocket_center) / geo.pocket_half_width;
    const double floor = std::abs(s) < 1.0 ? -geo.pocket_depth * std::sqrt(1.0 - s * s) : 0.0;
    return Point{p.x, floor * (1.0 - p.y / geo.height) + p.y};
  });
}

Mesh generate_half_disc(int n, double radius, Point center, const HalfDiscTags& tags) {
  if (n < 1) throw std::invalid_argument("half disc needs n >= 1");
  // concentric rings: ring k has radius k R / n and 2k equal arcs over
  // [-pi/2, pi/2], so every edge has length ~ R / n
  std::vector<Point> pts{center};
  std::vector<int> first{0};
  auto angle = [](int j, int segments) { return -0.5 * M_PI + M_PI * j / segments; };
  for (int k = 1; k <= n; ++k) {
    first.push_back(static_cast<int>(pts.size()));
    const double r = radius * k / n;
    for (int j = 0; j <= 2 * k; ++j) {
      const double t = angle(j, 2 * k);
      pts.push_back({center.x + r * std::cos(t), center.y + r * std::sin(t)});
    }
  }
  std::vector<std::array<int, 3>> cells;
  auto add = [&](int a, int b, int c) {
    const Point &pa = pts[a], &pb = pts[b], &pc = pts[c];
    const double det = (pb.x - pa.x) * (pc.y - pa.y) - (pc.x - pa.x) * (pb.y - pa.y);
    cells.push_back(det > 0 ? std::array<int, 3>{a, b, c} : std::array<int, 3>{a, c, b});
  };
  for (int k = 1; k <= n; ++k) {
    const int in0 = first[k - 1], out0 = first[k];
    const int min = 2 * (k - 1), mout = 2 * k;
    if (k == 1) {
      for (int j = 0; j < mout; ++j) add(in0, out0 + j, out0 + j + 1);
      continue;
    }
    int i = 0, j = 0;
    while (i < min || j < mout) {
      const bool step_out = i == min || (j < mout && angle(j + 1, mout) <= angle(i + 1, min));
      if (step_out) {
        add(in0 + i, out0 + j, out0 + j + 1);
        ++j;
      } else {
        add(in0 + i, out0 + j, in0 + i + 1);
        ++i;
      }
    }
  }
  std::map<std::pair<int, int>, int> t;
  const int rim = first[n];
  for (int j = 0; j < 2 * n; ++j) {
    const double ymid = 0.5 * (pts[rim + j].y + pts[rim + j + 1].y);
    t[key(rim + j, rim + j + 1)] = ymid < center.y ? tags.contact : tags.free;
  }
  for (int k = 1; k <= n; ++k) {
    const int prev_lo = k == 1 ? 0 : first[k - 1];
    const int prev_hi = k == 1 ? 0 : first[k - 1] + 2 * (k - 1);
    t[key(prev_lo, first[k])] = tags.symmetry;
    t[key(prev_hi, first[k] + 2 * k)] = tags.symmetry;
  }
  return Mesh(std::move(pts), std::move(cells), t);
}

void write_mesh_text(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.precision(17);
  out << "vertices " << mesh.num_vertices() << "\n";
  for (const auto& p : mesh.vertices()) out << p.x << " " << p.y << "\n";
  out << "cells " << mesh.num_cells() << "\n";
  for (const auto& c : mesh.cells()) out << c[0] << " " << c[1] << " " << c[2] << "\n";
  out << "facets " << mesh.facets().size() << "\n";
  for (const auto& f : mesh.facets()) out << f.v[0] << " " << f.v[1] << " " << f.tag << "\n";
  if (!out) throw IoError("write failed: " + path);
}

Mesh read_mesh_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  auto header = [&](const char* expect) {
    std::string word;
    long n = -1;
    if (!(in >> word >> n) || word != expect || n < 0)
      throw IoError(std::string("malformed mesh file, expected section '") + expect + "'");
    return n;
  };
  std::vector<Point> pts(header("vertices"));
  for (auto& p : pts)
    if (!(in >> p.x >> p.y)) throw IoError("malformed vertex line");
  std::vector<std::array<int, 3>> cells(header("cells"));
  for (auto& c : cells)
    if (!(in >> c[0] >> c[1] >> c[2])) throw IoError("malformed cell line");
  const long nf = header("facets");
  std::map<std::pair<int, int>, int> tags;
  for (long i = 0; i < nf; ++i) {
    int a, b, t;
    if (!(in >> a >> b >> t)) throw IoError("malformed facet line");
    tags[key(a, b)] = t;
  }
  return Mesh(std::move(pts), std::move(cells), tags);
}

}  // namespace almlab
