#include <fstream>
#include <stdexcept>

#include "almlab/errors.hpp"
#include "almlab/mesh.hpp"

namespace almlab {

namespace {

void write_block(std::ofstream& out, const std::vector<const VtkField*>& fields) {
  for (const VtkField* f : fields) {
    if (f->components == 1) {
      out << "SCALARS " << f->name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f->data) out << v << "\n";
    } else {
      out << "VECTORS " << f->name << " double\n";
      for (std::size_t i = 0; i + 1 < f->data.size(); i += 2)
        out << f->data[i] << " " << f->data[i + 1] << " 0\n";
    }
  }
}

}  // namespace

void write_vtk(const Mesh& mesh, const std::vector<VtkField>& fields, const std::string& path) {
  std::vector<const VtkField*> point_fields, cell_fields;
  for (const auto& f : fields) {
    if (f.components != 1 && f.components != 2)
      throw std::invalid_argument("vtk field '" + f.name + "' must have 1 or 2 components");
    if (f.name.empty() || f.name.find_first_of(" \t\n") != std::string::npos)
      throw std::invalid_argument("vtk field name must be a single nonempty token");
    const std::size_t n = f.location == FieldLocation::point ? mesh.vertices().size()
                                                             : mesh.cells().size();
    if (f.data.size() != n * static_cast<std::size_t>(f.components))
      throw std::invalid_argument("vtk field '" + f.name + "' has wrong length");
    (f.location == FieldLocation::point ? point_fields : cell_fields).push_back(&f);
  }

  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.precision(12);
  out << "# vtk DataFile Version 3.0\nalmlab\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& p : mesh.vertices()) out << p.x << " " << p.y << " 0\n";
  out << "CELLS " << mesh.num_cells() << " " << 4 * mesh.num_cells() << "\n";
  for (const auto& c : mesh.cells()) out << "3 " << c[0] << " " << c[1] << " " << c[2] << "\n";
  out << "CELL_TYPES " << mesh.num_cells() << "\n";
  for (int c = 0; c < mesh.num_cells(); ++c) out << "5\n";
  if (!point_fields.empty()) {
    out << "POINT_DATA " << mesh.num_vertices() << "\n";
    write_block(out, point_fields);
  }
  if (!cell_fields.empty()) {
    out << "CELL_DATA " << mesh.num_cells() << "\n";
    write_block(out, cell_fields);
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace almlab
