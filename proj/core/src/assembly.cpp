#include "almlab/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/SparseCholesky>

#include "almlab/errors.hpp"
#include "almlab/quadrature.hpp"

namespace almlab {

bool has_tags(const Mesh& mesh, const std::vector<int>& tags) {
  return std::all_of(tags.begin(), tags.end(), [&](int t) { return mesh.has_tag(t); });
}

namespace {

void require_tags(const Mesh& mesh, const std::vector<int>& tags) {
  for (int t : tags)
    if (!mesh.has_tag(t)) throw std::invalid_argument("unknown boundary tag " + std::to_string(t));
}

bool tagged(const std::vector<int>& tags, int t) {
  return std::find(tags.begin(), tags.end(), t) != tags.end();
}

}  // namespace

SparseMatrix assemble_grad_grad(const FeSpace& space, const ScalarFn& coefficient) {
  if (space.components() != 1) throw std::invalid_argument("assemble_grad_grad needs a scalar space");
  const auto& rule = triangle_rule(4);
  const int nl = space.local_size();
  Triplets t;
  t.reserve(static_cast<std::size_t>(space.mesh().num_cells() * nl * nl));
  Point grad[6];
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const auto geo = cell_geometry(space.mesh(), c);
    const auto nodes = space.cell_nodes(c);
    double local[6][6] = {};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      shape_gradients(space.family(), geo, rule.points[q], grad);
      double w = rule.weights[q] * geo.area;
      if (coefficient) w *= coefficient(geo.map(rule.points[q]));
      for (int a = 0; a < nl; ++a)
        for (int b = 0; b < nl; ++b) local[a][b] += w * (grad[a].x * grad[b].x + grad[a].y * grad[b].y);
    }
    for (int a = 0; a < nl; ++a)
      for (int b = 0; b < nl; ++b) t.emplace_back(nodes[a], nodes[b], local[a][b]);
  }
  return from_triplets(space.n_dofs(), space.n_dofs(), t);
}

SparseMatrix assemble_vector_grad_grad(const FeSpace& space, double mu) {
  if (space.components() != 2) throw std::invalid_argument("vector grad-grad needs a vector space");
  FeSpace scalar(space.mesh_ptr(), space.family(), 1);
  const SparseMatrix k = assemble_grad_grad(scalar);
  Triplets t;
  const int n = scalar.n_dofs();
  for (int r = 0; r < k.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(k, r); it; ++it)
      for (int c = 0; c < 2; ++c) t.emplace_back(c * n + it.row(), c * n + it.col(), mu * it.value());
  return from_triplets(space.n_dofs(), space.n_dofs(), t);
}

SparseMatrix assemble_mass(const FeSpace& space) {
  const auto& rule = triangle_rule(4);
  const int nl = space.local_size();
  Triplets t;
  double phi[6];
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const auto geo = cell_geometry(space.mesh(), c);
    const auto nodes = space.cell_nodes(c);
    double local[6][6] = {};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      shape_values(space.family(), rule.points[q], phi);
      const double w = rule.weights[q] * geo.area;
      for (int a = 0; a < nl; ++a)
        for (int b = 0; b < nl; ++b) local[a][b] += w * phi[a] * phi[b];
    }
    for (int comp = 0; comp < space.components(); ++comp)
      for (int a = 0; a < nl; ++a)
        for (int b = 0; b < nl; ++b)
          t.emplace_back(space.dof(nodes[a], comp), space.dof(nodes[b], comp), local[a][b]);
  }
  return from_triplets(space.n_dofs(), space.n_dofs(), t);
}

SparseMatrix assemble_boundary_mass(const FeSpace& space, const std::vector<int>& tags) {
  require_tags(space.mesh(), tags);
  const auto& rule = gauss3();
  const int nl = space.local_size();
  Triplets t;
  double phi[6];
  for (const auto& f : space.mesh().facets()) {
    if (!tagged(tags, f.tag)) continue;
    const double len = space.mesh().facet_length(f);
    const auto nodes = space.cell_nodes(f.cell);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      shape_values(space.family(), edge_bary(f.local_edge, rule.points[q]), phi);
      const double w = rule.weights[q] * len;
      for (int comp = 0; comp < space.components(); ++comp)
        for (int a = 0; a < nl; ++a)
          for (int b = 0; b < nl; ++b)
            if (phi[a] != 0.0 && phi[b] != 0.0)
              t.emplace_back(space.dof(nodes[a], comp), space.dof(nodes[b], comp), w * phi[a] * phi[b]);
    }
  }
  return from_triplets(space.n_dofs(), space.n_dofs(), t);
}

Vector lumped_mass(const FeSpace& space) {
  if (space.family() != Family::P1 || space.components() != 1)
    throw std::invalid_argument("lumped mass is defined for scalar P1");
  Vector m = Vector::Zero(space.n_dofs());
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const double a = space.mesh().signed_area(c) / 3.0;
    for (int v : space.mesh().cells()[c]) m[v] += a;
  }
  return m;
}

SparseMatrix assemble_div_coupling(const FeSpace& velocity, const FeSpace& pressure) {
  if (velocity.mesh_ptr() != pressure.mesh_ptr())
    throw std::invalid_argument("div coupling spaces must share the mesh");
  if (velocity.components() != 2 || pressure.components() != 1)
    throw std::invalid_argument("div coupling needs vector velocity and scalar pressure");
  const auto& rule = triangle_rule(4);
  const int nu = velocity.local_size(), np = pressure.local_size();
  Triplets t;
  double psi[6];
  Point grad[6];
  for (int c = 0; c < velocity.mesh().num_cells(); ++c) {
    const auto geo = cell_geometry(velocity.mesh(), c);
    const auto vn = velocity.cell_nodes(c);
    const auto pn = pressure.cell_nodes(c);
    double lx[6][6] = {}, ly[6][6] = {};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      shape_values(pressure.family(), rule.points[q], psi);
      shape_gradients(velocity.family(), geo, rule.points[q], grad);
      const double w = rule.weights[q] * geo.area;
      for (int i = 0; i < np; ++i)
        for (int a = 0; a < nu; ++a) {
          lx[i][a] += w * psi[i] * grad[a].x;
          ly[i][a] += w * psi[i] * grad[a].y;
        }
    }
    for (int i = 0; i < np; ++i)
      for (int a = 0; a < nu; ++a) {
        t.emplace_back(pn[i], velocity.dof(vn[a], 0), lx[i][a]);
        t.emplace_back(pn[i], velocity.dof(vn[a], 1), ly[i][a]);
      }
  }
  return from_triplets(pressure.n_dofs(), velocity.n_dofs(), t);
}

SparseMatrix assemble_boundary_flux(const FeSpace& space, const std::vector<int>& tags,
                                    const ScalarFn& coefficient) {
  require_tags(space.mesh(), tags);
  const auto& rule = gauss3();
  const int nl = space.local_size();
  Triplets t;
  double phi[6];
  Point grad[6];
  for (const auto& f : space.mesh().facets()) {
    if (!tagged(tags, f.tag)) continue;
    const auto geo = cell_geometry(space.mesh(), f.cell);
    const Point n = space.mesh().facet_normal(f);
    const double len = space.mesh().facet_length(f);
    const auto nodes = space.cell_nodes(f.cell);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto b = edge_bary(f.local_edge, rule.points[q]);
      shape_values(space.family(), b, phi);
      shape_gradients(space.family(), geo, b, grad);
      double w = rule.weights[q] * len;
      if (coefficient) w *= coefficient(geo.map(b));
      for (int comp = 0; comp < space.components(); ++comp)
        for (int i = 0; i < nl; ++i) {
          if (phi[i] == 0.0) continue;
          for (int j = 0; j < nl; ++j)
            t.emplace_back(space.dof(nodes[i], comp), space.dof(nodes[j], comp),
                           w * phi[i] * (grad[j].x * n.x + grad[j].y * n.y));
        }
    }
  }
  return from_triplets(space.n_dofs(), space.n_dofs(), t);
}

Vector assemble_load(const FeSpace& space, const ScalarFn& f) {
  if (space.components() != 1) throw std::invalid_argument("scalar load on a vector space");
  const auto& rule = triangle_rule(4);
  Vector b = Vector::Zero(space.n_dofs());
  double phi[6];
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const auto geo = cell_geometry(space.mesh(), c);
    const auto nodes = space.cell_nodes(c);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      shape_values(space.family(), rule.points[q], phi);
      const double w = rule.weights[q] * geo.area * f(geo.map(rule.points[q]));
      for (int a = 0; a < space.local_size(); ++a) b[nodes[a]] += w * phi[a];
    }
  }
  return b;
}

Vector assemble_load(const FeSpace& space, const VectorFn& f) {
  if (space.components() != 2) throw std::invalid_argument("vector load on a scalar space");
  const auto& rule = triangle_rule(4);
  Vector b = Vector::Zero(space.n_dofs());
  double phi[6];
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const auto geo = cell_geometry(space.mesh(), c);
    const auto nodes = space.cell_nodes(c);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      shape_values(space.family(), rule.points[q], phi);
      const Point v = f(geo.map(rule.points[q]));
      const double w = rule.weights[q] * geo.area;
      for (int a = 0; a < space.local_size(); ++a) {
        b[space.dof(nodes[a], 0)] += w * v.x * phi[a];
        b[space.dof(nodes[a], 1)] += w * v.y * phi[a];
      }
    }
  }
  return b;
}

Vector assemble_boundary_load(const FeSpace& space, const std::vector<int>& tags, const ScalarFn& g) {
  require_tags(space.mesh(), tags);
  if (space.components() != 1) throw std::invalid_argument("scalar boundary load on a vector space");
  const auto& rule = gauss3();
  Vector b = Vector::Zero(space.n_dofs());
  double phi[6];
  for (const auto& f : space.mesh().facets()) {
    if (!tagged(tags, f.tag)) continue;
    const auto geo = cell_geometry(space.mesh(), f.cell);
    const double len = space.mesh().facet_length(f);
    const auto nodes = space.cell_nodes(f.cell);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto bary = edge_bary(f.local_edge, rule.points[q]);
      shape_values(space.family(), bary, phi);
      const double w = rule.weights[q] * len * g(geo.map(bary));
      for (int a = 0; a < space.local_size(); ++a) b[nodes[a]] += w * phi[a];
    }
  }
  return b;
}

namespace {

ErrorNorms error_norms_impl(const FeSpace& space, const Vector& coeffs, const ScalarFn* exact,
                            const VectorFn* exact_grad) {
  if (coeffs.size() != space.n_dofs()) throw std::invalid_argument("coefficient vector size mismatch");
  const auto& rule = triangle_rule(2 * space.degree() + 2);
  double l2 = 0.0, h1 = 0.0;
  double phi[6];
  Point grad[6];
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const auto geo = cell_geometry(space.mesh(), c);
    const auto nodes = space.cell_nodes(c);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      shape_values(space.family(), rule.points[q], phi);
      shape_gradients(space.family(), geo, rule.points[q], grad);
      const Point x = geo.map(rule.points[q]);
      const double w = rule.weights[q] * geo.area;
      for (int comp = 0; comp < space.components(); ++comp) {
        double u = 0.0;
        Point g{0.0, 0.0};
        for (int a = 0; a < space.local_size(); ++a) {
          const double ca = coeffs[space.dof(nodes[a], comp)];
          u += ca * phi[a];
          g.x += ca * grad[a].x;
          g.y += ca * grad[a].y;
        }
        const double e = u - exact[comp](x);
        const Point ge = exact_grad[comp](x);
        l2 += w * e * e;
        h1 += w * ((g.x - ge.x) * (g.x - ge.x) + (g.y - ge.y) * (g.y - ge.y));
      }
    }
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

}  // namespace

ErrorNorms error_norms(const FeSpace& space, const Vector& coeffs, const ScalarFn& exact,
                       const VectorFn& exact_grad) {
  if (space.components() != 1) throw std::invalid_argument("scalar error norms on a vector space");
  return error_norms_impl(space, coeffs, &exact, &exact_grad);
}

ErrorNorms error_norms(const FeSpace& space, const Vector& coeffs, const std::array<ScalarFn, 2>& exact,
                       const std::array<VectorFn, 2>& exact_grad) {
  if (space.components() != 2) throw std::invalid_argument("vector error norms on a scalar space");
  return error_norms_impl(space, coeffs, exact.data(), exact_grad.data());
}

double generalized_max_eigenvalue(const SparseMatrix& flux_gram, const SparseMatrix& stiffness,
                                  const SparseMatrix& mass, double tol, int max_iter) {
  const int n = static_cast<int>(stiffness.rows());
  using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
  const double shift = 1e-10 * stiffness.diagonal().sum() / std::max(mass.diagonal().sum(), 1e-300);
  ColMatrix reg = stiffness + shift * mass;
  Eigen::SimplicialLDLT<ColMatrix> solver(reg);
  if (solver.info() != Eigen::Success) throw SingularMatrixError("stiffness factorisation failed", -1);

  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = dist(rng);
  double mu = 0.0;
  std::vector<double> history;
  for (int it = 0; it < max_iter; ++it) {
    Vector y = solver.solve(flux_gram * x);
    const double ny = y.norm();
    if (ny == 0.0) return 0.0;
    x = y / ny;
    const double num = x.dot(flux_gram * x);
    const double den = x.dot(stiffness * x);
    const double next = den > 0.0 ? num / den : 0.0;
    history.push_back(next);
    if (it > 2 && std::abs(next - mu) <= tol * std::abs(next)) return next;
    mu = next;
  }
  throw NonConvergenceError("power iteration for the inverse constant did not converge", history);
}

double inverse_constant(const FeSpace& space, const std::vector<int>& tags) {
  require_tags(space.mesh(), tags);
  const auto& rule = gauss3();
  const int nl = space.local_size();
  const double h = space.mesh().h_max();
  Triplets t;
  Point grad[6];
  for (const auto& f : space.mesh().facets()) {
    if (!tagged(tags, f.tag)) continue;
    const auto geo = cell_geometry(space.mesh(), f.cell);
    const Point n = space.mesh().facet_normal(f);
    const double len = space.mesh().facet_length(f);
    const auto nodes = space.cell_nodes(f.cell);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      shape_gradients(space.family(), geo, edge_bary(f.local_edge, rule.points[q]), grad);
      const double w = h * rule.weights[q] * len;
      double dn[6];
      for (int a = 0; a < nl; ++a) dn[a] = grad[a].x * n.x + grad[a].y * n.y;
      for (int comp = 0; comp < space.components(); ++comp)
        for (int a = 0; a < nl; ++a)
          for (int b = 0; b < nl; ++b)
            t.emplace_back(space.dof(nodes[a], comp), space.dof(nodes[b], comp), w * dn[a] * dn[b]);
    }
  }
  const SparseMatrix gram = from_triplets(space.n_dofs(), space.n_dofs(), t);
  const SparseMatrix k =
      space.components() == 1 ? assemble_grad_grad(space) : assemble_vector_grad_grad(space);
  return generalized_max_eigenvalue(gram, k, assemble_mass(space));
}

}  // namespace almlab
