#include "almlab/plate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "almlab/assembly.hpp"
#include "almlab/errors.hpp"
#include "almlab/linalg.hpp"
#include "almlab/quadrature.hpp"

namespace almlab::plate {

namespace {

double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y; }
double comp(const Point& p, int c) { return c == 0 ? p.x : p.y; }

// t^-3 sigma_P scale
double scaled_rigidity(const PlateConfig& cfg) { return cfg.E / (12.0 * (1.0 + cfg.nu)); }

// Local basis of the combined space on one cell: entries 0..nl-1 are u
// functions, then theta component 0, then component 1.
struct LocalBasis {
  int nl = 0;
  std::array<int, 18> dofs{};
  // at a point: shear s = grad v - vartheta, theta value, theta gradient
  std::array<Point, 18> shear{};
  std::array<Point, 18> lam{};  // t^-3 div sigma_P, constant per cell
};

void cell_dofs(const PlateSpaces& s, int cell, LocalBasis& lb) {
  const auto nodes = s.u->cell_nodes(cell);
  lb.nl = s.u->local_size();
  for (int a = 0; a < lb.nl; ++a) {
    lb.dofs[a] = s.u->dof(nodes[a], 0);
    for (int c = 0; c < 2; ++c) lb.dofs[(1 + c) * lb.nl + a] = s.n_u() + s.theta->dof(nodes[a], c);
  }
}

void cell_lambda(const PlateConfig& cfg, const FeSpace& space, const CellGeometry& geo, LocalBasis& lb) {
  Hessian hess[6];
  shape_hessians(space.family(), geo, hess);
  const double dt = scaled_rigidity(cfg), k = 0.5 + cfg.nu / (1.0 - cfg.nu);
  for (int a = 0; a < lb.nl; ++a) {
    lb.lam[a] = {0.0, 0.0};
    const double lap = hess[a][0] + hess[a][2];
    // d_i d_c psi for c = 0 and c = 1
    const Point dxc{hess[a][0], hess[a][1]};
    const Point dyc{hess[a][1], hess[a][2]};
    lb.lam[lb.nl + a] = {dt * (0.5 * lap + k * dxc.x), dt * k * dxc.y};
    lb.lam[2 * lb.nl + a] = {dt * k * dyc.x, dt * (0.5 * lap + k * dyc.y)};
  }
}

void point_shear(const FeSpace& space, const CellGeometry& geo, const std::array<double, 3>& bary,
                 LocalBasis& lb, Point* grad, double* phi) {
  shape_values(space.family(), bary, phi);
  shape_gradients(space.family(), geo, bary, grad);
  for (int a = 0; a < lb.nl; ++a) {
    lb.shear[a] = grad[a];
    lb.shear[lb.nl + a] = {-phi[a], 0.0};
    lb.shear[2 * lb.nl + a] = {0.0, -phi[a]};
  }
}

std::vector<std::string> definiteness_warnings(const SparseMatrix& a) {
  const Inertia in = inertia(a);
  if (in.negative == 0 && in.zero == 0) return {};
  return {"A_h is not positive definite (" + std::to_string(in.negative) + " negative, " +
          std::to_string(in.zero) + " zero pivots); increase gamma_shear"};
}

std::vector<int> clamped_dofs(const PlateSpaces& s) {
  std::vector<int> tags;
  for (const auto& f : s.u->mesh().facets())
    if (std::find(tags.begin(), tags.end(), f.tag) == tags.end()) tags.push_back(f.tag);
  std::vector<int> fixed;
  for (int node : s.u->boundary_nodes(tags)) {
    fixed.push_back(s.u->dof(node, 0));
    fixed.push_back(s.n_u() + s.theta->dof(node, 0));
    fixed.push_back(s.n_u() + s.theta->dof(node, 1));
  }
  std::sort(fixed.begin(), fixed.end());
  return fixed;
}

double shear_norm(const PlateSpaces& s, const Vector& u, const Vector& theta) {
  const auto& rule = triangle_rule(4);
  double sum = 0.0;
  for (int c = 0; c < s.u->mesh().num_cells(); ++c) {
    const auto geo = cell_geometry(s.u->mesh(), c);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Point gu = s.u->evaluate_gradient(u, c, rule.points[q]);
      const double ex = gu.x - s.theta->evaluate(theta, c, rule.points[q], 0);
      const double ey = gu.y - s.theta->evaluate(theta, c, rule.points[q], 1);
      sum += rule.weights[q] * geo.area * (ex * ex + ey * ey);
    }
  }
  return std::sqrt(sum);
}

Point domain_center(const Mesh& mesh) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& v : mesh.vertices()) {
    x0 = std::min(x0, v.x);
    x1 = std::max(x1, v.x);
    y0 = std::min(y0, v.y);
    y1 = std::max(y1, v.y);
  }
  return {0.5 * (x0 + x1), 0.5 * (y0 + y1)};
}

PlateConfig reflected(const PlateConfig& cfg) {
  PlateConfig r = cfg;
  r.f = [f = cfg.f](const Point& x) { return -f(x); };
  r.g = [g = cfg.g](const Point& x) { return -g(x); };
  r.side = ObstacleSide::above;
  return r;
}

}  // namespace

void PlateConfig::validate() const {
  if (!mesh) throw std::invalid_argument("plate config has no mesh");
  if (degree != 1 && degree != 2) throw std::invalid_argument("plate degree must be 1 or 2");
  if (!(E > 0.0)) throw std::invalid_argument("Young's modulus must be positive");
  if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("Poisson ratio must lie in [0, 0.5)");
  if (!(t > 0.0)) throw std::invalid_argument("thickness must be positive");
  if (!(gamma_shear > 0.0) || !(gamma_obstacle > 0.0))
    throw std::invalid_argument("gamma_shear and gamma_obstacle must be positive");
  if (beta < 0.0) throw std::invalid_argument("beta must be nonnegative");
}

PlateSpaces make_spaces(const PlateConfig& cfg) {
  const Family fam = cfg.degree == 1 ? Family::P1 : Family::P2;
  return {std::make_shared<const FeSpace>(cfg.mesh, fam, 1), std::make_shared<const FeSpace>(cfg.mesh, fam, 2)};
}

PlateSystem plate_system(const PlateConfig& cfg, const PlateSpaces& s) {
  cfg.validate();
  const Mesh& mesh = *cfg.mesh;
  const double h = mesh.h_max();
  const double gamma = cfg.gamma_shear / (h * h);
  const double dt = scaled_rigidity(cfg), k = cfg.nu / (1.0 - cfg.nu);
  const auto& rule = triangle_rule(4);
  Triplets t;
  LocalBasis lb;
  Point grad[6];
  double phi[6];
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto geo = cell_geometry(mesh, c);
    cell_dofs(s, c, lb);
    cell_lambda(cfg, *s.u, geo, lb);
    const int nb = 3 * lb.nl;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      point_shear(*s.u, geo, rule.points[q], lb, grad, phi);
      const double w = rule.weights[q] * geo.area;
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) {
          double v = -dot(lb.lam[j], lb.shear[i]) - dot(lb.shear[j], lb.lam[i]) +
                     gamma * dot(lb.shear[j], lb.shear[i]);
          if (i >= lb.nl && j >= lb.nl) {
            // a_P on theta = psi_a e_ci, psi_b e_cj
            const int a = i % lb.nl, b = j % lb.nl, ci = i / lb.nl - 1, cj = j / lb.nl - 1;
            double ee = 0.5 * comp(grad[a], cj) * comp(grad[b], ci);
            if (ci == cj) ee += 0.5 * dot(grad[a], grad[b]);
            v += dt * (ee + k * comp(grad[a], ci) * comp(grad[b], cj));
          }
          if (v != 0.0) t.emplace_back(lb.dofs[i], lb.dofs[j], w * v);
        }
    }
  }
  PlateSystem sys;
  sys.matrix = from_triplets(s.n_dofs(), s.n_dofs(), t);
  sys.rhs = Vector::Zero(s.n_dofs());
  sys.rhs.head(s.n_u()) = assemble_load(*s.u, cfg.f);
  return sys;
}

PlateResult solve_mindlin_alm(const PlateConfig& cfg) {
  cfg.validate();
  PlateResult r;
  r.spaces = make_spaces(cfg);
  const PlateSystem sys = plate_system(cfg, r.spaces);
  const DofReduction red(r.spaces.n_dofs(), clamped_dofs(r.spaces));
  const SparseMatrix a = red.restrict(sys.matrix);
  r.warnings = definiteness_warnings(a);
  const Vector z = red.expand(solve_linear(a, red.restrict_rhs(sys.matrix, sys.rhs)));
  r.u = z.head(r.spaces.n_u());
  r.theta = z.tail(r.spaces.theta->n_dofs());
  r.shear_norm = shear_norm(r.spaces, r.u, r.theta);
  r.center_deflection = r.spaces.u->evaluate_at(r.u, domain_center(*cfg.mesh));
  return r;
}

std::array<double, 3> ObstacleResult::kkt() const {
  std::array<double, 3> k{0.0, 0.0, 0.0};
  for (int i = 0; i < p.size(); ++i) {
    k[0] = std::max(k[0], -p[i]);
    k[1] = std::max(k[1], -gap[i]);
    k[2] = std::max(k[2], std::abs(p[i] * gap[i]));
  }
  return k;
}

ObstacleResult solve_plate_obstacle(const PlateConfig& cfg_in, ObstacleVariant variant, double tol,
                                    int max_iter) {
  cfg_in.validate();
  const bool flip = cfg_in.side == ObstacleSide::below;
  const PlateConfig cfg = flip ? reflected(cfg_in) : cfg_in;
  ObstacleResult r;
  r.spaces = make_spaces(cfg);
  const PlateSpaces& s = r.spaces;
  const Mesh& mesh = *cfg.mesh;
  const PlateSystem sys = plate_system(cfg, s);
  const DofReduction red(s.n_dofs(), clamped_dofs(s));

  Triplets tb;
  std::vector<double> g, w, offset;
  std::vector<int> point_cell, point_vertex;
  int row = 0;
  if (variant == ObstacleVariant::multiplier) {
    const FeSpace p1(cfg.mesh, Family::P1);
    const Vector ml = lumped_mass(p1);
    std::vector<bool> on_boundary(mesh.num_vertices(), false);
    for (const auto& f : mesh.facets()) on_boundary[f.v[0]] = on_boundary[f.v[1]] = true;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      if (on_boundary[v]) continue;
      tb.emplace_back(row++, s.u->dof(v, 0), 1.0);
      point_vertex.push_back(v);
      r.points.push_back(mesh.vertices()[v]);
      g.push_back(cfg.g(mesh.vertices()[v]));
      w.push_back(ml[v]);
    }
  } else {
    // div div sigma_P(theta_h) vanishes cell-wise for P1/P2 rotations, so the
    // reconstructed multiplier estimate is -f and T = 0
    const auto& rule = triangle_rule(4);
    double phi[6];
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const auto geo = cell_geometry(mesh, c);
      const auto nodes = s.u->cell_nodes(c);
      for (std::size_t q = 0; q < rule.points.size(); ++q, ++row) {
        shape_values(s.u->family(), rule.points[q], phi);
        for (int a = 0; a < s.u->local_size(); ++a) tb.emplace_back(row, s.u->dof(nodes[a], 0), phi[a]);
        const Point x = geo.map(rule.points[q]);
        r.points.push_back(x);
        g.push_back(cfg.g(x));
        w.push_back(rule.weights[q] * geo.area);
        offset.push_back(-cfg.f(x));
        point_cell.push_back(c);
      }
    }
  }
  const SparseMatrix b_full = from_triplets(row, s.n_dofs(), tb);
  auto& p = r.problem;
  p.a = red.restrict(sys.matrix);
  p.rhs_f = red.restrict_rhs(sys.matrix, sys.rhs);
  p.B = red.restrict_columns(b_full);
  p.g = Eigen::Map<Vector>(g.data(), row);
  p.weights = Eigen::Map<Vector>(w.data(), row);
  p.gamma0 = cfg.gamma_obstacle;
  p.r = 2.0;
  p.h = mesh.h_max();
  p.compliance = cfg.beta;
  p.mode = saddle::Mode::inequality;
  if (variant == ObstacleVariant::multiplier) {
    p.variant = saddle::Variant::multiplier;
  } else {
    p.variant = saddle::Variant::eliminated;
    p.T = SparseMatrix(row, p.n_primal());
    p.t_offset = Eigen::Map<Vector>(offset.data(), row);
  }
  r.warnings = definiteness_warnings(p.a);
  try {
    r.solve = saddle::solve_inequality(p, {}, tol, max_iter);
  } catch (const saddle::CyclingError&) {
    r.warnings.push_back("active-set cycling; switched to incremental active-set updates");
    r.solve = saddle::solve_inequality_incremental(p, tol, max_iter);
  } catch (const saddle::SaddleNonConvergence&) {
    r.warnings.push_back("semismooth Newton stalled; switched to incremental active-set updates");
    r.solve = saddle::solve_inequality_incremental(p, tol, max_iter);
  }
  r.warnings.insert(r.warnings.end(), r.solve.warnings.begin(), r.solve.warnings.end());

  const Vector z = red.expand(r.solve.state.u);
  r.u = z.head(s.n_u());
  r.theta = z.tail(s.theta->n_dofs());
  r.p = -r.solve.point_multiplier;
  r.gap = p.g - b_full * z + cfg.beta * r.p;
  r.active = r.solve.state.active;

  r.cell_p.assign(mesh.num_cells(), 0.0);
  std::vector<double> weight(mesh.num_cells(), 0.0);
  if (variant == ObstacleVariant::multiplier) {
    std::vector<double> nodal(mesh.num_vertices(), 0.0);
    for (int i = 0; i < row; ++i) nodal[point_vertex[i]] = r.p[i];
    for (int c = 0; c < mesh.num_cells(); ++c)
      for (int v : mesh.cells()[c]) r.cell_p[c] += nodal[v] / 3.0;
  } else {
    for (int i = 0; i < row; ++i) {
      r.cell_p[point_cell[i]] += w[i] * r.p[i];
      weight[point_cell[i]] += w[i];
    }
    for (int c = 0; c < mesh.num_cells(); ++c) r.cell_p[c] /= weight[c];
  }
  if (flip) {
    r.u = -r.u;
    r.theta = -r.theta;
  }
  r.shear_norm = shear_norm(s, r.u, r.theta);
  r.center_deflection = s.u->evaluate_at(r.u, domain_center(mesh));
  return r;
}

std::vector<std::vector<std::array<double, 3>>> moment_tensor(const FeSpace& theta_space, const Vector& theta,
                                                              const PlateConfig& cfg) {
  if (theta_space.components() != 2 || theta.size() != theta_space.n_dofs())
    throw std::invalid_argument("moment_tensor needs rotations on a two-component space");
  const double d = cfg.E * cfg.t * cfg.t * cfg.t / (12.0 * (1.0 + cfg.nu));
  const double k = cfg.nu / (1.0 - cfg.nu);
  const auto& rule = triangle_rule(4);
  std::vector<std::vector<std::array<double, 3>>> out(theta_space.mesh().num_cells());
  for (int c = 0; c < theta_space.mesh().num_cells(); ++c) {
    for (const auto& b : rule.points) {
      const Point g0 = theta_space.evaluate_gradient(theta, c, b, 0);
      const Point g1 = theta_space.evaluate_gradient(theta, c, b, 1);
      const double div = g0.x + g1.y;
      out[c].push_back({d * (g0.x + k * div), d * 0.5 * (g0.y + g1.x), d * (g1.y + k * div)});
    }
  }
  return out;
}

PlateConfig obstacle_benchmark(int n) {
  PlateConfig c;
  c.mesh = std::make_shared<const Mesh>(generate_rect_mesh({0, 1}, {0, 1}, n, n));
  c.E = 1.0;
  c.nu = 0.0;
  c.t = 1.0;
  c.gamma_obstacle = 10.0 * c.E;
  c.gamma_shear = c.E / 10.0;
  c.g = [](const Point& x) { return 100.0 * ((x.x - 0.5) * (x.x - 0.5) + (x.y - 0.5) * (x.y - 0.5)); };
  c.f = [](const Point&) { return 100.0; };
  c.side = ObstacleSide::above;
  return c;
}

}  // namespace almlab::plate
