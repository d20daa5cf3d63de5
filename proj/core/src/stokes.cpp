#include "almlab/stokes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "almlab/assembly.hpp"
#include "almlab/errors.hpp"
#include "almlab/quadrature.hpp"

namespace almlab::stokes {

namespace {

void validate(const StokesConfig& cfg) {
  if (!cfg.mesh) throw std::invalid_argument("Stokes config has no mesh");
  if (!(cfg.viscosity > 0.0)) throw std::invalid_argument("viscosity must be positive");
  if (!(cfg.gamma0 > 0.0)) throw std::invalid_argument("gamma0 must be positive");
  for (const auto& [tag, fn] : cfg.dirichlet) {
    if (!cfg.mesh->has_tag(tag)) throw std::invalid_argument("unknown boundary tag " + std::to_string(tag));
    if (!fn) throw std::invalid_argument("empty Dirichlet function for tag " + std::to_string(tag));
  }
}

bool has_natural_boundary(const StokesConfig& cfg) {
  for (const auto& f : cfg.mesh->facets())
    if (!cfg.dirichlet.count(f.tag)) return true;
  return false;
}

// fixed velocity dofs and values; later tags win at shared corners
std::map<int, double> velocity_data(const StokesConfig& cfg, const FeSpace& vel) {
  std::map<int, double> fixed;
  for (const auto& [tag, fn] : cfg.dirichlet) {
    for (int node : vel.boundary_nodes({tag})) {
      const Point v = fn(vel.node_coordinate(node));
      fixed[vel.dof(node, 0)] = v.x;
      fixed[vel.dof(node, 1)] = v.y;
    }
  }
  return fixed;
}

void check_flux(const StokesConfig& cfg) {
  const auto& rule = gauss3();
  double flux = 0.0, total = 0.0;
  for (const auto& f : cfg.mesh->facets()) {
    const Point& a = cfg.mesh->vertices()[f.v[0]];
    const Point& b = cfg.mesh->vertices()[f.v[1]];
    const Point n = cfg.mesh->facet_normal(f);
    const double len = cfg.mesh->facet_length(f);
    const auto& fn = cfg.dirichlet.at(f.tag);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double s = rule.points[q];
      const Point v = fn({a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)});
      const double un = (v.x * n.x + v.y * n.y) * rule.weights[q] * len;
      flux += un;
      total += std::abs(un);
    }
  }
  if (std::abs(flux) > 1e-10 * std::max(1.0, total)) {
    std::ostringstream os;
    os << "Dirichlet velocity data on a closed boundary has net flux " << flux;
    throw Error(os.str());
  }
}

DofReduction velocity_reduction(const StokesConfig& cfg, const FeSpace& vel, int extra = 0,
                                std::vector<int> extra_fixed = {}) {
  const auto data = velocity_data(cfg, vel);
  std::vector<int> fixed;
  std::vector<double> values;
  for (const auto& [dof, v] : data) {
    fixed.push_back(dof);
    values.push_back(v);
  }
  for (int d : extra_fixed) {
    fixed.push_back(d);
    values.push_back(0.0);
  }
  return DofReduction(vel.n_dofs() + extra, fixed, values);
}

}  // namespace

StokesSpaces make_spaces(const std::shared_ptr<const Mesh>& mesh) {
  return {std::make_shared<const FeSpace>(mesh, Family::P2, 2),
          std::make_shared<const FeSpace>(mesh, Family::P1)};
}

StokesSystem stokes_system(const StokesConfig& cfg, const StokesSpaces& spaces) {
  StokesSystem s;
  s.n_velocity = spaces.velocity->n_dofs();
  s.n_pressure = spaces.pressure->n_dofs();
  const SparseMatrix a = assemble_vector_grad_grad(*spaces.velocity, cfg.viscosity);
  const SparseMatrix d = assemble_div_coupling(*spaces.velocity, *spaces.pressure);
  Triplets t;
  for (int i = 0; i < a.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (int i = 0; i < d.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(d, i); it; ++it) {
      t.emplace_back(s.n_velocity + it.row(), it.col(), -it.value());
      t.emplace_back(it.col(), s.n_velocity + it.row(), -it.value());
    }
  const int n = s.n_velocity + s.n_pressure;
  s.matrix = from_triplets(n, n, t);
  s.rhs = Vector::Zero(n);
  s.rhs.head(s.n_velocity) = assemble_load(*spaces.velocity, cfg.f);
  return s;
}

StokesResult solve_stokes(const StokesConfig& cfg) {
  validate(cfg);
  StokesResult r;
  r.spaces = make_spaces(cfg.mesh);
  const StokesSystem sys = stokes_system(cfg, r.spaces);
  const bool natural = has_natural_boundary(cfg);
  if (!natural) check_flux(cfg);
  std::vector<int> pin;
  if (!natural) pin.push_back(sys.n_velocity);
  const DofReduction red = velocity_reduction(cfg, *r.spaces.velocity, sys.n_pressure, pin);
  const Vector z = red.expand(solve_linear(red.restrict(sys.matrix), red.restrict_rhs(sys.matrix, sys.rhs)));
  r.u = z.head(sys.n_velocity);
  r.p = z.tail(sys.n_pressure);
  if (!natural) {
    const SparseMatrix m = assemble_mass(*r.spaces.pressure);
    const Vector ones = Vector::Ones(sys.n_pressure);
    r.p.array() -= ones.dot(m * r.p) / ones.dot(m * ones);
  }
  const SparseMatrix d = assemble_div_coupling(*r.spaces.velocity, *r.spaces.pressure);
  Vector du = d * r.u;
  if (!natural) du[0] = 0.0;  // the pinned row carries no constraint
  const double scale = norm_inf(d) * r.u.lpNorm<Eigen::Infinity>();
  r.divergence_residual = scale > 0 ? du.lpNorm<Eigen::Infinity>() / scale : 0.0;
  return r;
}

CavitationResult solve_cavitation(const StokesConfig& cfg, double tol, int max_iter) {
  validate(cfg);
  if (!cfg.cavitation) throw std::invalid_argument("solve_cavitation needs cavitation = true");
  CavitationResult r;
  if (cfg.gamma0 > 1.0) {
    std::ostringstream os;
    os << "gamma0 = " << cfg.gamma0 << " is large; the cavitation switch prefers gamma0 <= 1";
    r.warnings.push_back(os.str());
  }
  const StokesResult stokes = solve_stokes(cfg);
  r.spaces = stokes.spaces;
  const FeSpace& vel = *r.spaces.velocity;
  const FeSpace& pres = *r.spaces.pressure;

  const SparseMatrix a = assemble_vector_grad_grad(vel, cfg.viscosity);
  const Vector f = assemble_load(vel, cfg.f);
  const SparseMatrix d = assemble_div_coupling(vel, pres);
  const Vector ml = lumped_mass(pres);
  // nodal divergence constraint -M_L^-1 D u <= 0, multiplier -p
  const SparseMatrix b_full = SparseMatrix(-(ml.cwiseInverse().asDiagonal() * d));
  const DofReduction red = velocity_reduction(cfg, vel);

  auto& p = r.problem;
  p.a = red.restrict(a);
  p.rhs_f = red.restrict_rhs(a, f);
  p.B = red.restrict_columns(b_full);
  p.g = -(b_full * red.fixed_values());
  p.weights = ml;
  p.gamma0 = cfg.gamma0;
  p.r = 0.0;
  p.h = cfg.mesh->h_max();
  p.mode = saddle::Mode::inequality;
  p.variant = saddle::Variant::multiplier;

  saddle::SaddleState start;
  start.u = Vector(red.prolongation().transpose() * stokes.u);
  start.lambda = -stokes.p;
  r.solve = saddle::solve_inequality(p, start, tol, max_iter);
  r.warnings.insert(r.warnings.end(), r.solve.warnings.begin(), r.solve.warnings.end());

  r.u = red.expand(r.solve.state.u);
  r.p = -r.solve.state.lambda;
  r.cavitated.resize(r.p.size());
  for (std::size_t i = 0; i < r.cavitated.size(); ++i) r.cavitated[i] = !r.solve.state.active[i];
  r.nodal_divergence = ml.cwiseInverse().cwiseProduct(d * r.u);

  double proj = 0.0;
  for (int i = 0; i < r.p.size(); ++i) {
    const double div = r.nodal_divergence[i];
    r.complementarity += ml[i] * std::abs(r.p[i] * std::min(div, 0.0));
    const double e = r.p[i] - cfg.gamma0 * std::max(r.p[i] / cfg.gamma0 - div, 0.0);
    proj += ml[i] * e * e;
  }
  r.projection_residual = std::sqrt(proj);

  const Mesh& mesh = *cfg.mesh;
  r.cavitated_cell.assign(mesh.num_cells(), false);
  r.min_cavitated_cell_divergence = INFINITY;
  const std::array<double, 3> centroid{1.0 / 3, 1.0 / 3, 1.0 / 3};
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& cell = mesh.cells()[c];
    if (!(r.cavitated[cell[0]] && r.cavitated[cell[1]] && r.cavitated[cell[2]])) continue;
    r.cavitated_cell[c] = true;
    // div u is affine per cell, so its mean is the centroid value
    const double div = vel.evaluate_gradient(r.u, c, centroid, 0).x + vel.evaluate_gradient(r.u, c, centroid, 1).y;
    r.min_cavitated_cell_divergence = std::min(r.min_cavitated_cell_divergence, div);
  }
  return r;
}

double lift_resultant(const FeSpace& pressure, const Vector& p, int tag) {
  const Mesh& mesh = pressure.mesh();
  if (!mesh.has_tag(tag)) throw std::invalid_argument("unknown boundary tag " + std::to_string(tag));
  if (pressure.family() != Family::P1 || p.size() != pressure.n_dofs())
    throw std::invalid_argument("lift_resultant needs a P1 pressure vector");
  double total = 0.0;
  for (const auto& f : mesh.facets())
    if (f.tag == tag) total += 0.5 * (p[f.v[0]] + p[f.v[1]]) * mesh.facet_length(f);
  return total;
}

StokesConfig pocket_channel(int nx, int ny, double gamma0) {
  const PocketGeometry geo;
  StokesConfig c;
  c.mesh = std::make_shared<const Mesh>(generate_pocket_channel(nx, ny, geo));
  c.gamma0 = gamma0;
  c.dirichlet[geo.floor_tag] = [](const Point&) { return Point{0.0, 0.0}; };
  c.dirichlet[geo.lid_tag] = [](const Point&) { return Point{1.0, 0.0}; };
  return c;
}

}  // namespace almlab::stokes
