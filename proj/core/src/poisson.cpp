#include "almlab/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "almlab/assembly.hpp"
#include "almlab/errors.hpp"
#include "almlab/quadrature.hpp"

namespace almlab::poisson {

namespace {

bool tagged(const std::vector<int>& tags, int t) {
  return std::find(tags.begin(), tags.end(), t) != tags.end();
}

Family family_of(int degree) {
  if (degree == 1) return Family::P1;
  if (degree == 2) return Family::P2;
  throw std::invalid_argument("Poisson degree must be 1 or 2");
}

// int_Gamma g d_n phi_i
Vector flux_load(const FeSpace& space, const std::vector<int>& tags, const ScalarFn& g) {
  const auto& rule = gauss3();
  Vector b = Vector::Zero(space.n_dofs());
  Point grad[6];
  for (const auto& f : space.mesh().facets()) {
    if (!tagged(tags, f.tag)) continue;
    const auto geo = cell_geometry(space.mesh(), f.cell);
    const Point n = space.mesh().facet_normal(f);
    const double len = space.mesh().facet_length(f);
    const auto nodes = space.cell_nodes(f.cell);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto bary = edge_bary(f.local_edge, rule.points[q]);
      shape_gradients(space.family(), geo, bary, grad);
      const double w = rule.weights[q] * len * g(geo.map(bary));
      for (int a = 0; a < space.local_size(); ++a) b[nodes[a]] += w * (grad[a].x * n.x + grad[a].y * n.y);
    }
  }
  return b;
}

std::vector<int> all_tags(const Mesh& mesh) {
  std::vector<int> t;
  for (const auto& f : mesh.facets())
    if (!tagged(t, f.tag)) t.push_back(f.tag);
  std::sort(t.begin(), t.end());
  return t;
}

struct Prepared {
  std::shared_ptr<const FeSpace> space;
  double gamma_c = 0.0;
  double gamma0 = 0.0;
  std::vector<std::string> warnings;
};

Prepared prepare(const PoissonConfig& cfg, int degree, const std::vector<int>& nitsche_tags) {
  if (!cfg.mesh) throw std::invalid_argument("Poisson config has no mesh");
  Prepared p;
  p.space = std::make_shared<const FeSpace>(cfg.mesh, family_of(degree));
  p.gamma_c = nitsche_tags.empty() ? 0.0 : inverse_constant(*p.space, nitsche_tags);
  p.gamma0 = cfg.gamma0.value_or(2.0 * p.gamma_c);
  if (!(p.gamma0 > 0.0)) throw std::invalid_argument("gamma0 must be positive");
  if (!nitsche_tags.empty() && !(p.gamma0 > p.gamma_c)) {
    std::ostringstream os;
    os << "gamma0 = " << p.gamma0 << " does not exceed the inverse constant estimate " << p.gamma_c;
    p.warnings.push_back(os.str());
  }
  return p;
}

void require_tags(const Mesh& mesh, const std::vector<int>& tags) {
  for (int t : tags)
    if (!mesh.has_tag(t)) throw std::invalid_argument("unknown boundary tag " + std::to_string(t));
}

void fill_reports(const PoissonConfig& cfg, UnilateralResult& r) {
  const auto& p = r.problem;
  r.u = r.solve.state.u;
  r.multiplier = r.solve.point_multiplier;
  r.gap = p.B * r.u - p.g;
  r.active = r.solve.state.active;
  r.warnings.insert(r.warnings.end(), r.solve.warnings.begin(), r.solve.warnings.end());
  r.nodes = r.space->boundary_nodes(cfg.contact_tags);
  const Vector wl = p.weights.cwiseProduct(r.multiplier);
  const SparseMatrix bt = p.B.transpose();
  const Vector num = bt * wl, den = bt * p.weights;
  r.nodal_multiplier.resize(r.nodes.size());
  r.nodal_gap.resize(r.nodes.size());
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    const int n = r.nodes[i];
    r.nodal_multiplier[i] = den[n] != 0.0 ? num[n] / den[n] : 0.0;
    r.nodal_gap[i] = r.u[n] - cfg.g(r.space->node_coordinate(n));
  }
}

KktReport kkt_of(const Vector& lam, const Vector& gap) {
  KktReport k;
  k.max_multiplier = -INFINITY;
  k.max_gap = -INFINITY;
  for (int i = 0; i < lam.size(); ++i) {
    k.max_multiplier = std::max(k.max_multiplier, lam[i]);
    k.max_gap = std::max(k.max_gap, gap[i]);
    k.max_product = std::max(k.max_product, std::abs(lam[i] * gap[i]));
  }
  return k;
}

}  // namespace

LinearSystem nitsche_system(const FeSpace& space, const std::vector<int>& tags, double gamma0,
                            const ScalarFn& f, const ScalarFn& g) {
  LinearSystem s;
  s.matrix = assemble_grad_grad(space);
  s.rhs = assemble_load(space, f);
  if (tags.empty()) return s;
  const double h = space.mesh().h_max();
  const SparseMatrix fl = assemble_boundary_flux(space, tags);
  s.matrix = s.matrix - fl - SparseMatrix(fl.transpose()) +
             (gamma0 / h) * assemble_boundary_mass(space, tags);
  s.matrix.makeCompressed();
  s.rhs += (gamma0 / h) * assemble_boundary_load(space, tags, g) - flux_load(space, tags, g);
  return s;
}

DirichletResult solve_dirichlet_nitsche(const PoissonConfig& cfg) {
  if (cfg.bc_kind != BcKind::dirichlet_nitsche)
    throw std::invalid_argument("solve_dirichlet_nitsche needs bc_kind = dirichlet_nitsche");
  const std::vector<int> tags = cfg.dirichlet_tags.empty() ? all_tags(*cfg.mesh) : cfg.dirichlet_tags;
  require_tags(*cfg.mesh, tags);
  Prepared prep = prepare(cfg, cfg.degree, tags);
  const LinearSystem sys = nitsche_system(*prep.space, tags, prep.gamma0, cfg.f, cfg.g);
  if (!(prep.gamma0 > prep.gamma_c)) {
    const Inertia in = inertia(sys.matrix);
    if (in.negative > 0 || in.zero > 0) {
      std::ostringstream os;
      os << "Nitsche matrix is indefinite (" << in.negative << " negative pivots): gamma0 = " << prep.gamma0
         << " is below the inverse constant estimate " << prep.gamma_c;
      throw Error(os.str());
    }
  }
  DirichletResult r;
  r.space = prep.space;
  r.u = solve_linear(sys.matrix, sys.rhs);
  r.gamma0 = prep.gamma0;
  r.inverse_constant = prep.gamma_c;
  r.warnings = prep.warnings;
  return r;
}

UnilateralResult solve_unilateral_nitsche(const PoissonConfig& cfg, double tol, int max_iter) {
  if (cfg.bc_kind != BcKind::unilateral_nitsche)
    throw std::invalid_argument("solve_unilateral_nitsche needs bc_kind = unilateral_nitsche");
  if (cfg.contact_tags.empty()) throw std::invalid_argument("unilateral problem needs contact tags");
  require_tags(*cfg.mesh, cfg.contact_tags);
  require_tags(*cfg.mesh, cfg.dirichlet_tags);
  std::vector<int> nitsche_tags = cfg.dirichlet_tags;
  nitsche_tags.insert(nitsche_tags.end(), cfg.contact_tags.begin(), cfg.contact_tags.end());
  Prepared prep = prepare(cfg, cfg.degree, nitsche_tags);
  const FeSpace& space = *prep.space;
  const LinearSystem sys = nitsche_system(space, cfg.dirichlet_tags, prep.gamma0, cfg.f, cfg.g_dirichlet);

  UnilateralResult r;
  r.space = prep.space;
  r.gamma0 = prep.gamma0;
  r.inverse_constant = prep.gamma_c;
  r.warnings = prep.warnings;

  const auto& rule = gauss3();
  Triplets tb, tt;
  std::vector<double> g, w;
  double phi[6];
  Point grad[6];
  int row = 0;
  for (const auto& f : space.mesh().facets()) {
    if (!tagged(cfg.contact_tags, f.tag)) continue;
    const auto geo = cell_geometry(space.mesh(), f.cell);
    const Point n = space.mesh().facet_normal(f);
    const double len = space.mesh().facet_length(f);
    const auto nodes = space.cell_nodes(f.cell);
    for (std::size_t q = 0; q < rule.points.size(); ++q, ++row) {
      const auto bary = edge_bary(f.local_edge, rule.points[q]);
      shape_values(space.family(), bary, phi);
      shape_gradients(space.family(), geo, bary, grad);
      for (int a = 0; a < space.local_size(); ++a) {
        if (phi[a] != 0.0) tb.emplace_back(row, nodes[a], phi[a]);
        tt.emplace_back(row, nodes[a], grad[a].x * n.x + grad[a].y * n.y);
      }
      const Point x = geo.map(bary);
      r.points.push_back(x);
      g.push_back(cfg.g(x));
      w.push_back(rule.weights[q] * len);
    }
  }
  auto& p = r.problem;
  p.a = sys.matrix;
  p.rhs_f = sys.rhs;
  p.B = from_triplets(row, space.n_dofs(), tb);
  p.T = from_triplets(row, space.n_dofs(), tt);
  p.g = Eigen::Map<Vector>(g.data(), row);
  p.weights = Eigen::Map<Vector>(w.data(), row);
  p.gamma0 = prep.gamma0;
  p.r = 0.5;
  p.h = space.mesh().h_max();
  p.mode = saddle::Mode::inequality;
  p.variant = saddle::Variant::eliminated;
  p.inverse_constant = prep.gamma_c;
  r.solve = saddle::solve_inequality(p, {}, tol, max_iter);
  fill_reports(cfg, r);
  return r;
}

UnilateralResult solve_unilateral_mixed(const PoissonConfig& cfg, double tol, int max_iter) {
  if (cfg.bc_kind != BcKind::unilateral_mixed)
    throw std::invalid_argument("solve_unilateral_mixed needs bc_kind = unilateral_mixed");
  if (cfg.degree != 2) throw std::invalid_argument("the mixed variant needs a P2 primal space");
  if (cfg.contact_tags.empty()) throw std::invalid_argument("unilateral problem needs contact tags");
  require_tags(*cfg.mesh, cfg.contact_tags);
  require_tags(*cfg.mesh, cfg.dirichlet_tags);
  Prepared prep = prepare(cfg, 2, cfg.dirichlet_tags);
  if (!cfg.gamma0 && cfg.dirichlet_tags.empty()) prep.gamma0 = 1.0;
  const FeSpace& space = *prep.space;
  const LinearSystem sys = nitsche_system(space, cfg.dirichlet_tags, prep.gamma0, cfg.f, cfg.g_dirichlet);

  UnilateralResult r;
  r.space = prep.space;
  r.gamma0 = prep.gamma0;
  r.inverse_constant = prep.gamma_c;
  r.warnings = prep.warnings;

  // one constraint point per facet: the facet mean of the trace (Simpson weights for P2)
  const auto& rule = gauss3();
  Triplets tb;
  std::vector<double> g, w;
  int row = 0;
  for (const auto& f : space.mesh().facets()) {
    if (!tagged(cfg.contact_tags, f.tag)) continue;
    const auto fn = space.facet_nodes(f);
    tb.emplace_back(row, fn[0], 1.0 / 6.0);
    tb.emplace_back(row, fn[1], 1.0 / 6.0);
    tb.emplace_back(row, fn[2], 4.0 / 6.0);
    const Point& a = space.mesh().vertices()[f.v[0]];
    const Point& b = space.mesh().vertices()[f.v[1]];
    double mean = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double s = rule.points[q];
      mean += rule.weights[q] * cfg.g({a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)});
    }
    r.points.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
    g.push_back(mean);
    w.push_back(space.mesh().facet_length(f));
    ++row;
  }
  auto& p = r.problem;
  p.a = sys.matrix;
  p.rhs_f = sys.rhs;
  p.B = from_triplets(row, space.n_dofs(), tb);
  p.g = Eigen::Map<Vector>(g.data(), row);
  p.weights = Eigen::Map<Vector>(w.data(), row);
  p.gamma0 = prep.gamma0;
  p.r = 0.5;
  p.h = space.mesh().h_max();
  p.mode = saddle::Mode::inequality;
  p.variant = saddle::Variant::multiplier;
  r.solve = saddle::solve_inequality(p, {}, tol, max_iter);
  fill_reports(cfg, r);
  return r;
}

PoissonConfig driven_membrane(int n, int degree, double obstacle) {
  PoissonConfig c;
  c.mesh = std::make_shared<const Mesh>(generate_rect_mesh({0, 1}, {0, 1}, n, n));
  c.degree = degree;
  c.f = [](const Point&) { return 1.0; };
  c.g = [obstacle](const Point&) { return obstacle; };
  c.bc_kind = BcKind::unilateral_nitsche;
  c.dirichlet_tags = {1, 2, 4};
  c.contact_tags = {3};
  return c;
}

KktReport point_kkt(const UnilateralResult& r) { return kkt_of(r.multiplier, r.gap); }
KktReport nodal_kkt(const UnilateralResult& r) { return kkt_of(r.nodal_multiplier, r.nodal_gap); }

}  // namespace almlab::poisson
