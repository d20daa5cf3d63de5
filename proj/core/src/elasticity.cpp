#include "almlab/elasticity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "almlab/assembly.hpp"
#include "almlab/errors.hpp"
#include "almlab/quadrature.hpp"

namespace almlab::elasticity {

namespace {

bool tagged(const std::vector<int>& tags, int t) {
  return std::find(tags.begin(), tags.end(), t) != tags.end();
}

double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y; }

Point unit(int c) { return c == 0 ? Point{1, 0} : Point{0, 1}; }

double comp(const Point& p, int c) { return c == 0 ? p.x : p.y; }

// traction sigma(psi e_c) n for a scalar shape gradient g
Point traction(const Lame& l, const Point& g, int c, const Point& n) {
  const double gc = comp(g, c), gn = dot(g, n), nc = comp(n, c);
  const Point ec = unit(c);
  return {l.lambda * gc * n.x + l.mu * (ec.x * gn + g.x * nc),
          l.lambda * gc * n.y + l.mu * (ec.y * gn + g.y * nc)};
}

Family family_of(int degree) {
  if (degree == 1) return Family::P1;
  if (degree == 2) return Family::P2;
  throw std::invalid_argument("elasticity degree must be 1 or 2");
}

// fixed dofs for clamped and symmetry boundaries
std::vector<int> fixed_dofs(const ElasticConfig& cfg, const FeSpace& space) {
  std::map<int, bool> fixed;
  for (int node : space.boundary_nodes(cfg.clamped_tags)) {
    fixed[space.dof(node, 0)] = true;
    fixed[space.dof(node, 1)] = true;
  }
  for (const auto& f : space.mesh().facets()) {
    if (!tagged(cfg.symmetry_tags, f.tag)) continue;
    const Point n = space.mesh().facet_normal(f);
    int c;
    if (std::abs(n.x) > 0.99) c = 0;
    else if (std::abs(n.y) > 0.99) c = 1;
    else throw std::invalid_argument("symmetry boundaries must be axis aligned");
    for (int node : space.facet_nodes(f)) fixed[space.dof(node, c)] = true;
  }
  std::vector<int> out;
  for (const auto& kv : fixed) out.push_back(kv.first);
  return out;
}

void require_tags(const Mesh& mesh, const std::vector<int>& tags) {
  for (int t : tags)
    if (!mesh.has_tag(t)) throw std::invalid_argument("unknown boundary tag " + std::to_string(t));
}

}  // namespace

Lame lame(double E, double nu) {
  if (!(E > 0.0)) throw std::invalid_argument("Young's modulus must be positive");
  if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("Poisson ratio must lie in [0, 0.5)");
  return {nu * E / ((1 + nu) * (1 - 2 * nu)), E / (2 * (1 + nu))};
}

void ElasticConfig::validate() const {
  if (!mesh) throw std::invalid_argument("elastic config has no mesh");
  family_of(degree);
  lame(E, nu);
  if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("flexibilities must be nonnegative");
  if (!(gamma0_value() > 0.0)) throw std::invalid_argument("gamma0 must be positive");
  for (const auto* tags : {&clamped_tags, &symmetry_tags, &robin_tags, &contact_tags}) require_tags(*mesh, *tags);
}

SparseMatrix assemble_elasticity(const FeSpace& space, double E, double nu) {
  if (space.components() != 2) throw std::invalid_argument("elasticity needs a two-component space");
  const Lame l = lame(E, nu);
  const auto& rule = triangle_rule(std::max(1, 2 * (space.degree() - 1)));
  const int nl = space.local_size();
  Triplets t;
  Point grad[6];
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const auto geo = cell_geometry(space.mesh(), c);
    const auto nodes = space.cell_nodes(c);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      shape_gradients(space.family(), geo, rule.points[q], grad);
      const double w = rule.weights[q] * geo.area;
      for (int a = 0; a < nl; ++a)
        for (int ci = 0; ci < 2; ++ci)
          for (int b = 0; b < nl; ++b)
            for (int cj = 0; cj < 2; ++cj) {
              double v = l.lambda * comp(grad[b], cj) * comp(grad[a], ci) +
                         l.mu * comp(grad[b], ci) * comp(grad[a], cj);
              if (ci == cj) v += l.mu * dot(grad[a], grad[b]);
              t.emplace_back(space.dof(nodes[a], ci), space.dof(nodes[b], cj), w * v);
            }
    }
  }
  return from_triplets(space.n_dofs(), space.n_dofs(), t);
}

double elastic_inverse_constant(const FeSpace& space, double E, double nu, const std::vector<int>& tags,
                                bool normal_only) {
  require_tags(space.mesh(), tags);
  const Lame l = lame(E, nu);
  const auto& rule = gauss3();
  const int nl = space.local_size();
  const double h = space.mesh().h_max();
  Triplets t;
  Point grad[6];
  std::vector<Point> tr(2 * nl);
  for (const auto& f : space.mesh().facets()) {
    if (!tagged(tags, f.tag)) continue;
    const auto geo = cell_geometry(space.mesh(), f.cell);
    const Point n = space.mesh().facet_normal(f);
    const double len = space.mesh().facet_length(f);
    const auto nodes = space.cell_nodes(f.cell);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      shape_gradients(space.family(), geo, edge_bary(f.local_edge, rule.points[q]), grad);
      const double w = h * rule.weights[q] * len;
      for (int a = 0; a < nl; ++a)
        for (int c = 0; c < 2; ++c) tr[2 * a + c] = traction(l, grad[a], c, n);
      for (int i = 0; i < 2 * nl; ++i)
        for (int j = 0; j < 2 * nl; ++j) {
          const double v = normal_only ? dot(tr[i], n) * dot(tr[j], n) : dot(tr[i], tr[j]);
          t.emplace_back(space.dof(nodes[i / 2], i % 2), space.dof(nodes[j / 2], j % 2), w * v);
        }
    }
  }
  const SparseMatrix gram = from_triplets(space.n_dofs(), space.n_dofs(), t);
  return generalized_max_eigenvalue(gram, assemble_elasticity(space, E, nu), assemble_mass(space));
}

double contact_gamma(double h, double gamma0, double alpha) {
  if (!(h > 0.0) || !(gamma0 > 0.0) || alpha < 0.0)
    throw std::invalid_argument("contact_gamma needs h, gamma0 > 0 and alpha >= 0");
  return 1.0 / (h / gamma0 + alpha);
}

SparseMatrix robin_matrix(const ElasticConfig& cfg, const FeSpace& space) {
  SparseMatrix k = assemble_elasticity(space, cfg.E, cfg.nu);
  if (cfg.robin_tags.empty()) return k;
  const Lame l = lame(cfg.E, cfg.nu);
  const double c = space.mesh().h_max() / cfg.gamma0_value();
  const double sn = 1.0 / (c + cfg.alpha), st = 1.0 / (c + cfg.beta);
  const double ksn = cfg.alpha * sn, kst = cfg.beta * st;
  const auto& rule = gauss3();
  const int nl = space.local_size();
  Triplets t;
  double phi[6];
  Point grad[6];
  std::vector<Point> val(2 * nl), tr(2 * nl);
  for (const auto& f : space.mesh().facets()) {
    if (!tagged(cfg.robin_tags, f.tag)) continue;
    const auto geo = cell_geometry(space.mesh(), f.cell);
    const Point n = space.mesh().facet_normal(f);
    const Point tau{-n.y, n.x};
    const double len = space.mesh().facet_length(f);
    const auto nodes = space.cell_nodes(f.cell);
    // x^T M y for M = mn n n^T + mt tau tau^T
    auto form = [&](double mn, double mt, const Point& x, const Point& y) {
      return mn * dot(n, x) * dot(n, y) + mt * dot(tau, x) * dot(tau, y);
    };
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto bary = edge_bary(f.local_edge, rule.points[q]);
      shape_values(space.family(), bary, phi);
      shape_gradients(space.family(), geo, bary, grad);
      const double w = rule.weights[q] * len;
      for (int a = 0; a < nl; ++a)
        for (int cc = 0; cc < 2; ++cc) {
          const Point e = unit(cc);
          val[2 * a + cc] = {phi[a] * e.x, phi[a] * e.y};
          tr[2 * a + cc] = traction(l, grad[a], cc, n);
        }
      for (int i = 0; i < 2 * nl; ++i)
        for (int j = 0; j < 2 * nl; ++j) {
          const double v = -c * form(sn, st, tr[j], val[i]) - c * form(sn, st, val[j], tr[i]) +
                           form(sn, st, val[j], val[i]) - c * form(ksn, kst, tr[j], tr[i]);
          t.emplace_back(space.dof(nodes[i / 2], i % 2), space.dof(nodes[j / 2], j % 2), w * v);
        }
    }
  }
  k += from_triplets(space.n_dofs(), space.n_dofs(), t);
  k.makeCompressed();
  return k;
}

ElasticResult solve_robin_nitsche(const ElasticConfig& cfg) {
  cfg.validate();
  ElasticResult r;
  r.space = std::make_shared<const FeSpace>(cfg.mesh, family_of(cfg.degree), 2);
  r.gamma0 = cfg.gamma0_value();
  if (!cfg.robin_tags.empty())
    r.inverse_constant = elastic_inverse_constant(*r.space, cfg.E, cfg.nu, cfg.robin_tags, false);
  r.matrix = robin_matrix(cfg, *r.space);
  const DofReduction red(r.space->n_dofs(), fixed_dofs(cfg, *r.space));
  const SparseMatrix a = red.restrict(r.matrix);
  if (!cfg.robin_tags.empty() && !(r.gamma0 > r.inverse_constant)) {
    std::ostringstream os;
    os << "gamma0 = " << r.gamma0 << " does not exceed the traction inverse constant " << r.inverse_constant;
    r.warnings.push_back(os.str());
    const Inertia in = inertia(a);
    if (in.negative > 0 || in.zero > 0) throw Error("elastic Nitsche matrix is indefinite: " + os.str());
  }
  r.u = red.expand(solve_linear(a, red.restrict_rhs(r.matrix, assemble_load(*r.space, cfg.f))));
  return r;
}

double ContactResult::peak_pressure() const {
  return pressure.size() ? pressure.cwiseAbs().maxCoeff() : 0.0;
}

double ContactResult::complementarity() const {
  double m = 0.0;
  for (int i = 0; i < pressure.size(); ++i)
    m = std::max(m, std::abs(pressure[i] * (normal_gap[i] + alpha * pressure[i])));
  return m;
}

double ContactResult::contact_length() const {
  double s = 0.0;
  for (std::size_t i = 0; i < active.size(); ++i)
    if (active[i]) s += problem.weights[static_cast<int>(i)];
  return s;
}

ContactResult solve_contact(const ElasticConfig& cfg, double tol, int max_iter) {
  cfg.validate();
  if (cfg.contact_tags.empty()) throw std::invalid_argument("contact problem needs contact tags");
  ContactResult r;
  r.space = std::make_shared<const FeSpace>(cfg.mesh, family_of(cfg.degree), 2);
  const FeSpace& space = *r.space;
  const Lame l = lame(cfg.E, cfg.nu);
  r.gamma0 = cfg.gamma0_value();
  r.alpha = cfg.alpha;
  r.inverse_constant = elastic_inverse_constant(space, cfg.E, cfg.nu, cfg.contact_tags, true);

  const auto& rule = gauss3();
  const int nl = space.local_size();
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
      for (int a = 0; a < nl; ++a)
        for (int c = 0; c < 2; ++c) {
          const int dof = space.dof(nodes[a], c);
          if (phi[a] != 0.0 && comp(n, c) != 0.0) tb.emplace_back(row, dof, phi[a] * comp(n, c));
          tt.emplace_back(row, dof, dot(traction(l, grad[a], c, n), n));
        }
      const Point x = geo.map(bary);
      r.points.push_back(x);
      g.push_back(cfg.gap(x));
      w.push_back(rule.weights[q] * len);
    }
  }
  const SparseMatrix a_full = robin_matrix(cfg, space);
  const SparseMatrix b_full = from_triplets(row, space.n_dofs(), tb);
  const SparseMatrix t_full = from_triplets(row, space.n_dofs(), tt);
  const DofReduction red(space.n_dofs(), fixed_dofs(cfg, space));

  auto& p = r.problem;
  p.a = red.restrict(a_full);
  p.rhs_f = red.restrict_rhs(a_full, assemble_load(space, cfg.f));
  p.B = red.restrict_columns(b_full);
  p.T = red.restrict_columns(t_full);
  p.g = Eigen::Map<Vector>(g.data(), row) - b_full * red.fixed_values();
  p.t_offset = t_full * red.fixed_values();
  p.weights = Eigen::Map<Vector>(w.data(), row);
  p.gamma0 = r.gamma0;
  p.r = 0.5;
  p.h = space.mesh().h_max();
  p.compliance = cfg.alpha;
  p.mode = saddle::Mode::inequality;
  p.variant = saddle::Variant::eliminated;
  p.inverse_constant = r.inverse_constant;

  // without clamping the unconstrained operator is singular; start in contact
  saddle::SaddleState start;
  if (cfg.clamped_tags.empty() && cfg.robin_tags.empty()) start.active.assign(row, true);
  r.solve = saddle::solve_inequality(p, start, tol, max_iter);
  r.warnings = r.solve.warnings;

  r.u = red.expand(r.solve.state.u);
  r.pressure = r.solve.point_multiplier;
  r.normal_gap = b_full * r.u - Eigen::Map<Vector>(g.data(), row);
  r.active = r.solve.state.active;
  return r;
}

std::vector<double> contact_pressure(const FeSpace& space, const Vector& u, double E, double nu, int tag) {
  if (!space.mesh().has_tag(tag)) throw std::invalid_argument("unknown boundary tag " + std::to_string(tag));
  if (space.components() != 2 || u.size() != space.n_dofs())
    throw std::invalid_argument("contact_pressure needs a displacement on a two-component space");
  const Lame l = lame(E, nu);
  const auto& rule = gauss3();
  std::vector<double> out;
  Point grad[6];
  for (const auto& f : space.mesh().facets()) {
    if (f.tag != tag) continue;
    const auto geo = cell_geometry(space.mesh(), f.cell);
    const Point n = space.mesh().facet_normal(f);
    const auto nodes = space.cell_nodes(f.cell);
    double mean = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      shape_gradients(space.family(), geo, edge_bary(f.local_edge, rule.points[q]), grad);
      double sn = 0.0;
      for (int a = 0; a < space.local_size(); ++a)
        for (int c = 0; c < 2; ++c) sn += u[space.dof(nodes[a], c)] * dot(traction(l, grad[a], c, n), n);
      mean += rule.weights[q] * sn;
    }
    out.push_back(mean);
  }
  return out;
}

std::vector<double> von_mises(const FeSpace& space, const Vector& u, double E, double nu) {
  const Lame l = lame(E, nu);
  const std::array<double, 3> centroid{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::vector<double> out(space.mesh().num_cells());
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const Point gx = space.evaluate_gradient(u, c, centroid, 0);
    const Point gy = space.evaluate_gradient(u, c, centroid, 1);
    const double tr = gx.x + gy.y;
    const double sxx = l.lambda * tr + 2 * l.mu * gx.x;
    const double syy = l.lambda * tr + 2 * l.mu * gy.y;
    const double szz = l.lambda * tr;
    const double sxy = l.mu * (gx.y + gy.x);
    out[c] = std::sqrt(0.5 * ((sxx - syy) * (sxx - syy) + (syy - szz) * (syy - szz) + (szz - sxx) * (szz - sxx)) +
                       3 * sxy * sxy);
  }
  return out;
}

ElasticConfig disc_on_plane(int n, double alpha, double load) {
  const HalfDiscTags tags;
  ElasticConfig c;
  c.mesh = std::make_shared<const Mesh>(generate_half_disc(n, 1.0, {0.0, 1.0}, tags));
  c.f = [load](const Point&) { return Point{0.0, -load}; };
  c.symmetry_tags = {tags.symmetry};
  c.contact_tags = {tags.contact};
  c.alpha = alpha;
  c.gap = [](const Point& x) { return x.y; };
  return c;
}

}  // namespace almlab::elasticity
