#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "almlab/alm.hpp"
#include "almlab/assembly.hpp"
#include "almlab/convergence.hpp"
#include "almlab/elasticity.hpp"
#include "almlab/errors.hpp"
#include "almlab/plate.hpp"
#include "almlab/poisson.hpp"
#include "almlab/stokes.hpp"
#include "almlab_cli/cli.hpp"

namespace almlab::cli {

namespace {

struct Context {
  const ExperimentConfig& cfg;
  const Parameters& par;
  std::ostream& out;
  std::ostream& err;
};

struct Outcome {
  CsvTable table{{}};
  std::vector<std::string> meta;
  std::vector<std::pair<std::string, std::function<void(const std::string&)>>> vtk;
  int code = exit_ok;
};

std::string path_in(const Context& c, const std::string& file) {
  return (std::filesystem::path(c.cfg.output_dir) / file).string();
}

void warn(const Context& c, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) c.err << "warning: " << w << "\n";
}

int positive(const Context& c, const std::string& key) {
  const int v = c.par.integer(key);
  if (v < 1) throw ConfigError("key '" + key + "' must be at least 1");
  return v;
}

double nonnegative(const Context& c, const std::string& key) {
  const double v = c.par.real(key);
  if (!(v >= 0.0)) throw ConfigError("key '" + key + "' must be nonnegative");
  return v;
}

std::optional<double> optional_real(const Context& c, const std::string& key) {
  if (!c.par.is_set(key)) return std::nullopt;
  const double v = c.par.real(key);
  if (!(v > 0.0)) throw ConfigError("key '" + key + "' must be positive");
  return v;
}

std::string choice(const Context& c, const std::string& key, const std::vector<std::string>& allowed) {
  const std::string& v = c.par.str(key);
  if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
    std::string msg = "key '" + key + "' must be one of";
    for (const auto& a : allowed) msg += " " + a;
    throw ConfigError(msg + ", got '" + v + "'");
  }
  return v;
}

std::vector<int> level_sizes(const Context& c) {
  const int levels = positive(c, "levels"), n0 = positive(c, "n0");
  if (levels > 12) throw ConfigError("key 'levels' must be at most 12");
  std::vector<int> n;
  for (int l = 0; l < levels; ++l) n.push_back(n0 << l);
  return n;
}

std::shared_ptr<const Mesh> unit_square(int n) {
  return std::make_shared<const Mesh>(generate_rect_mesh({0, 1}, {0, 1}, n, n));
}

std::vector<double> vertex_values(const FeSpace& space, const Vector& coeffs, int component = 0) {
  const int nv = space.mesh().num_vertices();
  std::vector<double> v(nv);
  for (int i = 0; i < nv; ++i) v[i] = coeffs[space.dof(i, component)];
  return v;
}

std::vector<double> vertex_vector(const FeSpace& space, const Vector& coeffs) {
  const int nv = space.mesh().num_vertices();
  std::vector<double> v(2 * nv);
  for (int i = 0; i < nv; ++i) {
    v[2 * i] = coeffs[space.dof(i, 0)];
    v[2 * i + 1] = coeffs[space.dof(i, 1)];
  }
  return v;
}

std::vector<double> as_double(const std::vector<bool>& b) { return {b.begin(), b.end()}; }

std::string rate_cell(const std::vector<ConvergenceRow>& rows, std::size_t i) {
  return i == 0 ? "" : format_number(pairwise_rate(rows[i - 1], rows[i]));
}

std::string fitted_cell(const std::vector<ConvergenceRow>& rows) {
  return rows.size() >= 3 ? format_number(convergence_report(rows)) : "";
}

void plan(const Context& c, const std::string& what) {
  c.out << "plan: " << c.cfg.experiment << " -> " << path_in(c, "results.csv") << "\n";
  for (const auto& [k, v] : c.par.values()) c.out << "  " << k << " = " << (v.empty() ? "(automatic)" : v) << "\n";
  c.out << "  seed = " << c.cfg.seed << ", threads = " << c.cfg.threads << "\n";
  c.out << "  " << what << "\n";
}

// random problems, generated sequentially so the sweep is seed-deterministic
alm::Matrix random_matrix(std::mt19937_64& rng, int r, int cols) {
  std::normal_distribution<double> nd;
  alm::Matrix m(r, cols);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

alm::Matrix random_spd(std::mt19937_64& rng, int n) {
  const alm::Matrix g = random_matrix(rng, n, n);
  return g * g.transpose() + n * alm::Matrix::Identity(n, n);
}

alm::QpProblem random_inequality(std::mt19937_64& rng) {
  const int n = std::uniform_int_distribution<int>(1, 6)(rng);
  const int m = std::uniform_int_distribution<int>(1, std::min(4, n))(rng);
  alm::QpProblem p;
  p.A = random_spd(rng, n);
  p.b = 3.0 * random_matrix(rng, n, 1);
  p.C = random_matrix(rng, m, n);
  const alm::Vec x0 = random_matrix(rng, n, 1);
  std::uniform_real_distribution<double> slack(0.0, 1.0);
  p.d = -p.C * x0;
  for (int i = 0; i < m; ++i) p.d[i] -= slack(rng);
  p.kind = alm::ConstraintKind::inequality;
  p.gamma = std::uniform_real_distribution<double>(0.5, 20.0)(rng);
  return p;
}

alm::QpProblem random_equality(std::mt19937_64& rng, double gamma) {
  const int n = std::uniform_int_distribution<int>(2, 10)(rng);
  const int m = std::uniform_int_distribution<int>(1, std::min(5, n - 1))(rng);
  alm::QpProblem p;
  p.A = random_spd(rng, n);
  p.b = random_matrix(rng, n, 1);
  p.C = random_matrix(rng, m, n);
  p.d = random_matrix(rng, m, 1);
  p.kind = alm::ConstraintKind::equality;
  p.gamma = gamma;
  return p;
}

Outcome qp_suite(const Context& c) {
  const int count = positive(c, "n");
  const double tol = c.par.real("tol");
  if (c.cfg.dry_run) {
    plan(c, std::to_string(count) + " random QPs, Newton vs active-set enumeration");
    return {};
  }
  std::mt19937_64 rng(c.cfg.seed);
  std::vector<alm::QpProblem> problems;
  for (int k = 0; k < count; ++k) problems.push_back(random_inequality(rng));
  struct Row {
    int iterations = 0, active = 0;
    double dx = 0.0, dl = 0.0;
  };
  std::vector<Row> rows(count);
  parallel_for(count, c.cfg.threads, [&](int k) {
    const auto& p = problems[k];
    const auto r = alm::solve_ineq_newton(p, {});
    const auto o = alm::oracle_active_set(p);
    rows[k] = {r.iterations, static_cast<int>((o.lambda.array() < 0).count()),
               (r.point.x - o.x).lpNorm<Eigen::Infinity>(), (r.point.lambda - o.lambda).lpNorm<Eigen::Infinity>()};
  });
  Outcome o;
  o.table = CsvTable({"problem", "n", "m", "gamma", "active", "iterations", "x_error", "lambda_error", "pass"});
  int passed = 0;
  for (int k = 0; k < count; ++k) {
    const bool ok = rows[k].dx <= tol && rows[k].dl <= tol;
    passed += ok;
    o.table.add_row(std::vector<double>{double(k), double(problems[k].n()), double(problems[k].m()), problems[k].gamma,
                                        double(rows[k].active), double(rows[k].iterations), rows[k].dx, rows[k].dl,
                                        double(ok)});
  }
  c.out << "qp-suite: " << passed << "/" << count << " oracle comparisons passed\n";
  o.meta.push_back("passed=" + std::to_string(passed) + "/" + std::to_string(count));
  o.code = passed == count ? exit_ok : exit_nonconvergence;
  return o;
}

Outcome uzawa(const Context& c) {
  const int count = positive(c, "n");
  const double gamma = c.par.real("gamma"), tol = c.par.real("tol");
  if (!(gamma > 0.0)) throw ConfigError("key 'gamma' must be positive");
  const double rho = c.par.is_set("rho") ? c.par.real("rho") : gamma;
  if (!(rho > 0.0)) throw ConfigError("key 'rho' must be positive");
  if (c.cfg.dry_run) {
    plan(c, std::to_string(count) + " random equality QPs, Uzawa vs direct KKT solve");
    return {};
  }
  std::mt19937_64 rng(c.cfg.seed);
  std::vector<alm::QpProblem> problems;
  for (int k = 0; k < count; ++k) problems.push_back(random_equality(rng, gamma));
  std::vector<alm::UzawaResult> res(count);
  std::vector<double> dx(count);
  parallel_for(count, c.cfg.threads, [&](int k) {
    res[k] = alm::uzawa_solve(problems[k], rho, alm::Vec::Zero(problems[k].m()), 1e-12, 100000);
    dx[k] = (res[k].point.x - alm::solve_equality_kkt(problems[k]).x).lpNorm<Eigen::Infinity>();
  });
  Outcome o;
  o.table = CsvTable({"problem", "n", "m", "rho", "rho_max", "iterations", "x_error", "pass"});
  int passed = 0;
  for (int k = 0; k < count; ++k) {
    const bool ok = dx[k] <= tol;
    passed += ok;
    o.table.add_row(std::vector<double>{double(k), double(problems[k].n()), double(problems[k].m()), rho,
                                        res[k].rho_max, double(res[k].iterations), dx[k], double(ok)});
  }
  c.out << "uzawa: " << passed << "/" << count << " agree with the direct solve\n";
  o.meta.push_back("passed=" + std::to_string(passed) + "/" + std::to_string(count));
  o.code = passed == count ? exit_ok : exit_nonconvergence;
  return o;
}

double sinsin(const Point& p) { return std::sin(M_PI * p.x) * std::sin(M_PI * p.y); }
Point sinsin_grad(const Point& p) {
  return {M_PI * std::cos(M_PI * p.x) * std::sin(M_PI * p.y), M_PI * std::sin(M_PI * p.x) * std::cos(M_PI * p.y)};
}

Outcome poisson_study(const Context& c, int degree, std::optional<double> gamma0) {
  const auto sizes = level_sizes(c);
  if (degree != 1 && degree != 2) throw ConfigError("key 'degree' must be 1 or 2");
  if (c.cfg.dry_run) {
    plan(c, std::to_string(sizes.size()) + " levels of P" + std::to_string(degree) + " Nitsche Poisson");
    return {};
  }
  const int levels = static_cast<int>(sizes.size());
  std::vector<poisson::DirichletResult> res(levels);
  std::vector<ErrorNorms> err(levels);
  parallel_for(levels, c.cfg.threads, [&](int l) {
    poisson::PoissonConfig pc;
    pc.mesh = unit_square(sizes[l]);
    pc.degree = degree;
    pc.gamma0 = gamma0;
    pc.f = [](const Point& p) { return 2.0 * M_PI * M_PI * sinsin(p); };
    res[l] = poisson::solve_dirichlet_nitsche(pc);
    err[l] = error_norms(*res[l].space, res[l].u, sinsin, sinsin_grad);
  });
  std::vector<ConvergenceRow> l2, h1;
  for (int l = 0; l < levels; ++l) {
    warn(c, res[l].warnings);
    l2.push_back({res[l].space->mesh().h_max(), err[l].l2});
    h1.push_back({res[l].space->mesh().h_max(), err[l].h1_semi});
  }
  Outcome o;
  o.table = CsvTable({"level", "h", "dofs", "gamma0", "l2_error", "h1_error", "l2_rate", "h1_rate", "fitted_l2_rate",
                      "fitted_h1_rate"});
  const std::string fl2 = fitted_cell(l2), fh1 = fitted_cell(h1);
  for (int l = 0; l < levels; ++l)
    o.table.add_row(std::vector<std::string>{std::to_string(l), format_number(l2[l].h),
                                             std::to_string(res[l].space->n_dofs()), format_number(res[l].gamma0),
                                             format_number(l2[l].error), format_number(h1[l].error), rate_cell(l2, l),
                                             rate_cell(h1, l), fl2, fh1});
  if (!fl2.empty()) c.out << "fitted rates: L2 " << fl2 << ", H1 " << fh1 << "\n";
  const auto fine = res.back();
  o.vtk.push_back({"poisson.vtk", [fine](const std::string& path) {
                     const FeSpace& s = *fine.space;
                     std::vector<double> exact, u = vertex_values(s, fine.u);
                     for (const auto& x : s.mesh().vertices()) exact.push_back(sinsin(x));
                     std::vector<double> e(u.size());
                     for (std::size_t i = 0; i < u.size(); ++i) e[i] = u[i] - exact[i];
                     write_vtk(s.mesh(),
                               {{"u", FieldLocation::point, 1, u},
                                {"exact", FieldLocation::point, 1, exact},
                                {"error", FieldLocation::point, 1, e}},
                               path);
                   }});
  return o;
}

Outcome poisson_dirichlet(const Context& c) {
  return poisson_study(c, c.par.integer("degree"), optional_real(c, "gamma0"));
}

Outcome poisson_unilateral(const Context& c) {
  const auto sizes = level_sizes(c);
  const std::string variant = choice(c, "variant", {"nitsche", "mixed"});
  const int degree = variant == "mixed" ? 2 : c.par.integer("degree");
  if (degree != 1 && degree != 2) throw ConfigError("key 'degree' must be 1 or 2");
  const double obstacle = c.par.real("obstacle"), tol = c.par.real("tol");
  const int max_iter = positive(c, "max_iter");
  const auto gamma0 = optional_real(c, "gamma0");
  if (c.cfg.dry_run) {
    plan(c, std::to_string(sizes.size()) + " levels, " + variant + " variant, P" + std::to_string(degree));
    return {};
  }
  const int levels = static_cast<int>(sizes.size());
  std::vector<poisson::UnilateralResult> res(levels);
  parallel_for(levels, c.cfg.threads, [&](int l) {
    poisson::PoissonConfig pc = poisson::driven_membrane(sizes[l], degree, obstacle);
    pc.gamma0 = gamma0;
    if (variant == "mixed") {
      pc.bc_kind = poisson::BcKind::unilateral_mixed;
      res[l] = poisson::solve_unilateral_mixed(pc, tol, max_iter);
    } else {
      res[l] = poisson::solve_unilateral_nitsche(pc, tol, max_iter);
    }
  });
  Outcome o;
  o.table = CsvTable({"level", "h", "dofs", "iterations", "active", "constraint_points", "max_multiplier", "max_gap",
                      "max_product", "nodal_max_multiplier", "nodal_max_gap", "nodal_max_product"});
  for (int l = 0; l < levels; ++l) {
    const auto& r = res[l];
    warn(c, r.warnings);
    const auto pk = poisson::point_kkt(r), nk = poisson::nodal_kkt(r);
    o.table.add_row(std::vector<double>{double(l), r.space->mesh().h_max(), double(r.space->n_dofs()),
                                        double(r.solve.iterations),
                                        double(std::count(r.active.begin(), r.active.end(), true)),
                                        double(r.active.size()), pk.max_multiplier, pk.max_gap, pk.max_product,
                                        nk.max_multiplier, nk.max_gap, nk.max_product});
  }
  const auto fine = res.back();
  o.vtk.push_back({"poisson_unilateral.vtk", [fine](const std::string& path) {
                     write_vtk(fine.space->mesh(), {{"u", FieldLocation::point, 1, vertex_values(*fine.space, fine.u)}},
                               path);
                   }});
  return o;
}

// psi = X(x) X(y), X = x^2 (1 - x)^2, u = curl psi
double s0(double t) { return t * t * (1 - t) * (1 - t); }
double s1(double t) { return 2 * t - 6 * t * t + 4 * t * t * t; }
double s2(double t) { return 2 - 12 * t + 12 * t * t; }
double s3(double t) { return -12 + 24 * t; }

Outcome stokes_study(const Context& c, double mu) {
  const auto sizes = level_sizes(c);
  if (!(mu > 0.0)) throw ConfigError("key 'viscosity' must be positive");
  if (c.cfg.dry_run) {
    plan(c, std::to_string(sizes.size()) + " levels of Taylor-Hood Stokes");
    return {};
  }
  const std::array<ScalarFn, 2> exact{[](const Point& p) { return s0(p.x) * s1(p.y); },
                                      [](const Point& p) { return -s1(p.x) * s0(p.y); }};
  const std::array<VectorFn, 2> grad{
      [](const Point& p) { return Point{s1(p.x) * s1(p.y), s0(p.x) * s2(p.y)}; },
      [](const Point& p) { return Point{-s2(p.x) * s0(p.y), -s1(p.x) * s1(p.y)}; }};
  const int levels = static_cast<int>(sizes.size());
  std::vector<stokes::StokesResult> res(levels);
  std::vector<ErrorNorms> err(levels);
  parallel_for(levels, c.cfg.threads, [&](int l) {
    stokes::StokesConfig sc;
    sc.mesh = unit_square(sizes[l]);
    sc.viscosity = mu;
    for (int t : {1, 2, 3, 4}) sc.dirichlet[t] = [](const Point&) { return Point{0.0, 0.0}; };
    sc.f = [mu](const Point& p) {
      const double lap1 = s2(p.x) * s1(p.y) + s0(p.x) * s3(p.y);
      const double lap2 = -(s3(p.x) * s0(p.y) + s1(p.x) * s2(p.y));
      return Point{-mu * lap1, -mu * lap2};
    };
    res[l] = stokes::solve_stokes(sc);
    err[l] = error_norms(*res[l].spaces.velocity, res[l].u, exact, grad);
  });
  std::vector<ConvergenceRow> l2, h1;
  for (int l = 0; l < levels; ++l) {
    const double h = res[l].spaces.velocity->mesh().h_max();
    l2.push_back({h, err[l].l2});
    h1.push_back({h, err[l].h1_semi});
  }
  Outcome o;
  o.table = CsvTable({"level", "h", "dofs", "velocity_l2_error", "velocity_h1_error", "divergence_residual", "l2_rate",
                      "h1_rate", "fitted_l2_rate", "fitted_h1_rate"});
  const std::string fl2 = fitted_cell(l2), fh1 = fitted_cell(h1);
  for (int l = 0; l < levels; ++l) {
    const int dofs = res[l].spaces.velocity->n_dofs() + res[l].spaces.pressure->n_dofs();
    o.table.add_row(std::vector<std::string>{std::to_string(l), format_number(l2[l].h), std::to_string(dofs),
                                             format_number(l2[l].error), format_number(h1[l].error),
                                             format_number(res[l].divergence_residual), rate_cell(l2, l),
                                             rate_cell(h1, l), fl2, fh1});
  }
  if (!fl2.empty()) c.out << "fitted velocity rates: L2 " << fl2 << ", H1 " << fh1 << "\n";
  const auto fine = res.back();
  o.vtk.push_back({"stokes.vtk", [fine](const std::string& path) {
                     write_vtk(fine.spaces.velocity->mesh(),
                               {{"velocity", FieldLocation::point, 2, vertex_vector(*fine.spaces.velocity, fine.u)},
                                {"pressure", FieldLocation::point, 1, vertex_values(*fine.spaces.pressure, fine.p)}},
                               path);
                   }});
  return o;
}

Outcome stokes_run(const Context& c) { return stokes_study(c, c.par.real("viscosity")); }

Outcome cavitation(const Context& c) {
  const int nx = positive(c, "nx"), ny = positive(c, "ny"), max_iter = positive(c, "max_iter");
  const double gamma0 = c.par.real("gamma0"), tol = c.par.real("tol");
  if (!(gamma0 > 0.0)) throw ConfigError("key 'gamma0' must be positive");
  if (c.cfg.dry_run) {
    plan(c, "pocket channel " + std::to_string(nx) + "x" + std::to_string(ny) + ", Stokes then cavitation");
    return {};
  }
  stokes::StokesConfig sc = stokes::pocket_channel(nx, ny, gamma0);
  const auto plain = stokes::solve_stokes(sc);
  sc.cavitation = true;
  const auto cav = stokes::solve_cavitation(sc, tol, max_iter);
  warn(c, cav.warnings);
  const int lid = 4;
  const double lift0 = stokes::lift_resultant(*plain.spaces.pressure, plain.p, lid);
  const double lift1 = stokes::lift_resultant(*cav.spaces.pressure, cav.p, lid);
  const Mesh& mesh = cav.spaces.velocity->mesh();
  const int dofs = cav.spaces.velocity->n_dofs() + cav.spaces.pressure->n_dofs();
  Outcome o;
  o.table = CsvTable({"case", "h", "dofs", "iterations", "cavitated_vertices", "min_p", "max_p", "complementarity",
                      "projection_residual", "lift"});
  o.table.add_row(std::vector<std::string>{"stokes", format_number(mesh.h_max()), std::to_string(dofs), "0", "0",
                                           format_number(plain.p.minCoeff()), format_number(plain.p.maxCoeff()), "",
                                           "", format_number(lift0)});
  o.table.add_row(std::vector<std::string>{
      "cavitation", format_number(mesh.h_max()), std::to_string(dofs), std::to_string(cav.solve.iterations),
      std::to_string(std::count(cav.cavitated.begin(), cav.cavitated.end(), true)), format_number(cav.p.minCoeff()),
      format_number(cav.p.maxCoeff()), format_number(cav.complementarity), format_number(cav.projection_residual),
      format_number(lift1)});
  c.out << "lift on the lid: " << format_number(lift0) << " without, " << format_number(lift1) << " with cavitation\n";
  o.vtk.push_back({"cavitation.vtk", [plain, cav](const std::string& path) {
                     write_vtk(cav.spaces.velocity->mesh(),
                               {{"velocity", FieldLocation::point, 2, vertex_vector(*cav.spaces.velocity, cav.u)},
                                {"pressure", FieldLocation::point, 1, vertex_values(*cav.spaces.pressure, cav.p)},
                                {"pressure_stokes", FieldLocation::point, 1,
                                 vertex_values(*plain.spaces.pressure, plain.p)},
                                {"cavitated", FieldLocation::cell, 1, as_double(cav.cavitated_cell)}},
                               path);
                   }});
  return o;
}

std::vector<double> real_list(const Context& c, const std::string& key) {
  std::vector<double> v;
  std::stringstream ss(c.par.str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double x = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') throw ConfigError("key '" + key + "' expects numbers, got '" + item + "'");
    v.push_back(x);
  }
  if (v.empty()) throw ConfigError("key '" + key + "' is empty");
  return v;
}

Outcome contact(const Context& c) {
  const int n = positive(c, "n"), max_iter = positive(c, "max_iter");
  const auto alphas = real_list(c, "alpha");
  for (double a : alphas)
    if (!(a >= 0.0)) throw ConfigError("key 'alpha' must be nonnegative");
  const double load = c.par.real("load"), E = c.par.real("E"), nu = c.par.real("nu"), tol = c.par.real("tol");
  const auto gamma0 = optional_real(c, "gamma0");
  elasticity::lame(E, nu);
  if (c.cfg.dry_run) {
    plan(c, "half disc with " + std::to_string(n) + " rings, " + std::to_string(alphas.size()) + " compliance values");
    return {};
  }
  const int count = static_cast<int>(alphas.size());
  std::vector<elasticity::ContactResult> res(count);
  parallel_for(count, c.cfg.threads, [&](int k) {
    elasticity::ElasticConfig ec = elasticity::disc_on_plane(n, alphas[k], load);
    ec.E = E;
    ec.nu = nu;
    ec.gamma0 = gamma0;
    res[k] = elasticity::solve_contact(ec, tol, max_iter);
  });
  Outcome o;
  o.table = CsvTable({"alpha", "h", "dofs", "gamma0", "iterations", "active", "peak_pressure", "contact_length",
                      "complementarity", "min_normal_gap"});
  for (int k = 0; k < count; ++k) {
    const auto& r = res[k];
    warn(c, r.warnings);
    o.table.add_row(std::vector<double>{alphas[k], r.space->mesh().h_max(), double(r.space->n_dofs()), r.gamma0,
                                        double(r.solve.iterations),
                                        double(std::count(r.active.begin(), r.active.end(), true)), r.peak_pressure(),
                                        r.contact_length(), r.complementarity(), r.normal_gap.minCoeff()});
  }
  const auto last = res.back();
  o.vtk.push_back({"contact.vtk", [last, E, nu](const std::string& path) {
                     write_vtk(last.space->mesh(),
                               {{"displacement", FieldLocation::point, 2, vertex_vector(*last.space, last.u)},
                                {"von_mises", FieldLocation::cell, 1, elasticity::von_mises(*last.space, last.u, E, nu)}},
                               path);
                   }});
  return o;
}

Outcome plate_study(const Context& c, const plate::PlateConfig& base) {
  const auto sizes = level_sizes(c);
  base.validate();
  if (c.cfg.dry_run) {
    plan(c, std::to_string(sizes.size()) + " levels of the clamped P2/P2 plate");
    return {};
  }
  const int levels = static_cast<int>(sizes.size());
  std::vector<plate::PlateResult> res(levels);
  parallel_for(levels, c.cfg.threads, [&](int l) {
    plate::PlateConfig pc = base;
    pc.mesh = unit_square(sizes[l]);
    res[l] = plate::solve_mindlin_alm(pc);
  });
  std::vector<ConvergenceRow> rows;
  for (const auto& r : res) rows.push_back({r.spaces.u->mesh().h_max(), r.shear_norm});
  warn(c, res.front().warnings);
  Outcome o;
  o.table = CsvTable({"level", "h", "dofs", "center_deflection", "shear_norm", "shear_rate", "fitted_shear_rate"});
  const std::string fit = fitted_cell(rows);
  for (int l = 0; l < levels; ++l)
    o.table.add_row(std::vector<std::string>{std::to_string(l), format_number(rows[l].h),
                                             std::to_string(res[l].spaces.n_dofs()),
                                             format_number(res[l].center_deflection), format_number(rows[l].error),
                                             rate_cell(rows, l), fit});
  if (!fit.empty()) c.out << "fitted shear-constraint rate: " << fit << "\n";
  const auto fine = res.back();
  o.vtk.push_back({"plate.vtk", [fine](const std::string& path) {
                     write_vtk(fine.spaces.u->mesh(),
                               {{"u", FieldLocation::point, 1, vertex_values(*fine.spaces.u, fine.u)},
                                {"theta", FieldLocation::point, 2, vertex_vector(*fine.spaces.theta, fine.theta)}},
                               path);
                   }});
  return o;
}

Outcome plate_run(const Context& c) {
  plate::PlateConfig pc = plate::obstacle_benchmark(1);
  const double load = c.par.real("load");
  pc.f = [load](const Point&) { return load; };
  pc.E = c.par.real("E");
  pc.nu = c.par.real("nu");
  pc.t = c.par.real("t");
  pc.gamma_shear = c.par.real("gamma_shear");
  return plate_study(c, pc);
}

Outcome plate_obstacle(const Context& c) {
  const int n = positive(c, "n"), max_iter = positive(c, "max_iter");
  const std::string variant = choice(c, "variant", {"multiplier", "eliminated"});
  const std::string side = choice(c, "side", {"above", "below"});
  plate::PlateConfig pc = plate::obstacle_benchmark(n);
  const double load = c.par.real("load"), tol = c.par.real("tol");
  pc.beta = nonnegative(c, "beta");
  pc.gamma_obstacle = c.par.real("gamma_obstacle");
  pc.gamma_shear = c.par.real("gamma_shear");
  if (side == "below") {
    pc.side = plate::ObstacleSide::below;
    pc.g = [](const Point& x) { return -100.0 * ((x.x - 0.5) * (x.x - 0.5) + (x.y - 0.5) * (x.y - 0.5)); };
    pc.f = [load](const Point&) { return -load; };
  } else {
    pc.f = [load](const Point&) { return load; };
  }
  pc.validate();
  if (c.cfg.dry_run) {
    plan(c, "obstacle benchmark " + std::to_string(n) + "x" + std::to_string(n) + ", " + variant + " variant");
    return {};
  }
  const auto r = plate::solve_plate_obstacle(
      pc, variant == "multiplier" ? plate::ObstacleVariant::multiplier : plate::ObstacleVariant::eliminated, tol,
      max_iter);
  warn(c, r.warnings);
  const auto k = r.kkt();
  const int active = static_cast<int>(std::count(r.active.begin(), r.active.end(), true));
  std::vector<bool> cell_active(pc.mesh->num_cells(), false);
  if (variant == "multiplier") {
    std::map<std::pair<double, double>, bool> at;
    for (std::size_t i = 0; i < r.points.size(); ++i) at[{r.points[i].x, r.points[i].y}] = r.active[i];
    for (int cell = 0; cell < pc.mesh->num_cells(); ++cell)
      for (int v : pc.mesh->cells()[cell]) {
        const Point y = pc.mesh->vertices()[v];
        const auto it = at.find({y.x, y.y});
        if (it != at.end() && it->second) cell_active[cell] = true;
      }
  } else {
    const int per_cell = static_cast<int>(r.points.size()) / pc.mesh->num_cells();
    for (std::size_t i = 0; i < r.points.size(); ++i)
      if (r.active[i]) cell_active[i / per_cell] = true;
  }
  Outcome o;
  o.table = CsvTable({"h", "dofs", "iterations", "active_points", "active_cells", "center_deflection", "max_p",
                      "kkt_negative_p", "kkt_negative_gap", "kkt_product", "shear_norm"});
  o.table.add_row(std::vector<double>{pc.mesh->h_max(), double(r.spaces.n_dofs()), double(r.solve.iterations),
                                      double(active), double(std::count(cell_active.begin(), cell_active.end(), true)),
                                      r.center_deflection, r.p.size() ? r.p.maxCoeff() : 0.0, k[0], k[1], k[2],
                                      r.shear_norm});
  c.out << "active points: " << active << ", KKT residuals " << format_number(k[0]) << " " << format_number(k[1])
        << " " << format_number(k[2]) << "\n";
  o.vtk.push_back({"plate_obstacle.vtk", [r, cell_active](const std::string& path) {
                     write_vtk(r.spaces.u->mesh(),
                               {{"u", FieldLocation::point, 1, vertex_values(*r.spaces.u, r.u)},
                                {"theta", FieldLocation::point, 2, vertex_vector(*r.spaces.theta, r.theta)},
                                {"p", FieldLocation::cell, 1, r.cell_p},
                                {"active", FieldLocation::cell, 1, as_double(cell_active)}},
                               path);
                   }});
  return o;
}

Outcome convergence(const Context& c) {
  const std::string problem = choice(c, "problem", {"poisson", "poisson-p2", "stokes", "plate-shear"});
  if (problem == "poisson") return poisson_study(c, 1, std::nullopt);
  if (problem == "poisson-p2") return poisson_study(c, 2, std::nullopt);
  if (problem == "stokes") return stokes_study(c, 1.0);
  return plate_study(c, plate::obstacle_benchmark(1));
}

Outcome dispatch(const Context& c) {
  const std::string& e = c.cfg.experiment;
  if (e == "qp-suite") return qp_suite(c);
  if (e == "uzawa") return uzawa(c);
  if (e == "poisson-dirichlet") return poisson_dirichlet(c);
  if (e == "poisson-unilateral") return poisson_unilateral(c);
  if (e == "stokes") return stokes_run(c);
  if (e == "cavitation") return cavitation(c);
  if (e == "contact") return contact(c);
  if (e == "plate") return plate_run(c);
  if (e == "plate-obstacle") return plate_obstacle(c);
  if (e == "convergence") return convergence(c);
  throw ConfigError("unknown experiment '" + e + "'");
}

bool is_nonconvergence(const std::exception& e) {
  return dynamic_cast<const NonConvergenceError*>(&e) || dynamic_cast<const saddle::CyclingError*>(&e) ||
         dynamic_cast<const alm::UzawaNonConvergence*>(&e) || dynamic_cast<const alm::NewtonFailure*>(&e);
}

}  // namespace

int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentSpec& spec = find_experiment(cfg.experiment);
    const Parameters par(spec, cfg.parameters);
    const Context ctx{cfg, par, out, err};
    Outcome o = dispatch(ctx);
    if (cfg.dry_run) return exit_ok;
    std::filesystem::create_directories(cfg.output_dir);
    std::vector<std::string> meta{"experiment=" + cfg.experiment, "seed=" + std::to_string(cfg.seed)};
    for (const auto& [k, v] : par.values()) meta.push_back(k + "=" + v);
    meta.insert(meta.end(), o.meta.begin(), o.meta.end());
    const std::string csv = path_in(ctx, "results.csv");
    o.table.write(csv, meta);
    out << "wrote " << csv << " (" << o.table.rows() << " rows)\n";
    for (const auto& [file, write] : o.vtk) {
      write(path_in(ctx, file));
      out << "wrote " << path_in(ctx, file) << "\n";
    }
    return o.code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    if (is_nonconvergence(e)) {
      err << "solver did not converge: " << e.what() << "\n";
      return exit_nonconvergence;
    }
    err << "error: " << e.what() << "\n";
    return exit_config;
  }
}

}  // namespace almlab::cli
