// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "almlab/alm.hpp"
#include "almlab/assembly.hpp"
#include "almlab/convergence.hpp"
#include "almlab/elasticity.hpp"
#include "almlab/plate.hpp"
#include "almlab/poisson.hpp"
#include "almlab/saddle.hpp"
#include "almlab/stokes.hpp"
#include "support/penalty_oracle.hpp"

using namespace almlab;

namespace {

struct Check {
  std::vector<std::string> failures;
  std::ostringstream notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  template <class T>
  void note(const std::string& key, T value) {
    notes << (notes.tellp() > 0 ? " " : "") << key << "=" << value;
  }
};

int run(int id, const std::string& name, double limit_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.failures.push_back(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs >= limit_s) c.failures.push_back("runtime " + std::to_string(secs) + " s over " + std::to_string(limit_s) + " s");
  const bool ok = c.failures.empty();
  std::printf("%s %2d %-26s %.2fs  %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), secs, c.notes.str().c_str());
  for (const auto& f : c.failures) std::printf("       - %s\n", f.c_str());
  std::fflush(stdout);
  return ok ? 0 : 1;
}

using alm::Matrix;
using alm::Vec;

Matrix gaussian(std::mt19937& rng, int r, int c) {
  std::normal_distribution<double> nd;
  return Matrix::NullaryExpr(r, c, [&] { return nd(rng); });
}

Matrix random_spd(std::mt19937& rng, int n) {
  const Matrix g = gaussian(rng, n, n);
  return g * g.transpose() + n * Matrix::Identity(n, n);
}

double uniform(std::mt19937& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
int uniform_int(std::mt19937& rng, int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }

// ---------------------------------------------------------------- 1

void alm_identities(Check& c) {
  std::mt19937 rng(101);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const int n = uniform_int(rng, 1, 6), m = uniform_int(rng, 1, 4);
    alm::QpProblem p;
    p.A = random_spd(rng, n);
    p.b = gaussian(rng, n, 1);
    p.C = gaussian(rng, m, n);
    p.d = gaussian(rng, m, 1);
    p.gamma = std::pow(10.0, uniform(rng, -2, 2));
    const Vec x = 2.0 * gaussian(rng, n, 1), l = 2.0 * gaussian(rng, m, 1);
    const double a = alm::eval_lagrangian_ineq(p, x, l, alm::IneqVariant::rockafellar);
    const double b = alm::eval_lagrangian_ineq(p, x, l, alm::IneqVariant::split);
    // relative to the size of the summands
    const Vec g = p.g(x);
    double scale = std::abs(p.f(x));
    for (int i = 0; i < m; ++i)
      scale += std::abs(l[i] * g[i]) + 0.5 * p.gamma * g[i] * g[i] + l[i] * l[i] / (2 * p.gamma);
    worst = std::max(worst, std::abs(a - b) / std::max(scale, 1e-300));
  }
  c.note("max_rel_gap", worst);
  c.expect(worst <= 1e-12, "rewrite forms differ");

  int broken = 0;
  for (int k = 0; k < 10000; ++k) {
    const double a = uniform(rng, -10, 10) * std::pow(10.0, uniform_int(rng, -3, 3));
    const double b = uniform(rng, -10, 10) * std::pow(10.0, uniform_int(rng, -3, 3));
    const double pa = alm::plus_part(a), pb = alm::plus_part(b);
    if (std::abs(pa - pb) > std::abs(a - b)) ++broken;
    if ((pa - pb) * (a - b) < 0.0) ++broken;
    if (a + alm::plus_part(-a) != pa) ++broken;
  }
  c.note("bracket_violations", broken);
  c.expect(broken == 0, "plus-part identity violated");
}

// ---------------------------------------------------------------- 2

enum class Broken { none, feasibility, sign, complementarity, stationarity };

// A QP and point built so that exactly the chosen KKT condition fails.
std::pair<alm::QpProblem, alm::KktPoint> constructed(std::mt19937& rng, Broken which) {
  const int n = uniform_int(rng, 1, 6), m = uniform_int(rng, 1, 4);
  alm::QpProblem p;
  p.A = random_spd(rng, n);
  p.C = gaussian(rng, m, n);
  p.gamma = std::pow(10.0, uniform(rng, -1, 1));
  const Vec x = gaussian(rng, n, 1);
  Vec l = Vec::Zero(m), slack = Vec::Zero(m);
  for (int i = 0; i < m; ++i) {
    if (rng() % 2)
      l[i] = -uniform(rng, 0.1, 2.0);
    else
      slack[i] = -uniform(rng, 0.1, 2.0);
  }
  const int i = uniform_int(rng, 0, m - 1);
  switch (which) {
    case Broken::feasibility: slack[i] = uniform(rng, 0.1, 2.0); l[i] = 0.0; break;
    case Broken::sign: slack[i] = 0.0; l[i] = uniform(rng, 0.1, 2.0); break;
    case Broken::complementarity: slack[i] = -uniform(rng, 0.1, 2.0); l[i] = -uniform(rng, 0.1, 2.0); break;
    default: break;
  }
  p.d = slack - p.C * x;
  p.b = p.A * x - p.C.transpose() * l;
  if (which == Broken::stationarity) p.b[uniform_int(rng, 0, n - 1)] += uniform(rng, 0.1, 2.0);
  return {p, {x, l}};
}

void kkt_equivalence(Check& c) {
  std::mt19937 rng(202);
  const double tol = 1e-12;
  int mismatches = 0;
  double worst_kkt = 0.0, least_bad = INFINITY;
  for (int k = 0; k < 1000; ++k) {
    const Broken which = k % 2 == 0 ? Broken::none : static_cast<Broken>(1 + (k / 2) % 4);
    const auto [p, pt] = constructed(rng, which);
    const double res = alm::kkt_residual(p, pt);
    const bool kt = alm::satisfies_kkt(p, pt, tol);
    if ((res <= tol) != kt || kt != (which == Broken::none)) ++mismatches;
    if (which == Broken::none)
      worst_kkt = std::max(worst_kkt, res);
    else
      least_bad = std::min(least_bad, res);
  }
  c.note("mismatches", mismatches);
  c.note("max_res_kkt", worst_kkt);
  c.note("min_res_nonkkt", least_bad);
  c.expect(mismatches == 0, "residual and KT1-KT3 disagree");
}

// ---------------------------------------------------------------- 3

void uzawa(Check& c) {
  std::mt19937 rng(303);
  double worst = 0.0;
  int inadmissible = 0, failed = 0;
  for (int k = 0; k < 100; ++k) {
    const int n = uniform_int(rng, 2, 10), m = uniform_int(rng, 1, std::min(5, n - 1));
    alm::QpProblem p;
    p.A = random_spd(rng, n);
    p.b = gaussian(rng, n, 1);
    p.C = gaussian(rng, m, n);
    p.d = gaussian(rng, m, 1);
    p.kind = alm::ConstraintKind::equality;
    p.gamma = std::pow(10.0, uniform(rng, -1, 1));
    // dense KKT solve: A x + C^T mu = b, C x = -d
    Matrix kkt(n + m, n + m);
    kkt << p.A, p.C.transpose(), p.C, Matrix::Zero(m, m);
    Vec rhs(n + m);
    rhs << p.b, -p.d;
    const Vec ref = kkt.fullPivLu().solve(rhs).head(n);
    try {
      const auto r = alm::uzawa_solve(p, p.gamma, Vec::Zero(m), 1e-12, 200000);
      if (!r.rho_admissible) ++inadmissible;
      worst = std::max(worst, (r.point.x - ref).lpNorm<Eigen::Infinity>());
    } catch (const alm::UzawaNonConvergence&) {
      ++failed;
    }
  }
  c.note("max_dx", worst);
  c.note("nonconverged", failed);
  c.expect(failed == 0, "Uzawa did not converge");
  c.expect(inadmissible == 0, "rho = gamma outside the admissible bound");
  c.expect(worst <= 1e-8, "Uzawa solution differs from the direct solve");
}

// ---------------------------------------------------------------- 4

void qp_oracle(Check& c) {
  std::mt19937 rng(404);
  double dx = 0.0, dl = 0.0;
  int with_active = 0;
  for (int k = 0; k < 200; ++k) {
    const int n = uniform_int(rng, 1, 6), m = uniform_int(rng, 1, std::min(4, n));
    alm::QpProblem p;
    p.A = random_spd(rng, n);
    p.b = 3.0 * gaussian(rng, n, 1);
    p.C = gaussian(rng, m, n);
    p.d = -p.C * gaussian(rng, n, 1);
    for (int i = 0; i < m; ++i) p.d[i] -= uniform(rng, 0.0, 1.0);
    p.gamma = uniform(rng, 0.5, 20.0);
    const auto r = alm::solve_ineq_newton(p, {});
    const auto o = alm::oracle_active_set(p);
    dx = std::max(dx, (r.point.x - o.x).lpNorm<Eigen::Infinity>());
    dl = std::max(dl, (r.point.lambda - o.lambda).lpNorm<Eigen::Infinity>());
    if ((o.lambda.array() < 0).any()) ++with_active;
  }
  c.note("max_dx", dx);
  c.note("max_dlambda", dl);
  c.note("with_active", with_active);
  c.expect(dx <= 1e-8 && dl <= 1e-8, "Newton differs from the active-set oracle");
}

// ---------------------------------------------------------------- 5

std::shared_ptr<const Mesh> square(int n) {
  return std::make_shared<const Mesh>(generate_rect_mesh({0, 1}, {0, 1}, n, n));
}

double asymmetry(const SparseMatrix& m) { return max_abs(SparseMatrix(m - SparseMatrix(m.transpose()))) / max_abs(m); }

void nitsche_poisson(Check& c) {
  const double pi = M_PI;
  auto exact = [pi](const Point& p) { return std::sin(pi * p.x) * std::sin(pi * p.y); };
  auto grad = [pi](const Point& p) {
    return Point{pi * std::cos(pi * p.x) * std::sin(pi * p.y), pi * std::sin(pi * p.x) * std::cos(pi * p.y)};
  };
  std::vector<ConvergenceRow> l2, h1;
  bool spd = true;
  double asym = 0.0;
  for (int n : {8, 16, 32, 64}) {
    poisson::PoissonConfig cfg;
    cfg.mesh = square(n);
    cfg.f = [&](const Point& p) { return 2 * pi * pi * exact(p); };
    const auto r = poisson::solve_dirichlet_nitsche(cfg);
    const auto e = error_norms(*r.space, r.u, exact, grad);
    l2.push_back({cfg.mesh->h_max(), e.l2});
    h1.push_back({cfg.mesh->h_max(), e.h1_semi});
    const double gc = inverse_constant(*r.space, cfg.dirichlet_tags);
    const auto sys = poisson::nitsche_system(*r.space, cfg.dirichlet_tags, 2 * gc, cfg.f, cfg.g);
    asym = std::max(asym, asymmetry(sys.matrix));
    Eigen::SimplicialLLT<SparseMatrix> llt(sys.matrix);
    spd = spd && llt.info() == Eigen::Success;
  }
  const double rl2 = convergence_report(l2), rh1 = convergence_report(h1);
  c.note("l2_rate", rl2);
  c.note("h1_rate", rh1);
  c.note("asymmetry", asym);
  c.expect(rl2 >= 1.9, "L2 rate below 1.9");
  c.expect(rh1 >= 0.95, "H1 rate below 0.95");
  c.expect(asym <= 1e-12, "Nitsche matrix not symmetric");
  c.expect(spd, "Nitsche matrix not positive definite at 2 gamma_C");
}

// ---------------------------------------------------------------- 6

double l2_norm(const FeSpace& space, const Vector& v) { return std::sqrt(v.dot(assemble_mass(space) * v)); }

void unilateral_poisson(Check& c) {
  const double tol = 1e-8;
  auto kkt_ok = [&](const poisson::KktReport& k) {
    return k.max_multiplier <= tol && k.max_gap <= tol && k.max_product <= 10 * tol;
  };

  const auto nit = poisson::solve_unilateral_nitsche(poisson::driven_membrane(32, 1));
  poisson::PoissonConfig mc = poisson::driven_membrane(16, 2);
  mc.bc_kind = poisson::BcKind::unilateral_mixed;
  const auto mix = poisson::solve_unilateral_mixed(mc);
  // the multiplier (mixed) variant carries one constraint dof per contact facet;
  // the eliminated variant's u - g only vanishes with h and is reported
  const auto km = poisson::point_kkt(mix), kn = poisson::nodal_kkt(nit);
  c.note("mixed_multiplier", km.max_multiplier);
  c.note("mixed_gap", km.max_gap);
  c.note("mixed_product", km.max_product);
  c.note("nitsche_nodal_gap", kn.max_gap);
  const int active = static_cast<int>(std::count(mix.active.begin(), mix.active.end(), true));
  c.expect(active > 0, "no contact");
  c.expect(kkt_ok(km), "KKT triple above tolerance");

  poisson::PoissonConfig pc = poisson::driven_membrane(32, 1);
  pc.gamma0 = nit.gamma0;
  const Vector ref = oracle::penalty_oracle(pc, 1e6);
  const double rel = l2_norm(*nit.space, nit.u - ref) / l2_norm(*nit.space, ref);
  c.note("penalty_rel_l2", rel);
  c.expect(rel <= 0.02, "differs from the penalty oracle by more than 2%");

  std::vector<ConvergenceRow> diff;
  std::vector<double> gap;
  for (int n : {4, 8, 16, 32}) {
    poisson::PoissonConfig cfg = poisson::driven_membrane(n, 2);
    const auto a = poisson::solve_unilateral_nitsche(cfg);
    cfg.bc_kind = poisson::BcKind::unilateral_mixed;
    cfg.gamma0 = a.gamma0;
    const auto b = poisson::solve_unilateral_mixed(cfg);
    diff.push_back({cfg.mesh->h_max(), l2_norm(*a.space, a.u - b.u) / l2_norm(*a.space, a.u)});
    gap.push_back(a.gap.maxCoeff());
  }
  const double rate = convergence_report(diff);
  c.note("variant_gap_rate", rate);
  c.note("variant_gap_fine", diff.back().error);
  bool shrinking = true;
  for (std::size_t i = 1; i < gap.size(); ++i) shrinking = shrinking && gap[i] < gap[i - 1];
  c.expect(rate > 0.0 && diff.back().error < diff.front().error, "variant difference does not vanish");
  c.expect(shrinking, "penetration does not shrink under refinement");
}

// ---------------------------------------------------------------- 7

double s0(double t) { return t * t * (1 - t) * (1 - t); }
double s1(double t) { return 2 * t - 6 * t * t + 4 * t * t * t; }
double s2(double t) { return 2 - 12 * t + 12 * t * t; }
double s3(double t) { return -12 + 24 * t; }

void stokes_cavitation(Check& c) {
  std::array<ScalarFn, 2> exact{[](const Point& p) { return s0(p.x) * s1(p.y); },
                                [](const Point& p) { return -s1(p.x) * s0(p.y); }};
  std::array<VectorFn, 2> grad{[](const Point& p) { return Point{s1(p.x) * s1(p.y), s0(p.x) * s2(p.y)}; },
                               [](const Point& p) { return Point{-s2(p.x) * s0(p.y), -s1(p.x) * s1(p.y)}; }};
  std::vector<ConvergenceRow> rows;
  for (int n : {8, 16, 32, 64}) {
    stokes::StokesConfig cfg;
    cfg.mesh = square(n);
    for (int t : {1, 2, 3, 4}) cfg.dirichlet[t] = [](const Point&) { return Point{0.0, 0.0}; };
    cfg.f = [](const Point& p) {
      return Point{-(s2(p.x) * s1(p.y) + s0(p.x) * s3(p.y)), s3(p.x) * s0(p.y) + s1(p.x) * s2(p.y)};
    };
    const auto r = stokes::solve_stokes(cfg);
    rows.push_back({cfg.mesh->h_max(), error_norms(*r.spaces.velocity, r.u, exact, grad).l2});
  }
  const double rate = convergence_report(rows);
  c.note("velocity_l2_rate", rate);
  c.expect(rate >= 2.9, "Taylor-Hood velocity rate below 2.9");

  stokes::StokesConfig cfg = stokes::pocket_channel(32, 8, 0.01);
  const auto plain = stokes::solve_stokes(cfg);
  cfg.cavitation = true;
  const auto cav = stokes::solve_cavitation(cfg);
  const double tol = 1e-8;
  const double lift_plain = stokes::lift_resultant(*plain.spaces.pressure, plain.p, 4);
  const double lift_cav = stokes::lift_resultant(*cav.spaces.pressure, cav.p, 4);
  c.note("min_p_over_max_p", cav.p.minCoeff() / cav.p.maxCoeff());
  c.note("complementarity", cav.complementarity);
  c.note("lift_plain", lift_plain);
  c.note("lift_cavitation", lift_cav);
  c.expect(cav.p.minCoeff() >= -tol * cav.p.maxCoeff(), "negative pressure with cavitation");
  c.expect(cav.complementarity <= tol, "complementarity residual above 1e-8");
  c.expect(lift_cav > lift_plain, "cavitation does not increase the lift");
}

// ---------------------------------------------------------------- 8

void contact(Check& c) {
  std::mt19937 rng(808);
  int inexact = 0;
  for (int i = 0; i < 10000; ++i) {
    const double h = uniform(rng, 1e-3, 1.0), g0 = std::pow(10.0, uniform(rng, -2, 4));
    const double a = i % 5 == 0 ? 0.0 : uniform(rng, 0.0, 1.0);
    if (elasticity::contact_gamma(h, g0, a) != 1.0 / (h / g0 + a)) ++inexact;
  }
  c.note("gamma_mismatch", inexact);
  c.expect(inexact == 0, "contact gamma is not (h / gamma0 + alpha)^-1");

  std::vector<double> peak;
  double worst_sign = -INFINITY;
  int empty = 0;
  for (double alpha : {0.0, 1e-3, 1e-2}) {
    const auto r = elasticity::solve_contact(elasticity::disc_on_plane(16, alpha));
    int active = 0;
    for (std::size_t i = 0; i < r.active.size(); ++i) {
      if (!r.active[i]) continue;
      ++active;
      worst_sign = std::max(worst_sign, r.pressure[static_cast<int>(i)]);
    }
    if (active == 0) ++empty;
    peak.push_back(r.peak_pressure());
  }
  c.note("peak", std::to_string(peak[0]) + "/" + std::to_string(peak[1]) + "/" + std::to_string(peak[2]));
  c.note("max_active_sigma_n", worst_sign);
  c.expect(empty == 0, "empty contact zone");
  c.expect(worst_sign <= 1e-10, "tensile contact pressure on the active set");
  c.expect(peak[1] <= peak[0] && peak[2] <= peak[1], "peak pressure increases with alpha");

  const auto rigid = elasticity::solve_contact(elasticity::disc_on_plane(16, 0.0));
  std::vector<ConvergenceRow> rows;
  for (double alpha : {1e-5, 1e-6, 1e-7}) {
    const auto r = elasticity::solve_contact(elasticity::disc_on_plane(16, alpha));
    rows.push_back({alpha, (r.u - rigid.u).lpNorm<Eigen::Infinity>()});
  }
  const double rate = convergence_report(rows);
  c.note("rigid_limit_rate", rate);
  c.expect(std::abs(rate - 1.0) <= 0.1, "alpha -> 0 limit is not linear");
}

// ---------------------------------------------------------------- 9

void plate_checks(Check& c) {
  double asym = 0.0;
  for (double nu : {0.0, 0.3}) {
    plate::PlateConfig cfg = plate::obstacle_benchmark(8);
    cfg.nu = nu;
    asym = std::max(asym, asymmetry(plate::plate_system(cfg, plate::make_spaces(cfg)).matrix));
  }
  c.note("asymmetry", asym);
  c.expect(asym <= 1e-12, "plate system not symmetric");

  std::vector<double> shear;
  for (int n : {4, 8, 16, 32}) shear.push_back(plate::solve_mindlin_alm(plate::obstacle_benchmark(n)).shear_norm);
  bool decreasing = true;
  for (std::size_t i = 1; i < shear.size(); ++i) decreasing = decreasing && shear[i] < shear[i - 1];
  c.note("shear_n4", shear.front());
  c.note("shear_n32", shear.back());
  c.expect(decreasing, "shear constraint norm does not decrease");

  // fixed physical load t^3 f: the scaled deflection must not collapse as t -> 0
  std::vector<double> scaled;
  for (double t : {1.0, 0.1, 0.01, 0.001}) {
    plate::PlateConfig cfg = plate::obstacle_benchmark(8);
    cfg.t = t;
    cfg.f = [t](const Point&) { return 1.0 / (t * t * t); };
    scaled.push_back(t * t * t * plate::solve_mindlin_alm(cfg).center_deflection);
  }
  const double ratio = scaled.back() / scaled.front();
  c.note("thin_over_thick", ratio);
  c.expect(ratio > 0.5, "deflection collapses as the plate thins");

  const auto r = plate::solve_plate_obstacle(plate::obstacle_benchmark(16));
  int active = 0, central = 0;
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    if (!r.active[i]) continue;
    ++active;
    if (std::hypot(r.points[i].x - 0.5, r.points[i].y - 0.5) < 0.25) ++central;
  }
  const auto k = r.kkt();
  const double worst = std::max({k[0], k[1], k[2]});
  c.note("active", active);
  c.note("nodal_kkt", worst);
  c.note("warnings", r.warnings.size());
  c.expect(active > 0 && central == active, "active set empty or not central");
  c.expect(worst <= 1e-7, "nodal KKT residual above 1e-7");
}

// ---------------------------------------------------------------- 10

// -u'' + u on a uniform grid, one constraint point per node, plus a random
// constraint block; built so that every point is active at the solution.
saddle::SaddleProblem switch_instance(std::mt19937& rng, bool active) {
  const int n = 12, q = 5;
  const Matrix g = gaussian(rng, n, n);
  const Matrix a = g * g.transpose() + n * Matrix::Identity(n, n);
  const Matrix b = gaussian(rng, q, n);
  saddle::SaddleProblem p;
  p.a = a.sparseView();
  p.B = b.sparseView();
  p.weights = Vec::NullaryExpr(q, [&] { return uniform(rng, 0.5, 2.0); });
  p.gamma0 = 5.0;
  p.r = 0.5;
  p.h = 0.1;
  const Vec u = gaussian(rng, n, 1);
  if (active) {
    const Vec lam = -Vec::NullaryExpr(q, [&] { return uniform(rng, 0.5, 2.0); });
    p.g = b * u;
    p.rhs_f = a * u - b.transpose() * p.weights.asDiagonal() * lam;
  } else {
    p.rhs_f = gaussian(rng, n, 1);
    const Vec free = a.ldlt().solve(p.rhs_f);
    p.g = b * free + Vec::NullaryExpr(q, [&] { return uniform(rng, 0.5, 2.0); });
  }
  return p;
}

void switch_semantics(Check& c) {
  std::mt19937 rng(1010);
  double jac = 0.0, du = 0.0, inactive_lambda = 0.0, inactive_du = 0.0;
  bool all_active = true, none_active = true;
  for (int k = 0; k < 20; ++k) {
    const saddle::SaddleProblem p = switch_instance(rng, true);
    const int n = p.n_primal(), q = p.n_points();
    const auto in = saddle::solve_inequality(p);
    for (bool b : in.state.active) all_active = all_active && b;
    saddle::SaddleProblem e = p;
    e.mode = saddle::Mode::equality;
    const auto eq = saddle::solve_equality(e);
    // equality matrix [[A + gamma B^T W B, -B^T W], [-W B, 0]]
    const Matrix a(p.a), b(p.B), w = p.weights.asDiagonal();
    Matrix ref = Matrix::Zero(n + q, n + q);
    ref.topLeftCorner(n, n) = a + p.gamma() * b.transpose() * w * b;
    ref.topRightCorner(n, q) = -b.transpose() * w;
    ref.bottomLeftCorner(q, n) = -w * b;
    const Matrix newton(saddle::jacobian(p, in.state.active));
    const Matrix equality(saddle::jacobian(e, std::vector<bool>(q, true)));
    jac = std::max({jac, (newton - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff(),
                    (newton - equality).cwiseAbs().maxCoeff()});
    du = std::max(du, (in.state.u - eq.state.u).lpNorm<Eigen::Infinity>());

    const saddle::SaddleProblem pi = switch_instance(rng, false);
    const auto out = saddle::solve_inequality(pi);
    for (bool b : out.state.active) none_active = none_active && !b;
    inactive_lambda = std::max(inactive_lambda, out.state.lambda.lpNorm<Eigen::Infinity>());
    const Vec free = Matrix(pi.a).ldlt().solve(pi.rhs_f);
    inactive_du = std::max(inactive_du, (out.state.u - free).lpNorm<Eigen::Infinity>() / free.lpNorm<Eigen::Infinity>());
  }
  c.note("newton_vs_equality", jac);
  c.note("du_active", du);
  c.note("lambda_inactive", inactive_lambda);
  c.note("du_inactive", inactive_du);
  c.expect(all_active, "constructed active instance not fully active");
  c.expect(jac <= 1e-14, "Newton matrix differs from the equality matrix");
  c.expect(du <= 1e-10, "fully active solve differs from the equality solve");
  c.expect(none_active && inactive_lambda == 0.0, "inactive instance has a nonzero multiplier");
  c.expect(inactive_du <= 1e-12, "inactive instance differs from the unconstrained solve");
}

}  // namespace

int main() {
  int failed = 0;
  failed += run(1, "alm-identities", 5, alm_identities);
  failed += run(2, "kkt-equivalence", 5, kkt_equivalence);
  failed += run(3, "uzawa", 10, uzawa);
  failed += run(4, "inequality-qp-oracle", 30, qp_oracle);
  failed += run(5, "nitsche-poisson", 60, nitsche_poisson);
  failed += run(6, "unilateral-poisson", 120, unilateral_poisson);
  failed += run(7, "stokes-cavitation", 180, stokes_cavitation);
  failed += run(8, "contact", 180, contact);
  failed += run(9, "plate", 180, plate_checks);
  failed += run(10, "switch-semantics", 10, switch_semantics);
  std::printf("%d of 10 criteria passed\n", 10 - failed);
  return failed;
}
