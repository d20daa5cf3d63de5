#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "almlab/fe_space.hpp"
#include "almlab/saddle.hpp"

namespace almlab::poisson {

enum class BcKind { dirichlet_nitsche, unilateral_nitsche, unilateral_mixed };

// -Delta u = f. For dirichlet_nitsche, u = g is imposed weakly on
// dirichlet_tags. For the unilateral kinds, u <= g on contact_tags, u = g_dirichlet
// weakly on dirichlet_tags and zero flux on the remaining boundary.
struct PoissonConfig {
  std::shared_ptr<const Mesh> mesh;
  int degree = 1;
  std::optional<double> gamma0;  // default: 2 * inverse_constant
  ScalarFn f = [](const Point&) { return 0.0; };
  ScalarFn g = [](const Point&) { return 0.0; };
  ScalarFn g_dirichlet = [](const Point&) { return 0.0; };
  BcKind bc_kind = BcKind::dirichlet_nitsche;
  std::vector<int> dirichlet_tags{1, 2, 3, 4};
  std::vector<int> contact_tags;
};

struct LinearSystem {
  SparseMatrix matrix;
  Vector rhs;
};

// Nitsche form a(u,v) - (d_n u, v) - (d_n v, u) + gamma0/h (u, v) on `tags`
// plus the matching load (f, v) + (gamma0/h v - d_n v, g).
LinearSystem nitsche_system(const FeSpace& space, const std::vector<int>& tags, double gamma0,
                            const ScalarFn& f, const ScalarFn& g);

struct DirichletResult {
  std::shared_ptr<const FeSpace> space;
  Vector u;
  double gamma0 = 0.0;
  double inverse_constant = 0.0;
  std::vector<std::string> warnings;
};

DirichletResult solve_dirichlet_nitsche(const PoissonConfig& cfg);

struct UnilateralResult {
  std::shared_ptr<const FeSpace> space;
  Vector u;
  saddle::SaddleProblem problem;
  saddle::SaddleResult solve;
  double gamma0 = 0.0;
  double inverse_constant = 0.0;
  // per constraint point (quadrature points for Nitsche, facets for mixed)
  std::vector<Point> points;
  Vector multiplier;
  Vector gap;  // B u - g
  std::vector<bool> active;
  // contact-boundary nodes with lumped-mass nodal values
  std::vector<int> nodes;
  Vector nodal_multiplier;
  Vector nodal_gap;
  std::vector<std::string> warnings;
};

UnilateralResult solve_unilateral_nitsche(const PoissonConfig& cfg, double tol = 1e-10,
                                          int max_iter = 100);
// P2 primal with one constant multiplier per contact facet.
UnilateralResult solve_unilateral_mixed(const PoissonConfig& cfg, double tol = 1e-10,
                                        int max_iter = 100);

// The unilateral test problem: unit square, f = 1, u = 0 weakly on left, right
// and top, u <= obstacle on the bottom.
PoissonConfig driven_membrane(int n, int degree, double obstacle = 0.05);

// Max over constraint points / nodes of the KKT violations
struct KktReport {
  double max_multiplier = 0.0;    // max lambda (should be <= 0)
  double max_gap = 0.0;           // max (u - g)
  double max_product = 0.0;       // max |lambda (u - g)|
};
KktReport point_kkt(const UnilateralResult& r);
KktReport nodal_kkt(const UnilateralResult& r);

}  // namespace almlab::poisson
