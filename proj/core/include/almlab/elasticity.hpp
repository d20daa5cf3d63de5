#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "almlab/fe_space.hpp"
#include "almlab/saddle.hpp"

namespace almlab::elasticity {

struct Lame {
  double lambda = 0.0;
  double mu = 0.0;
};
// plane strain; throws unless E > 0 and 0 <= nu < 0.5
Lame lame(double E, double nu);

// Plane-strain linear elasticity. Boundary handling:
//   clamped_tags   u = 0 strongly
//   symmetry_tags  normal displacement = 0 strongly (axis-aligned lines only)
//   robin_tags     u + K sigma(u) n = 0 weakly, K = alpha n n^T + beta t t^T
//   contact_tags   u.n - g + alpha sigma_n <= 0, sigma_n <= 0, complementarity
// Remaining boundary is traction free.
struct ElasticConfig {
  std::shared_ptr<const Mesh> mesh;
  int degree = 2;
  double E = 200.0;
  double nu = 0.33;
  VectorFn f = [](const Point&) { return Point{0.0, 0.0}; };
  std::vector<int> clamped_tags;
  std::vector<int> symmetry_tags;
  std::vector<int> robin_tags;
  std::vector<int> contact_tags;
  double alpha = 0.0;
  double beta = 0.0;
  ScalarFn gap = [](const Point&) { return 0.0; };
  std::optional<double> gamma0;  // default 100 E

  double gamma0_value() const { return gamma0.value_or(100.0 * E); }
  void validate() const;
};

// int sigma(u) : eps(v) on a two-component space
SparseMatrix assemble_elasticity(const FeSpace& space, double E, double nu);

// C with h ||sigma(v) n||^2 (or h ||sigma_n(v)||^2 when normal_only) <= C a(v, v) on tags
double elastic_inverse_constant(const FeSpace& space, double E, double nu, const std::vector<int>& tags,
                                bool normal_only);

// contact parameters: gamma = (h / gamma0 + alpha)^-1, so alpha - 1/gamma = -h / gamma0
double contact_gamma(double h, double gamma0, double alpha);

struct ElasticResult {
  std::shared_ptr<const FeSpace> space;
  Vector u;
  SparseMatrix matrix;  // full (unreduced) operator with the weak boundary terms
  double gamma0 = 0.0;
  double inverse_constant = 0.0;
  std::vector<std::string> warnings;
};

// a(u,v) - <c S t(u), v> - <u, c S t(v)> + <S u, v> - <c K S t(u), t(v)> on robin_tags,
// c = h / gamma0, S = (c I + K)^-1, t(u) = sigma(u) n.
SparseMatrix robin_matrix(const ElasticConfig& cfg, const FeSpace& space);
ElasticResult solve_robin_nitsche(const ElasticConfig& cfg);

struct ContactResult {
  std::shared_ptr<const FeSpace> space;
  Vector u;
  saddle::SaddleProblem problem;
  saddle::SaddleResult solve;
  double gamma0 = 0.0;
  double alpha = 0.0;
  double inverse_constant = 0.0;
  std::vector<Point> points;  // Gauss points on contact facets
  Vector pressure;            // sigma_n multiplier at the points (<= 0)
  Vector normal_gap;          // u.n - g at the points
  std::vector<bool> active;
  std::vector<std::string> warnings;

  double peak_pressure() const;           // max |sigma_n|
  double complementarity() const;         // max |sigma_n (u.n - g + alpha sigma_n)|
  double contact_length() const;          // total weight of active points
};

ContactResult solve_contact(const ElasticConfig& cfg, double tol = 1e-10, int max_iter = 100);

// Facet-mean sigma_n(u) from the owning cell, one value per facet carrying `tag`
// in mesh facet order.
std::vector<double> contact_pressure(const FeSpace& space, const Vector& u, double E, double nu, int tag);

// Per-cell von Mises stress at the centroid (plane strain).
std::vector<double> von_mises(const FeSpace& space, const Vector& u, double E, double nu);

// Right half disc of radius 1 centred at (0, 1) resting on y = 0, body force
// (0, -load), symmetry on x = 0, contact on the lower arc.
ElasticConfig disc_on_plane(int n, double alpha, double load = 50.0);

}  // namespace almlab::elasticity
