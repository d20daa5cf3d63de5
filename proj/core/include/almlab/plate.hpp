#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "almlab/fe_space.hpp"
#include "almlab/saddle.hpp"

namespace almlab::plate {

// above: u <= g + beta p, the obstacle pushes down on a plate loaded upward.
// below: u >= g - beta p, solved as the reflection u -> -u, g -> -g, f -> -f.
enum class ObstacleSide { above, below };

// multiplier: p kept as an unknown at interior vertices (lumped weights).
// eliminated: p = eps [u - g - (1/eps - beta)(f - t^-3 div div sigma_P(theta))]_+
//             at cell quadrature points, eps = (h^4 / gamma1 + beta)^-1.
enum class ObstacleVariant { multiplier, eliminated };

// Clamped Mindlin-Reissner plate with the rotation constraint grad u = theta
// enforced by the stabilised Lagrangian; u and theta share the same family.
struct PlateConfig {
  std::shared_ptr<const Mesh> mesh;
  double E = 1.0;
  double nu = 0.0;
  double t = 1.0;
  int degree = 2;
  double gamma_shear = 0.1;     // gamma = gamma_shear / h^2
  double gamma_obstacle = 10.0;  // eps = (h^4 / gamma_obstacle + beta)^-1
  double beta = 0.0;
  ScalarFn g = [](const Point&) { return 0.0; };
  ScalarFn f = [](const Point&) { return 0.0; };
  ObstacleSide side = ObstacleSide::above;

  void validate() const;
};

struct PlateSpaces {
  std::shared_ptr<const FeSpace> u;
  std::shared_ptr<const FeSpace> theta;
  int n_u() const { return u->n_dofs(); }
  int n_dofs() const { return u->n_dofs() + theta->n_dofs(); }
};
PlateSpaces make_spaces(const PlateConfig& cfg);

// Full system over [u; theta] before the clamped boundary is removed.
struct PlateSystem {
  SparseMatrix matrix;
  Vector rhs;
};
PlateSystem plate_system(const PlateConfig& cfg, const PlateSpaces& spaces);

struct PlateResult {
  PlateSpaces spaces;
  Vector u;
  Vector theta;
  double shear_norm = 0.0;  // ||grad u - theta||_L2
  double center_deflection = 0.0;
  std::vector<std::string> warnings;
};

PlateResult solve_mindlin_alm(const PlateConfig& cfg);

struct ObstacleResult {
  PlateSpaces spaces;
  Vector u;
  Vector theta;
  saddle::SaddleProblem problem;
  saddle::SaddleResult solve;
  std::vector<Point> points;
  Vector p;           // contact force density at the constraint points (>= 0)
  Vector gap;         // g - u + beta p (above) or u - g + beta p (below), >= 0 in contact
  std::vector<bool> active;
  std::vector<double> cell_p;  // cell mean of p
  double shear_norm = 0.0;
  double center_deflection = 0.0;
  std::vector<std::string> warnings;

  // max(-p), max(-gap), max |p gap|
  std::array<double, 3> kkt() const;
};

ObstacleResult solve_plate_obstacle(const PlateConfig& cfg, ObstacleVariant variant = ObstacleVariant::multiplier,
                                    double tol = 1e-10, int max_iter = 100);

// sigma_P(theta) = D (eps(theta) + nu / (1 - nu) div theta I), D = E t^3 / (12 (1 + nu)),
// as (xx, xy, yy) at every point of the degree-4 cell rule, cell by cell.
std::vector<std::vector<std::array<double, 3>>> moment_tensor(const FeSpace& theta_space, const Vector& theta,
                                                              const PlateConfig& cfg);

// The obstacle benchmark: clamped unit square, E = 1, nu = 0, t = 1,
// gamma1 = 10E, gamma2 = E/10, g = 100 r^2 about the centre, f = 100 upward.
PlateConfig obstacle_benchmark(int n);

}  // namespace almlab::plate
