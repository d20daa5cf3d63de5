#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "almlab/fe_space.hpp"
#include "almlab/saddle.hpp"

namespace almlab::stokes {

// Taylor-Hood (P2 velocity, P1 pressure). Boundary tags listed in `dirichlet`
// get strong velocity data; every other tag is zero traction.
struct StokesConfig {
  std::shared_ptr<const Mesh> mesh;
  double viscosity = 1.0;
  double gamma0 = 0.01;
  VectorFn f = [](const Point&) { return Point{0.0, 0.0}; };
  std::map<int, VectorFn> dirichlet;
  bool cavitation = false;
};

struct StokesSpaces {
  std::shared_ptr<const FeSpace> velocity;
  std::shared_ptr<const FeSpace> pressure;
};
StokesSpaces make_spaces(const std::shared_ptr<const Mesh>& mesh);

// Full (unreduced) Taylor-Hood matrix [[mu K, -D^T], [-D, 0]] and load.
struct StokesSystem {
  SparseMatrix matrix;
  Vector rhs;
  int n_velocity = 0;
  int n_pressure = 0;
};
StokesSystem stokes_system(const StokesConfig& cfg, const StokesSpaces& spaces);

struct StokesResult {
  StokesSpaces spaces;
  Vector u;  // velocity dofs, component-blocked
  Vector p;  // P1 nodal pressure
  double divergence_residual = 0.0;  // ||D u|| / (||D|| ||u||)
};

StokesResult solve_stokes(const StokesConfig& cfg);

struct CavitationResult {
  StokesSpaces spaces;
  Vector u;
  Vector p;
  std::vector<bool> cavitated;       // per vertex (switch inactive, p = 0)
  std::vector<bool> cavitated_cell;  // all three vertices cavitated
  saddle::SaddleProblem problem;
  saddle::SaddleResult solve;
  Vector nodal_divergence;           // M_L^-1 D u
  double complementarity = 0.0;      // sum_i m_i p_i [div_i]_-
  double projection_residual = 0.0; // ||p - gamma0 [p / gamma0 - div]_+||_{M_L}
  double min_cavitated_cell_divergence = 0.0;
  std::vector<std::string> warnings;
};

CavitationResult solve_cavitation(const StokesConfig& cfg, double tol = 1e-10, int max_iter = 100);

// int_tag p ds for a P1 pressure.
double lift_resultant(const FeSpace& pressure, const Vector& p, int tag);

// Channel with a floor pocket, lid moving at (1, 0), fixed floor, zero
// traction at inlet and outlet.
StokesConfig pocket_channel(int nx, int ny, double gamma0 = 0.01);

}  // namespace almlab::stokes
