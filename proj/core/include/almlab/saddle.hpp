#pragma once

#include <optional>
#include <string>
#include <vector>

#include "almlab/errors.hpp"
#include "almlab/linalg.hpp"

namespace almlab::saddle {

enum class Mode { equality, inequality };
enum class Variant { multiplier, stabilised, eliminated };

// Discrete optimality system with the constraint space represented by values
// at q constraint points (quadrature points, facet means or mesh nodes) and a
// diagonal weight per point:
//
//   s(w, eta) = B w - g - kappa * eta,   kappa = 1/gamma - alpha
//   eta       = E lambda                 (multiplier variants)
//   eta       = T w + t_offset           (eliminated variant)
//
// gamma = gamma0 / h^(2r) without compliance, (h^(2r)/gamma0 + alpha)^-1 with.
// Multipliers follow lambda <= 0 with lambda = -gamma [s]_+ at convergence.
struct SaddleProblem {
  SparseMatrix a;   // n x n primal operator
  Vector rhs_f;     // n
  SparseMatrix B;   // q x n
  Vector g;         // q
  Vector weights;   // q
  SparseMatrix E;   // q x m; empty means identity (m = q)
  SparseMatrix T;   // q x n, eliminated variant only
  Vector t_offset;  // q, optional
  SparseMatrix s_form;  // m x m, stabilised variant only
  double gamma0 = 1.0;
  double r = 0.0;
  double h = 1.0;
  double compliance = 0.0;
  Mode mode = Mode::inequality;
  Variant variant = Variant::multiplier;
  // estimate of the inverse-inequality constant and coercivity, for the
  // eliminated variant's stability check gamma0 > C_I / alpha
  std::optional<double> inverse_constant;
  double coercivity = 1.0;

  double gamma() const;
  double kappa() const { return 1.0 / gamma() - compliance; }
  int n_primal() const { return static_cast<int>(a.rows()); }
  int n_points() const { return static_cast<int>(B.rows()); }
  int n_multipliers() const;
  void validate() const;
};

double gamma_of(double gamma0, double h, double r);

struct SaddleState {
  Vector u;
  Vector lambda;              // empty in the eliminated variant
  std::vector<bool> active;   // per constraint point
};

struct IterationRecord {
  int iteration = 0;
  double residual = 0.0;
  int active_count = 0;
};

struct SaddleResult {
  SaddleState state;
  Vector point_multiplier;  // multiplier value at each constraint point
  int iterations = 0;
  std::vector<IterationRecord> log;
  std::vector<std::string> warnings;
};

class SaddleNonConvergence : public NonConvergenceError {
public:
  SaddleNonConvergence(const std::string& what, SaddleResult last);
  const SaddleResult& last() const { return last_; }

private:
  SaddleResult last_;
};

class CyclingError : public Error {
public:
  CyclingError(const std::string& what, std::vector<std::vector<bool>> trace);
  const std::vector<std::vector<bool>>& trace() const { return trace_; }

private:
  std::vector<std::vector<bool>> trace_;
};

// Constraint-point values s and the multiplier eta at the points.
Vector switch_argument(const SaddleProblem& p, const SaddleState& st);
Vector point_multiplier(const SaddleProblem& p, const SaddleState& st);

// Newton matrix and nonlinear residual on a given active mask.
SparseMatrix jacobian(const SaddleProblem& p, const std::vector<bool>& active);
Vector residual(const SaddleProblem& p, const SaddleState& st);

SaddleResult solve_equality(const SaddleProblem& p);
SaddleResult solve_inequality(const SaddleProblem& p, const SaddleState& start = {},
                              double tol = 1e-10, int max_iter = 100);

// Active-set updates one point at a time from the empty set: drop the most
// inconsistent active point if any, else add the most violated inactive one.
// Slower than solve_inequality but does not cycle when a is indefinite.
SaddleResult solve_inequality_incremental(const SaddleProblem& p, double tol = 1e-10, int max_iter = 100);

struct DiscreteNorms {
  double primal = 0.0;  // h^-r sqrt(v^T M v)
  double dual = 0.0;    // h^r sqrt(mu^T M mu)
};
DiscreteNorms discrete_norms(const Vector& v, const Vector& mu, double h, double r,
                             const SparseMatrix& mass);
DiscreteNorms discrete_norms(const Vector& v, const Vector& mu, double h, double r,
                             const Vector& diagonal_mass);

double complementarity_error(const SaddleProblem& p, const SaddleState& a, const SaddleState& b);

// gamma^-1 <(pi - pi_tilde) eta, mu>_M; an empty mass means the identity.
double stabilisation_term(const Vector& eta, const Vector& mu, const SparseMatrix& pi,
                          const SparseMatrix& pi_tilde, double gamma,
                          const SparseMatrix& mass = {});
// The matrix of the same form, usable as SaddleProblem::s_form.
SparseMatrix stabilisation_matrix(const SparseMatrix& pi, const SparseMatrix& pi_tilde, double gamma,
                                  const SparseMatrix& mass = {});

}  // namespace almlab::saddle
