#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace almlab::alm {

using Matrix = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class ConstraintKind { equality, inequality };
enum class IneqVariant { rockafellar, split };

// f(x) = 1/2 x^T A x - b^T x, constraints g(x) = C x + d (one row per g_i).
struct QpProblem {
  Matrix A;
  Vec b;
  Matrix C;
  Vec d;
  ConstraintKind kind = ConstraintKind::inequality;
  double gamma = 1.0;

  int n() const { return static_cast<int>(b.size()); }
  int m() const { return static_cast<int>(d.size()); }
  Vec g(const Vec& x) const { return C * x + d; }
  double f(const Vec& x) const { return 0.5 * x.dot(A * x) - b.dot(x); }
  void validate() const;  // shapes, symmetry, positive definiteness, gamma > 0
};

struct KktPoint {
  Vec x;
  Vec lambda;
};

inline double plus_part(double x) { return x > 0.0 ? x : 0.0; }
inline double minus_part(double x) { return x < 0.0 ? x : 0.0; }

// f - sum lambda_i g_i + gamma/2 sum g_i^2
double eval_lagrangian_eq(const QpProblem& p, const Vec& x, const Vec& lambda);
double eval_lagrangian_ineq(const QpProblem& p, const Vec& x, const Vec& lambda, IneqVariant v);

// max_i |lambda_i + [gamma g_i - lambda_i]_+| + ||grad f + sum [gamma g_i - lambda_i]_+ grad g_i||_inf
double kkt_residual(const QpProblem& p, const KktPoint& pt);

// KT1-KT3 within tol: g <= tol, lambda <= tol, |lambda_i g_i| <= tol, and stationarity.
bool satisfies_kkt(const QpProblem& p, const KktPoint& pt, double tol);

// Uzawa on L = f + lambda^T (Bx - c) + gamma/2 |Bx - c|^2 with B = C, c = -d.
// The returned multiplier follows that sign convention (Ax + B^T lambda = b).
struct UzawaResult {
  KktPoint point;
  int iterations = 0;
  double beta_sq = 0.0;
  bool rho_admissible = true;
  double rho_max = 0.0;  // 2 (gamma + 1 / beta^2)
};

struct UzawaNonConvergence : std::runtime_error {
  UzawaNonConvergence(KktPoint last, int iterations);
  KktPoint last;
  int iterations;
};

double largest_eig_ainv_btb(const Matrix& A, const Matrix& B, double tol = 1e-10, int max_iter = 10000);

UzawaResult uzawa_solve(const QpProblem& p, double rho, const Vec& lambda0, double tol = 1e-10,
                        int max_iter = 10000);

// Direct solve of [[A, B^T], [B, 0]] [x; lambda] = [b; c] (Uzawa sign convention).
KktPoint solve_equality_kkt(const QpProblem& p);

struct NewtonResult {
  KktPoint point;
  int iterations = 0;
  int restarts = 0;
  std::vector<double> residuals;
};

struct NewtonFailure : std::runtime_error {
  NewtonFailure(const std::string& what, std::vector<int> active, KktPoint last);
  std::vector<int> active;
  KktPoint last;
};

// Semismooth Newton on lagineq with [0]_+' = 0. Sign convention lambda <= 0.
NewtonResult solve_ineq_newton(const QpProblem& p, const KktPoint& start, double tol = 1e-10,
                               int max_iter = 200);

// Exhaustive active-set enumeration (m <= 20).
KktPoint oracle_active_set(const QpProblem& p, double tol = 1e-9);

}  // namespace almlab::alm
