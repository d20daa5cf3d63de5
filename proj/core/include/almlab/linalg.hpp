#pragma once

#include <memory>
#include <vector>

#include <Eigen/Sparse>

namespace almlab {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

SparseMatrix from_triplets(int rows, int cols, const Triplets& t);

double max_abs(const SparseMatrix& m);
double norm_inf(const SparseMatrix& m);  // max row sum
bool is_symmetric(const SparseMatrix& m, double rel_tol = 1e-12);

// Sparse LU with a fill-reducing ordering. Throws SingularMatrixError.
Vector solve_linear(const SparseMatrix& m, const Vector& rhs);

// Factor once, solve many times.
class LinearSolver {
public:
  explicit LinearSolver(const SparseMatrix& m);
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;
  Vector solve(const Vector& rhs) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct Inertia {
  int positive = 0;
  int negative = 0;
  int zero = 0;
};

// Sylvester inertia from an LDL^T factorisation of a symmetric matrix.
Inertia inertia(const SparseMatrix& symmetric, double zero_tol = 1e-12);

// Strong elimination of fixed dofs: u = P u_free + u_fixed.
class DofReduction {
public:
  DofReduction(int n, const std::vector<int>& fixed, const std::vector<double>& values = {});

  int full_size() const { return n_; }
  int free_size() const { return static_cast<int>(free_.size()); }
  const std::vector<int>& free_dofs() const { return free_; }
  int free_index(int full) const { return map_[full]; }
  const Vector& fixed_values() const { return fixed_values_; }
  const SparseMatrix& prolongation() const { return p_; }

  SparseMatrix restrict(const SparseMatrix& a) const;        // P^T A P
  SparseMatrix restrict_columns(const SparseMatrix& b) const;  // B P
  Vector restrict_rhs(const SparseMatrix& a, const Vector& f) const;  // P^T (f - A u_fixed)
  Vector expand(const Vector& u_free) const;

private:
  int n_;
  std::vector<int> free_;
  std::vector<int> map_;
  Vector fixed_values_;
  SparseMatrix p_;
};

}  // namespace almlab
