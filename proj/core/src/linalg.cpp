#include "almlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <stdexcept>
#include <string>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "almlab/errors.hpp"

namespace almlab {

SparseMatrix from_triplets(int rows, int cols, const Triplets& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

double max_abs(const SparseMatrix& m) {
  double s = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) s = std::max(s, std::abs(it.value()));
  return s;
}

double norm_inf(const SparseMatrix& m) {
  double s = 0.0;
  for (int k = 0; k < m.outerSize(); ++k) {
    double row = 0.0;
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) row += std::abs(it.value());
    s = std::max(s, row);
  }
  return s;
}

bool is_symmetric(const SparseMatrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  SparseMatrix t = m.transpose();
  SparseMatrix d = m - t;
  return max_abs(d) <= rel_tol * std::max(max_abs(m), 1e-300);
}

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using LU = Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>>;

long pivot_from_message(const std::string& msg) {
  std::smatch m;
  static const std::regex re("([0-9]+)\\s*$");
  if (std::regex_search(msg, m, re)) return std::stol(m[1]);
  return -1;
}

void check_residual(const SparseMatrix& m, const Vector& x, const Vector& rhs) {
  const double res = (m * x - rhs).lpNorm<Eigen::Infinity>();
  const double scale = norm_inf(m) * x.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
  if (!std::isfinite(res) || res > 1e-10 * scale)
    throw SingularMatrixError("linear solve residual " + std::to_string(res) +
                                  " exceeds tolerance (numerically singular matrix)",
                              -1);
}

}  // namespace

struct LinearSolver::Impl {
  SparseMatrix original;
  LU lu;
};

LinearSolver::LinearSolver(const SparseMatrix& m) : impl_(std::make_unique<Impl>()) {
  if (m.rows() != m.cols()) throw std::invalid_argument("solve_linear needs a square matrix");
  impl_->original = m;
  ColMatrix c = m;
  c.makeCompressed();
  impl_->lu.analyzePattern(c);
  impl_->lu.factorize(c);
  if (impl_->lu.info() != Eigen::Success) {
    const std::string msg = impl_->lu.lastErrorMessage();
    throw SingularMatrixError("singular matrix: " + msg, pivot_from_message(msg));
  }
}

LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

Vector LinearSolver::solve(const Vector& rhs) const {
  if (rhs.size() != impl_->original.rows()) throw std::invalid_argument("rhs size mismatch");
  Vector x = impl_->lu.solve(rhs);
  check_residual(impl_->original, x, rhs);
  return x;
}

Vector solve_linear(const SparseMatrix& m, const Vector& rhs) { return LinearSolver(m).solve(rhs); }

Inertia inertia(const SparseMatrix& symmetric, double zero_tol) {
  if (symmetric.rows() != symmetric.cols()) throw std::invalid_argument("inertia needs a square matrix");
  ColMatrix c = symmetric;
  Eigen::SimplicialLDLT<ColMatrix> ldlt(c);
  if (ldlt.info() != Eigen::Success) throw SingularMatrixError("LDL^T factorisation failed", -1);
  const Vector d = ldlt.vectorD();
  const double scale = std::max(d.lpNorm<Eigen::Infinity>(), 1e-300);
  Inertia in;
  for (int i = 0; i < d.size(); ++i) {
    if (std::abs(d[i]) <= zero_tol * scale)
      ++in.zero;
    else if (d[i] > 0)
      ++in.positive;
    else
      ++in.negative;
  }
  return in;
}

DofReduction::DofReduction(int n, const std::vector<int>& fixed, const std::vector<double>& values)
    : n_(n), map_(n, 0), fixed_values_(Vector::Zero(n)) {
  if (!values.empty() && values.size() != fixed.size())
    throw std::invalid_argument("fixed values do not match fixed dofs");
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    if (fixed[i] < 0 || fixed[i] >= n) throw std::out_of_range("fixed dof out of range");
    map_[fixed[i]] = -1;
    if (!values.empty()) fixed_values_[fixed[i]] = values[i];
  }
  Triplets t;
  for (int i = 0; i < n; ++i) {
    if (map_[i] < 0) continue;
    map_[i] = static_cast<int>(free_.size());
    t.emplace_back(i, map_[i], 1.0);
    free_.push_back(i);
  }
  p_ = from_triplets(n, free_size(), t);
}

SparseMatrix DofReduction::restrict(const SparseMatrix& a) const {
  SparseMatrix r = p_.transpose() * a * p_;
  r.makeCompressed();
  return r;
}

SparseMatrix DofReduction::restrict_columns(const SparseMatrix& b) const {
  SparseMatrix r = b * p_;
  r.makeCompressed();
  return r;
}

Vector DofReduction::restrict_rhs(const SparseMatrix& a, const Vector& f) const {
  return p_.transpose() * (f - a * fixed_values_);
}

Vector DofReduction::expand(const Vector& u_free) const { return p_ * u_free + fixed_values_; }

}  // namespace almlab
