#include "almlab/alm.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace almlab::alm {

void QpProblem::validate() const {
  const int nn = n();
  if (A.rows() != nn || A.cols() != nn) throw std::invalid_argument("A must be n x n");
  if (C.rows() != m() || (m() > 0 && C.cols() != nn))
    throw std::invalid_argument("constraint matrix must be m x n");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("A must be symmetric");
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("A must be positive definite");
}

namespace {

void require(const QpProblem& p, ConstraintKind k) {
  if (p.kind != k)
    throw std::invalid_argument(k == ConstraintKind::equality ? "expected an equality problem"
                                                              : "expected an inequality problem");
}

}  // namespace

double eval_lagrangian_eq(const QpProblem& p, const Vec& x, const Vec& lambda) {
  require(p, ConstraintKind::equality);
  const Vec g = p.g(x);
  return p.f(x) - lambda.dot(g) + 0.5 * p.gamma * g.squaredNorm();
}

double eval_lagrangian_ineq(const QpProblem& p, const Vec& x, const Vec& lambda, IneqVariant v) {
  require(p, ConstraintKind::inequality);
  const Vec g = p.g(x);
  const double gam = p.gamma;
  double s = p.f(x);
  for (int i = 0; i < p.m(); ++i) {
    const double z = gam * g[i] - lambda[i];
    if (v == IneqVariant::rockafellar) {
      const double zp = plus_part(z);
      s += (zp * zp - lambda[i] * lambda[i]) / (2.0 * gam);
    } else {
      const double zm = minus_part(z);
      s += -lambda[i] * g[i] + 0.5 * gam * g[i] * g[i] - zm * zm / (2.0 * gam);
    }
  }
  return s;
}

double kkt_residual(const QpProblem& p, const KktPoint& pt) {
  const Vec g = p.g(pt.x);
  Vec stat = p.A * pt.x - p.b;
  double comp = 0.0;
  for (int i = 0; i < p.m(); ++i) {
    const double z = plus_part(p.gamma * g[i] - pt.lambda[i]);
    comp = std::max(comp, std::abs(pt.lambda[i] + z));
    stat += z * p.C.row(i).transpose();
  }
  return comp + (stat.size() ? stat.lpNorm<Eigen::Infinity>() : 0.0);
}

bool satisfies_kkt(const QpProblem& p, const KktPoint& pt, double tol) {
  const Vec g = p.g(pt.x);
  for (int i = 0; i < p.m(); ++i)
    if (g[i] > tol || pt.lambda[i] > tol || std::abs(pt.lambda[i] * g[i]) > tol) return false;
  const Vec stat = p.A * pt.x - p.b - p.C.transpose() * pt.lambda;
  return stat.size() == 0 || stat.lpNorm<Eigen::Infinity>() <= tol;
}

UzawaNonConvergence::UzawaNonConvergence(KktPoint l, int it)
    : std::runtime_error("Uzawa iteration did not converge in " + std::to_string(it) + " iterations"),
      last(std::move(l)),
      iterations(it) {}

double largest_eig_ainv_btb(const Matrix& A, const Matrix& B, double tol, int max_iter) {
  Eigen::LLT<Matrix> llt(A);
  const Matrix btb = B.transpose() * B;
  Vec v = Vec::Ones(A.rows()) / std::sqrt(static_cast<double>(A.rows()));
  // break symmetry of structured inputs
  for (int i = 0; i < v.size(); ++i) v[i] += 1e-3 * (i + 1);
  v.normalize();
  double mu = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vec w = llt.solve(btb * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / nw;
    if (it > 0 && std::abs(next - mu) <= tol * std::abs(next)) return next;
    mu = next;
  }
  return mu;
}

KktPoint solve_equality_kkt(const QpProblem& p) {
  const int n = p.n(), m = p.m();
  Matrix k = Matrix::Zero(n + m, n + m);
  k.topLeftCorner(n, n) = p.A;
  k.topRightCorner(n, m) = p.C.transpose();
  k.bottomLeftCorner(m, n) = p.C;
  Vec rhs(n + m);
  rhs << p.b, -p.d;
  const Vec sol = k.fullPivLu().solve(rhs);
  return {sol.head(n), sol.tail(m)};
}

UzawaResult uzawa_solve(const QpProblem& p, double rho, const Vec& lambda0, double tol, int max_iter) {
  require(p, ConstraintKind::equality);
  p.validate();
  const Matrix& B = p.C;
  const Vec c = -p.d;
  UzawaResult r;
  r.beta_sq = largest_eig_ainv_btb(p.A, B);
  r.rho_max = 2.0 * (p.gamma + (r.beta_sq > 0.0 ? 1.0 / r.beta_sq : INFINITY));
  r.rho_admissible = rho > 0.0 && rho < r.rho_max;

  const Matrix k = p.A + p.gamma * B.transpose() * B;
  Eigen::LLT<Matrix> llt(k);
  const Vec base = p.b + p.gamma * B.transpose() * c;
  Vec lambda = lambda0;
  Vec x;
  for (int it = 1; it <= max_iter; ++it) {
    x = llt.solve(base - B.transpose() * lambda);
    const Vec res = B * x - c;
    if (res.lpNorm<Eigen::Infinity>() <= tol) {
      r.point = {x, lambda};
      r.iterations = it;
      return r;
    }
    lambda += rho * res;
  }
  throw UzawaNonConvergence({x, lambda}, max_iter);
}

NewtonFailure::NewtonFailure(const std::string& what, std::vector<int> a, KktPoint l)
    : std::runtime_error(what), active(std::move(a)), last(std::move(l)) {}

namespace {

std::vector<int> active_set(const QpProblem& p, const KktPoint& pt) {
  const Vec g = p.g(pt.x);
  std::vector<int> a;
  for (int i = 0; i < p.m(); ++i)
    if (p.gamma * g[i] - pt.lambda[i] > 0.0) a.push_back(i);
  return a;
}

// Solve the piece of lagineq selected by the active set.
KktPoint newton_piece(const QpProblem& p, const std::vector<int>& act) {
  const int n = p.n(), k = static_cast<int>(act.size());
  Matrix ca(k, n);
  Vec da(k);
  for (int i = 0; i < k; ++i) {
    ca.row(i) = p.C.row(act[i]);
    da[i] = p.d[act[i]];
  }
  Matrix j = Matrix::Zero(n + k, n + k);
  j.topLeftCorner(n, n) = p.A + p.gamma * ca.transpose() * ca;
  j.topRightCorner(n, k) = -ca.transpose();
  j.bottomLeftCorner(k, n) = ca;
  Vec rhs(n + k);
  rhs << p.b - p.gamma * ca.transpose() * da, -da;
  Eigen::FullPivLU<Matrix> lu(j);
  if (!lu.isInvertible()) {
    std::string s = "singular Newton matrix for active set {";
    for (int i : act) s += " " + std::to_string(i);
    throw NewtonFailure(s + " }", act, {});
  }
  const Vec sol = lu.solve(rhs);
  KktPoint pt{sol.head(n), Vec::Zero(p.m())};
  for (int i = 0; i < k; ++i) pt.lambda[act[i]] = sol[n + i];
  return pt;
}

}  // namespace

NewtonResult solve_ineq_newton(const QpProblem& p, const KktPoint& start, double tol, int max_iter) {
  require(p, ConstraintKind::inequality);
  p.validate();
  NewtonResult r;
  KktPoint pt = start;
  if (pt.x.size() != p.n()) pt.x = Vec::Zero(p.n());
  if (pt.lambda.size() != p.m()) pt.lambda = Vec::Zero(p.m());

  std::set<std::vector<int>> visited;
  int increases = 0;
  double last = INFINITY;
  for (int it = 0; it <= max_iter; ++it) {
    const double res = kkt_residual(p, pt);
    r.residuals.push_back(res);
    if (res <= tol) {
      r.point = pt;
      r.iterations = it;
      return r;
    }
    increases = res > last ? increases + 1 : 0;
    last = res;
    auto act = active_set(p, pt);
    const bool cycling = !visited.insert(act).second;
    if (increases >= 10 || cycling) {
      if (r.restarts >= 3) throw NewtonFailure("semismooth Newton is cycling", act, pt);
      ++r.restarts;
      visited.clear();
      increases = 0;
      last = INFINITY;
      // restart from lambda = 0 at the unconstrained minimiser, perturbed per restart
      pt.x = p.A.llt().solve(p.b);
      pt.lambda = Vec::Zero(p.m());
      if (r.restarts > 1) pt.x += (0.1 * r.restarts) * Vec::Ones(p.n());
      act = active_set(p, pt);
      visited.insert(act);
    }
    try {
      pt = newton_piece(p, act);
    } catch (NewtonFailure& e) {
      throw NewtonFailure(e.what(), act, pt);
    }
  }
  throw NewtonFailure("semismooth Newton exceeded " + std::to_string(max_iter) + " iterations",
                      active_set(p, pt), pt);
}

KktPoint oracle_active_set(const QpProblem& p, double tol) {
  require(p, ConstraintKind::inequality);
  const int n = p.n(), m = p.m();
  if (m > 20) throw std::invalid_argument("active-set oracle is limited to m <= 20");
  for (unsigned long mask = 0; mask < (1ul << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i)
      if (mask & (1ul << i)) act.push_back(i);
    const int k = static_cast<int>(act.size());
    Matrix j = Matrix::Zero(n + k, n + k);
    Vec rhs(n + k);
    rhs.head(n) = p.b;
    j.topLeftCorner(n, n) = p.A;
    for (int i = 0; i < k; ++i) {
      j.block(0, n + i, n, 1) = -p.C.row(act[i]).transpose();
      j.block(n + i, 0, 1, n) = p.C.row(act[i]);
      rhs[n + i] = -p.d[act[i]];
    }
    Eigen::FullPivLU<Matrix> lu(j);
    if (!lu.isInvertible()) continue;
    const Vec sol = lu.solve(rhs);
    KktPoint pt{sol.head(n), Vec::Zero(m)};
    for (int i = 0; i < k; ++i) pt.lambda[act[i]] = sol[n + i];
    const Vec g = p.g(pt.x);
    const double scale = 1.0 + p.b.lpNorm<Eigen::Infinity>() + p.d.lpNorm<Eigen::Infinity>();
    if ((g.array() <= tol * scale).all() && (pt.lambda.array() <= tol * scale).all()) return pt;
  }
  throw std::runtime_error("active-set oracle found no KKT point (infeasible problem)");
}

}  // namespace almlab::alm
