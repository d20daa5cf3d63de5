#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "almlab/alm.hpp"
#include "almlab/saddle.hpp"

using namespace almlab;
using namespace almlab::saddle;

namespace {

// 1D obstacle toy: -u'' + u = f on n interior nodes, u <= g at every node.
SaddleProblem obstacle_toy(int n, double load, double obstacle, Variant v = Variant::multiplier) {
  const double h = 1.0 / (n + 1);
  Triplets t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 2.0 / h + h);
    if (i > 0) t.emplace_back(i, i - 1, -1.0 / h);
    if (i + 1 < n) t.emplace_back(i, i + 1, -1.0 / h);
  }
  SaddleProblem p;
  p.a = from_triplets(n, n, t);
  p.rhs_f = Vector::Constant(n, load * h);
  SparseMatrix id(n, n);
  id.setIdentity();
  p.B = id;
  p.g = Vector::Constant(n, obstacle);
  p.weights = Vector::Constant(n, h);
  p.gamma0 = 10.0;
  p.r = 0.5;
  p.h = h;
  p.mode = Mode::inequality;
  p.variant = v;
  return p;
}

Eigen::MatrixXd dense(const SparseMatrix& m) { return Eigen::MatrixXd(m); }

}  // namespace

TEST(Gamma, Scaling) {
  EXPECT_DOUBLE_EQ(gamma_of(1, 1, 0.7), 1.0);
  EXPECT_DOUBLE_EQ(gamma_of(0.01, 0.5, 0), 0.01);
  EXPECT_DOUBLE_EQ(gamma_of(10, 0.5, 0.5), 20.0);
  SaddleProblem p = obstacle_toy(3, 1, 1);
  p.compliance = 0.5;
  EXPECT_NEAR(p.gamma(), 1.0 / (p.h / p.gamma0 + 0.5), 1e-15);
}

TEST(DiscreteNorms, Examples) {
  const Vector v = Vector::LinSpaced(4, 1, 2), mu = Vector::LinSpaced(4, -1, 3);
  const Vector m = Vector::Constant(4, 0.25);
  const auto a = discrete_norms(v, mu, 0.1, 0.0, m);
  EXPECT_NEAR(a.primal, std::sqrt(0.25 * v.squaredNorm()), 1e-15);
  EXPECT_NEAR(a.dual, std::sqrt(0.25 * mu.squaredNorm()), 1e-15);
  const auto b = discrete_norms(Vector::Zero(4), mu, 0.1, 0.5, m);
  EXPECT_EQ(b.primal, 0.0);
  EXPECT_NEAR(b.dual, std::sqrt(0.1) * a.dual, 1e-15);
}

TEST(DiscreteNorms, DualityOnRandomPairs) {
  std::mt19937 rng(8);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd g(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) g(i, j) = nd(rng);
  const Eigen::MatrixXd md = g * g.transpose() + Eigen::MatrixXd::Identity(6, 6);
  const SparseMatrix mass = md.sparseView();
  for (int k = 0; k < 100; ++k) {
    Vector v(6), mu(6);
    for (int i = 0; i < 6; ++i) {
      v[i] = nd(rng);
      mu[i] = nd(rng);
    }
    const double h = 0.05 + 0.01 * k, r = 0.5 * (k % 3);
    const auto n = discrete_norms(v, mu, h, r, mass);
    EXPECT_LE(std::abs(v.dot(mass * mu)), n.primal * n.dual * (1 + 1e-12));
  }
}

TEST(Equality, ZeroDataGivesZeroSolution) {
  SaddleProblem p = obstacle_toy(5, 0, 0);
  p.mode = Mode::equality;
  const auto r = solve_equality(p);
  EXPECT_EQ(r.state.u.lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ(r.state.lambda.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Equality, InvertibleConstraintMatchesDirectSolve) {
  SaddleProblem p = obstacle_toy(8, 3, 0.2);
  p.mode = Mode::equality;
  // Bu = g exactly determines u; the multiplier is the reaction A u - f (per weight)
  const Vector u_ref = p.g;
  const Vector lam_ref = (p.a * u_ref - p.rhs_f).cwiseQuotient(p.weights);
  const auto r = solve_equality(p);
  EXPECT_LE((r.state.u - u_ref).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LE((r.state.lambda - lam_ref).lpNorm<Eigen::Infinity>(), 1e-10);
  p.gamma0 = 1e6;
  const auto big = solve_equality(p);
  EXPECT_LE((p.B * big.state.u - p.g).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Equality, ZeroStabilisationIsBitIdentical) {
  SaddleProblem p = obstacle_toy(6, 2, 0.1);
  p.mode = Mode::equality;
  const auto a = solve_equality(p);
  p.variant = Variant::stabilised;
  p.s_form = SparseMatrix(6, 6);
  const auto b = solve_equality(p);
  EXPECT_EQ(a.state.u, b.state.u);
  EXPECT_EQ(a.state.lambda, b.state.lambda);
}

TEST(Inequality, FarObstacleIsInactive) {
  SaddleProblem p = obstacle_toy(10, 5, 1e3);
  const auto r = solve_inequality(p);
  EXPECT_EQ(r.state.lambda.lpNorm<Eigen::Infinity>(), 0.0);
  const Vector free = solve_linear(p.a, p.rhs_f);
  EXPECT_LE((r.state.u - free).lpNorm<Eigen::Infinity>(), 1e-14);
  for (bool b : r.state.active) EXPECT_FALSE(b);
}

TEST(Inequality, ScalarToyMatchesQpOracle) {
  for (double load : {-2.0, 0.5, 3.0}) {
    SaddleProblem p;
    p.a = from_triplets(1, 1, {{0, 0, 1.0}});
    p.rhs_f = Vector::Constant(1, load);
    p.B = from_triplets(1, 1, {{0, 0, 1.0}});
    p.g = Vector::Constant(1, 1.0);
    p.weights = Vector::Ones(1);
    p.gamma0 = 3.0;
    const auto r = solve_inequality(p);
    alm::QpProblem q;
    q.A = alm::Matrix::Identity(1, 1);
    q.b = alm::Vec::Constant(1, load);
    q.C = alm::Matrix::Identity(1, 1);
    q.d = alm::Vec::Constant(1, -1.0);
    const auto o = alm::oracle_active_set(q);
    EXPECT_NEAR(r.state.u[0], o.x[0], 1e-12);
    EXPECT_NEAR(r.state.lambda[0], o.lambda[0], 1e-12);
  }
}

TEST(Inequality, SwitchMatchesEqualitySystem) {
  SaddleProblem p = obstacle_toy(7, 50, 0.0);
  const std::vector<bool> all(7, true), none(7, false);
  SaddleProblem e = p;
  e.mode = Mode::equality;
  const auto eq = solve_equality(e);
  const Eigen::MatrixXd j = dense(jacobian(p, all));
  // independent assembly of [[A + gamma B^T W B, -B^T W], [-W B, 0]]
  const double gam = p.gamma();
  const Eigen::MatrixXd a = dense(p.a), w = p.weights.asDiagonal();
  Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(14, 14);
  ref.topLeftCorner(7, 7) = a + gam * w;
  ref.topRightCorner(7, 7) = -w;
  ref.bottomLeftCorner(7, 7) = -w;
  EXPECT_LE((j - ref).cwiseAbs().maxCoeff(), 1e-14 * ref.cwiseAbs().maxCoeff());
  // the load pushes every node through the obstacle: the inequality solve is the equality solve
  const auto in = solve_inequality(p);
  for (bool b : in.state.active) EXPECT_TRUE(b);
  EXPECT_LE((in.state.u - eq.state.u).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LE((in.state.lambda - eq.state.lambda).lpNorm<Eigen::Infinity>(), 1e-9);
  // inactive mask: the multiplier block reads -gamma^-1 W lambda = 0
  const Eigen::MatrixXd jn = dense(jacobian(p, none));
  EXPECT_LE((jn.bottomRightCorner(7, 7) + w / gam).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(jn.topRightCorner(7, 7).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Inequality, ExactDofwiseKkt) {
  SaddleProblem p = obstacle_toy(40, 20, 0.5);
  const auto r = solve_inequality(p);
  int active = 0;
  for (int i = 0; i < 40; ++i) {
    const double gap = r.state.u[i] - p.g[i], lam = r.state.lambda[i];
    EXPECT_LE(gap, 1e-12);
    EXPECT_LE(lam, 0.0);
    EXPECT_LE(std::abs(gap * lam), 1e-12);
    active += r.state.active[i];
  }
  EXPECT_GT(active, 0);
  EXPECT_LT(active, 40);
}

TEST(Inequality, UniqueFromDifferentStarts) {
  SaddleProblem p = obstacle_toy(30, 20, 0.5);
  const auto a = solve_inequality(p);
  SaddleState s;
  s.u = Vector::Constant(30, -1.0);
  s.lambda = Vector::Constant(30, -3.0);
  const auto b = solve_inequality(p, s);
  SaddleState m;
  m.active.assign(30, true);
  const auto c = solve_inequality(p, m);
  EXPECT_LE((a.state.u - b.state.u).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LE((a.state.lambda - b.state.lambda).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LE((a.state.u - c.state.u).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LE((a.state.lambda - c.state.lambda).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(Inequality, DoubledGammaKeepsStrictMask) {
  SaddleProblem p = obstacle_toy(40, 20, 0.5);
  const auto a = solve_inequality(p);
  const Vector s = switch_argument(p, a.state);
  SaddleProblem q = p;
  q.gamma0 *= 2.0;
  const auto b = solve_inequality(q, a.state);
  for (int i = 0; i < 40; ++i)
    if (std::abs(s[i]) > 1e-9) EXPECT_EQ(a.state.active[i], b.state.active[i]) << i;
}

TEST(Inequality, AprioriBoundGrowsLinearly) {
  std::vector<double> q;
  for (double t : {1.0, 2.0, 4.0}) {
    SaddleProblem p = obstacle_toy(40, 20.0 * t, 0.5);
    const auto r = solve_inequality(p);
    const double energy = std::sqrt(r.state.u.dot(p.a * r.state.u));
    const auto n = discrete_norms(Vector::Zero(40), r.state.lambda, p.h, p.r, p.weights);
    q.push_back(energy + n.dual / std::sqrt(p.gamma0));
  }
  const double slope = std::log(q[2] / q[0]) / std::log(4.0);
  EXPECT_LE(slope, 1.1);
}

TEST(Inequality, EliminatedReproducesMultiplierVariant) {
  SaddleProblem p = obstacle_toy(25, 20, 0.4);
  const auto mult = solve_inequality(p);
  // lambda(u) = W^-1 (A u - f) spans the multiplier space exactly
  SaddleProblem e = p;
  e.variant = Variant::eliminated;
  const Vector winv = p.weights.cwiseInverse();
  e.T = SparseMatrix(winv.asDiagonal() * p.a);
  e.t_offset = -winv.cwiseProduct(p.rhs_f);
  const auto elim = solve_inequality(e);
  EXPECT_LE((elim.state.u - mult.state.u).lpNorm<Eigen::Infinity>(), 1e-10);
  EXPECT_LE((elim.point_multiplier - mult.state.lambda).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(Incremental, MatchesSemismoothNewton) {
  for (Variant v : {Variant::multiplier, Variant::eliminated}) {
    SaddleProblem p = obstacle_toy(30, 20, 0.5, v);
    if (v == Variant::eliminated) {
      const Vector winv = p.weights.cwiseInverse();
      p.T = SparseMatrix(winv.asDiagonal() * p.a);
      p.t_offset = -winv.cwiseProduct(p.rhs_f);
    }
    const auto a = solve_inequality(p);
    const auto b = solve_inequality_incremental(p, 1e-10, 200);
    EXPECT_LE((a.state.u - b.state.u).lpNorm<Eigen::Infinity>(), 1e-9);
    EXPECT_EQ(a.state.active, b.state.active);
    EXPECT_LE((a.point_multiplier - b.point_multiplier).lpNorm<Eigen::Infinity>(), 1e-7);
  }
}

TEST(Incremental, InactiveProblemTakesOneStep) {
  SaddleProblem p = obstacle_toy(10, 1, 100);
  const auto r = solve_inequality_incremental(p);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(std::count(r.state.active.begin(), r.state.active.end(), true), 0);
}

TEST(Incremental, NonConvergenceCarriesHistory) {
  SaddleProblem p = obstacle_toy(40, 20, 0.5);
  EXPECT_THROW(solve_inequality_incremental(p, 1e-10, 2), SaddleNonConvergence);
}

TEST(Inequality, NonConvergenceCarriesHistory) {
  SaddleProblem p = obstacle_toy(40, 20, 0.5);
  try {
    solve_inequality(p, {}, 1e-10, 1);
    FAIL() << "expected non-convergence";
  } catch (const SaddleNonConvergence& e) {
    EXPECT_EQ(e.history().size(), 2u);
    EXPECT_EQ(e.last().state.u.size(), 40);
  }
}

TEST(Inequality, EliminatedStabilityWarning) {
  SaddleProblem p = obstacle_toy(5, 1, 1, Variant::eliminated);
  p.T = SparseMatrix(5, 5);
  p.inverse_constant = 50.0;
  EXPECT_FALSE(solve_inequality(p).warnings.empty());
  p.inverse_constant = 1.0;
  EXPECT_TRUE(solve_inequality(p).warnings.empty());
}

TEST(Complementarity, Properties) {
  SaddleProblem p = obstacle_toy(12, 20, 0.3);
  const auto a = solve_inequality(p).state;
  EXPECT_EQ(complementarity_error(p, a, a), 0.0);
  std::mt19937 rng(9);
  std::normal_distribution<double> nd;
  SaddleState b;
  b.u = Vector::NullaryExpr(12, [&] { return nd(rng); });
  b.lambda = Vector::NullaryExpr(12, [&] { return nd(rng); });
  const double ab = complementarity_error(p, a, b);
  EXPECT_DOUBLE_EQ(ab, complementarity_error(p, b, a));
  // direct re-evaluation
  const double gam = p.gamma();
  double s = 0.0;
  for (int i = 0; i < 12; ++i) {
    const double za = std::max(a.u[i] - p.g[i] - a.lambda[i] / gam, 0.0);
    const double zb = std::max(b.u[i] - p.g[i] - b.lambda[i] / gam, 0.0);
    const double z = za - zb + (a.lambda[i] - b.lambda[i]) / gam;
    s += p.weights[i] * z * z;
  }
  EXPECT_NEAR(ab, std::sqrt(p.gamma0) * std::sqrt(s) / std::sqrt(p.h), 1e-12 * ab);
}

TEST(Stabilisation, ProjectionAlgebra) {
  std::mt19937 rng(10);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd g(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) g(i, j) = nd(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  const Eigen::MatrixXd fine = q.leftCols(5) * q.leftCols(5).transpose();
  const Eigen::MatrixXd coarse = q.leftCols(2) * q.leftCols(2).transpose();
  const SparseMatrix pi = fine.sparseView(1e-300), pt = coarse.sparseView(1e-300);
  const double gamma = 4.0, gamma0 = 2.0;

  const Vector stable = q.col(0) - 2.0 * q.col(1);
  EXPECT_NEAR(stabilisation_term(stable, stable, pi, pt, gamma), 0.0, 1e-14);
  EXPECT_NEAR(stabilisation_term(stable, q.col(3), pi, pi, gamma), 0.0, 1e-14);
  for (int k = 0; k < 20; ++k) {
    const Vector mu = Vector::NullaryExpr(8, [&] { return nd(rng); });
    const double s = stabilisation_term(mu, mu, pi, pt, gamma);
    EXPECT_GE(s, -1e-14);
    EXPECT_NEAR(s, ((fine - coarse) * mu).squaredNorm() / gamma, 1e-12);
    // control of unstable modes inside range(pi)
    const Vector m2 = fine * mu;
    const double s2 = stabilisation_term(m2, m2, pi, pt, gamma);
    EXPECT_LE((m2 - coarse * m2).norm() / std::sqrt(gamma0),
              std::sqrt(gamma / gamma0) * std::sqrt(s2) * (1 + 1e-10));
  }
  const SparseMatrix sm = stabilisation_matrix(pi, pt, gamma);
  EXPECT_TRUE(is_symmetric(sm, 1e-12));
  const Eigen::MatrixXd other = q.col(6) * q.col(6).transpose();
  EXPECT_THROW(stabilisation_term(stable, stable, pi, SparseMatrix(other.sparseView()), gamma),
               std::invalid_argument);
}

TEST(Stabilisation, StabilisedVariantSolves) {
  SaddleProblem p = obstacle_toy(10, 20, 0.3, Variant::stabilised);
  // pi = identity, pi_tilde = projection onto constants
  SparseMatrix pi(10, 10);
  pi.setIdentity();
  const Eigen::MatrixXd c = Eigen::MatrixXd::Constant(10, 10, 0.1);
  p.s_form = stabilisation_matrix(pi, SparseMatrix(c.sparseView()), p.gamma());
  const auto r = solve_inequality(p);
  EXPECT_LE(r.log.back().residual, 1e-10);
}

TEST(Validation, RejectsMalformedProblems) {
  SaddleProblem p = obstacle_toy(4, 1, 1, Variant::eliminated);
  EXPECT_THROW(solve_inequality(p), std::invalid_argument);  // missing T
  SaddleProblem q = obstacle_toy(4, 1, 1);
  q.gamma0 = 0.0;
  EXPECT_THROW(solve_inequality(q), std::invalid_argument);
  SaddleProblem s = obstacle_toy(4, 1, 1, Variant::stabilised);
  EXPECT_THROW(solve_inequality(s), std::invalid_argument);
  SaddleProblem e = obstacle_toy(4, 1, 1);
  EXPECT_THROW(solve_equality(e), std::invalid_argument);
}
