#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "almlab/assembly.hpp"
#include "almlab/convergence.hpp"
#include "almlab/elasticity.hpp"
#include "almlab/quadrature.hpp"

using namespace almlab;
using namespace almlab::elasticity;

namespace {

std::shared_ptr<const Mesh> rect(double lx, int nx, int ny) {
  return std::make_shared<const Mesh>(generate_rect_mesh({0, lx}, {0, 1}, nx, ny));
}

// Nitsche-Dirichlet elastic matrix assembled from full stress tensors
SparseMatrix nitsche_dirichlet_oracle(const FeSpace& space, double E, double nu, const std::vector<int>& tags,
                                      double gamma0) {
  const double lam = nu * E / ((1 + nu) * (1 - 2 * nu)), mu = E / (2 * (1 + nu));
  const double h = space.mesh().h_max();
  const int nl = space.local_size();
  Eigen::MatrixXd dense = Eigen::MatrixXd(assemble_elasticity(space, E, nu));
  const auto& rule = gauss3();
  double phi[6];
  Point grad[6];
  for (const auto& f : space.mesh().facets()) {
    if (std::find(tags.begin(), tags.end(), f.tag) == tags.end()) continue;
    const auto geo = cell_geometry(space.mesh(), f.cell);
    const Eigen::Vector2d n(space.mesh().facet_normal(f).x, space.mesh().facet_normal(f).y);
    const auto nodes = space.cell_nodes(f.cell);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto bary = edge_bary(f.local_edge, rule.points[q]);
      shape_values(space.family(), bary, phi);
      shape_gradients(space.family(), geo, bary, grad);
      const double w = rule.weights[q] * space.mesh().facet_length(f);
      std::vector<Eigen::Vector2d> val, tr;
      std::vector<int> dofs;
      for (int a = 0; a < nl; ++a)
        for (int c = 0; c < 2; ++c) {
          Eigen::Matrix2d gu = Eigen::Matrix2d::Zero();
          gu.row(c) << grad[a].x, grad[a].y;
          const Eigen::Matrix2d eps = 0.5 * (gu + gu.transpose());
          const Eigen::Matrix2d sigma = lam * eps.trace() * Eigen::Matrix2d::Identity() + 2 * mu * eps;
          Eigen::Vector2d v = Eigen::Vector2d::Zero();
          v[c] = phi[a];
          val.push_back(v);
          tr.push_back(sigma * n);
          dofs.push_back(space.dof(nodes[a], c));
        }
      for (std::size_t i = 0; i < dofs.size(); ++i)
        for (std::size_t j = 0; j < dofs.size(); ++j)
          dense(dofs[i], dofs[j]) += w * (-tr[j].dot(val[i]) - val[j].dot(tr[i]) + gamma0 / h * val[j].dot(val[i]));
    }
  }
  return dense.sparseView();
}

// clamped top, body force down, bottom either Robin or contact
ElasticConfig block(int n) {
  ElasticConfig c;
  c.mesh = rect(2, 2 * n, n);
  c.clamped_tags = {4};
  c.f = [](const Point&) { return Point{0.0, -10.0}; };
  return c;
}

}  // namespace

TEST(Elasticity, LameValidation) {
  EXPECT_THROW(lame(1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(lame(1.0, -0.1), std::invalid_argument);
  EXPECT_THROW(lame(0.0, 0.3), std::invalid_argument);
  const Lame l = lame(200, 0.33);
  EXPECT_NEAR(l.mu, 200 / 2.66, 1e-12);
}

TEST(Elasticity, RigidModesInKernel) {
  for (Family fam : {Family::P1, Family::P2}) {
    const FeSpace space(rect(1, 3, 3), fam, 2);
    const SparseMatrix k = assemble_elasticity(space, 200, 0.33);
    const Vector tx = space.interpolate(VectorFn([](const Point&) { return Point{1, 0}; }));
    const Vector ty = space.interpolate(VectorFn([](const Point&) { return Point{0, 1}; }));
    const Vector rot = space.interpolate(VectorFn([](const Point& p) { return Point{-p.y, p.x}; }));
    const double scale = max_abs(k);
    EXPECT_LE(Vector(k * tx).lpNorm<Eigen::Infinity>(), 1e-12 * scale);
    EXPECT_LE(Vector(k * ty).lpNorm<Eigen::Infinity>(), 1e-12 * scale);
    EXPECT_LE(Vector(k * rot).lpNorm<Eigen::Infinity>(), 1e-12 * scale);
    EXPECT_TRUE(is_symmetric(k));
  }
}

TEST(Elasticity, KernelIsExactlyRigidModes) {
  const FeSpace space(rect(1, 2, 2), Family::P2, 2);
  const Eigen::MatrixXd k(assemble_elasticity(space, 200, 0.33));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  int zero = 0;
  for (int i = 0; i < k.rows(); ++i) {
    EXPECT_GT(es.eigenvalues()[i], -1e-10 * top);
    zero += std::abs(es.eigenvalues()[i]) < 1e-10 * top;
  }
  EXPECT_EQ(zero, 3);
}

TEST(Elasticity, AffinePatchTest) {
  const FeSpace space(rect(1, 4, 4), Family::P1, 2);
  const VectorFn affine = [](const Point& p) { return Point{0.1 * p.x - 0.3 * p.y, 0.2 * p.x + 0.05 * p.y}; };
  const Vector exact = space.interpolate(affine);
  std::vector<int> fixed;
  std::vector<double> values;
  for (int node : space.boundary_nodes({1, 2, 3, 4}))
    for (int c = 0; c < 2; ++c) {
      fixed.push_back(space.dof(node, c));
      values.push_back(exact[space.dof(node, c)]);
    }
  const DofReduction red(space.n_dofs(), fixed, values);
  const SparseMatrix k = assemble_elasticity(space, 200, 0.33);
  const Vector u = red.expand(solve_linear(red.restrict(k), red.restrict_rhs(k, Vector::Zero(space.n_dofs()))));
  EXPECT_LE((u - exact).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Elasticity, ContactGammaAlgebra) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double h = 1e-3 + d(rng), g0 = 1e-2 + 1e4 * d(rng), a = d(rng) < 0.2 ? 0.0 : d(rng);
    const double gamma = contact_gamma(h, g0, a);
    EXPECT_NEAR(a - 1.0 / gamma, -h / g0, 1e-12 * (a + h / g0));
  }
  EXPECT_THROW(contact_gamma(0.1, 1.0, -1.0), std::invalid_argument);
}

TEST(Robin, ZeroFlexibilityIsNitscheDirichlet) {
  ElasticConfig c = block(3);
  c.clamped_tags.clear();
  c.robin_tags = {3, 4};
  const FeSpace space(c.mesh, Family::P2, 2);
  const SparseMatrix robin = robin_matrix(c, space);
  const SparseMatrix ref = nitsche_dirichlet_oracle(space, c.E, c.nu, c.robin_tags, c.gamma0_value());
  EXPECT_LE(max_abs(robin - ref), 1e-12 * max_abs(ref));
}

TEST(Robin, SymmetricForAnyFlexibility) {
  ElasticConfig c = block(3);
  c.robin_tags = {3};
  c.alpha = 0.3;
  c.beta = 2.0;
  const FeSpace space(c.mesh, Family::P2, 2);
  EXPECT_TRUE(is_symmetric(robin_matrix(c, space), 1e-12));
}

TEST(Robin, ZeroLoadGivesZero) {
  ElasticConfig c = block(3);
  c.f = [](const Point&) { return Point{0, 0}; };
  c.robin_tags = {3};
  c.alpha = 0.1;
  const auto r = solve_robin_nitsche(c);
  EXPECT_LE(r.u.lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(Robin, SofterFoundationCarriesLessTraction) {
  auto traction = [](double flex) {
    ElasticConfig c = block(6);
    c.robin_tags = {3};
    c.alpha = flex;
    c.beta = flex;
    const auto r = solve_robin_nitsche(c);
    const auto sn = contact_pressure(*r.space, r.u, c.E, c.nu, 3);
    double total = 0;
    for (double s : sn) total += std::abs(s);
    return total;
  };
  EXPECT_LT(traction(1e3), traction(1e-3));
}

TEST(Robin, SmallGammaIsRejected) {
  ElasticConfig c = block(4);
  c.clamped_tags.clear();
  c.robin_tags = {3, 4};
  c.gamma0 = 1e-3;
  EXPECT_THROW(solve_robin_nitsche(c), Error);
}

TEST(Contact, ValidationErrors) {
  ElasticConfig c = block(2);
  EXPECT_THROW(solve_contact(c), std::invalid_argument);  // no contact tags
  c.contact_tags = {9};
  EXPECT_THROW(solve_contact(c), std::invalid_argument);
  c.contact_tags = {3};
  c.alpha = -1;
  EXPECT_THROW(solve_contact(c), std::invalid_argument);
  c.alpha = 0;
  c.nu = 0.5;
  EXPECT_THROW(solve_contact(c), std::invalid_argument);
}

TEST(Contact, ZeroLoadGivesZero) {
  ElasticConfig c = block(3);
  c.f = [](const Point&) { return Point{0, 0}; };
  c.contact_tags = {3};
  c.gap = [](const Point&) { return 0.01; };
  const auto r = solve_contact(c);
  EXPECT_LE(r.u.lpNorm<Eigen::Infinity>(), 1e-14);
  for (bool a : r.active) EXPECT_FALSE(a);
}

TEST(Contact, LargeGapMatchesFreeSolveUnderRefinement) {
  std::vector<double> diff;
  for (int n : {2, 4, 8}) {
    ElasticConfig c = block(n);
    const auto free = solve_robin_nitsche(c);
    c.contact_tags = {3};
    c.gap = [](const Point&) { return 10.0; };
    const auto r = solve_contact(c);
    for (bool a : r.active) EXPECT_FALSE(a);
    diff.push_back((r.u - free.u).lpNorm<Eigen::Infinity>() / free.u.lpNorm<Eigen::Infinity>());
  }
  EXPECT_LT(diff[1], diff[0]);
  EXPECT_LT(diff[2], diff[1]);
}

TEST(ContactPressure, ZeroAndUniaxialStates) {
  const FeSpace space(rect(1, 3, 3), Family::P2, 2);
  for (double s : contact_pressure(space, Vector::Zero(space.n_dofs()), 200, 0.33, 3)) EXPECT_EQ(s, 0.0);
  const double e = 1e-3;
  const Vector u = space.interpolate(VectorFn([e](const Point& p) { return Point{0.0, -e * p.y}; }));
  const Lame l = lame(200, 0.33);
  const auto sn = contact_pressure(space, u, 200, 0.33, 3);
  ASSERT_EQ(sn.size(), 3u);
  for (double s : sn) EXPECT_NEAR(s, -(l.lambda + 2 * l.mu) * e, 1e-12);
  EXPECT_THROW(contact_pressure(space, u, 200, 0.33, 8), std::invalid_argument);
}

TEST(DiscContact, FlexibilitySweep) {
  std::vector<double> peak, sink, length;
  for (double alpha : {0.0, 1e-3, 1e-2}) {
    const auto r = solve_contact(disc_on_plane(8, alpha));
    EXPECT_TRUE(r.warnings.empty());
    int active = 0;
    for (std::size_t i = 0; i < r.active.size(); ++i) {
      if (!r.active[i]) continue;
      ++active;
      EXPECT_LE(r.pressure[static_cast<int>(i)], 1e-10);
    }
    EXPECT_GT(active, 0);
    EXPECT_LE(r.pressure.maxCoeff(), 0.0);
    peak.push_back(r.peak_pressure());
    sink.push_back(-r.u.minCoeff());
    length.push_back(r.contact_length());
  }
  for (int i = 1; i < 3; ++i) {
    EXPECT_LE(peak[i], peak[i - 1]);
    EXPECT_GT(sink[i], sink[i - 1]);
    EXPECT_GE(length[i], length[i - 1]);
  }
}

TEST(DiscContact, RigidLimitIsLinearInAlpha) {
  const auto rigid = solve_contact(disc_on_plane(8, 0.0));
  std::vector<ConvergenceRow> rows;
  for (double alpha : {1e-5, 1e-6, 1e-7}) {
    const auto r = solve_contact(disc_on_plane(8, alpha));
    rows.push_back({alpha, (r.u - rigid.u).lpNorm<Eigen::Infinity>()});
  }
  EXPECT_NEAR(convergence_report(rows), 1.0, 0.1);
}

TEST(DiscContact, InverseConstantBelowDefaultGamma) {
  const auto c = disc_on_plane(8, 0.0);
  const FeSpace space(c.mesh, Family::P2, 2);
  const double ci = elastic_inverse_constant(space, c.E, c.nu, c.contact_tags, true);
  EXPECT_LT(ci, c.gamma0_value());
  const auto fine = disc_on_plane(16, 0.0);
  const double ci_fine = elastic_inverse_constant(FeSpace(fine.mesh, Family::P2, 2), c.E, c.nu, c.contact_tags, true);
  EXPECT_NEAR(ci_fine / ci, 1.0, 0.2);
}
