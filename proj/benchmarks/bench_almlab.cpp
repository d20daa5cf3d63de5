#include <benchmark/benchmark.h>

#include <random>

#include "almlab/alm.hpp"
#include "almlab/elasticity.hpp"
#include "almlab/plate.hpp"
#include "almlab/poisson.hpp"
#include "almlab/stokes.hpp"

using namespace almlab;

namespace {

alm::QpProblem random_qp(std::mt19937& rng, int n, int m, alm::ConstraintKind kind) {
  std::normal_distribution<double> nd;
  auto gaussian = [&](int r, int c) { return alm::Matrix(alm::Matrix::NullaryExpr(r, c, [&] { return nd(rng); })); };
  const alm::Matrix g = gaussian(n, n);
  alm::QpProblem p;
  p.A = g * g.transpose() + n * alm::Matrix::Identity(n, n);
  p.b = 3.0 * gaussian(n, 1);
  p.C = gaussian(m, n);
  p.d = -p.C * gaussian(n, 1) - alm::Vec::Constant(m, 0.5);
  p.kind = kind;
  return p;
}

std::shared_ptr<const Mesh> square(int n) {
  return std::make_shared<const Mesh>(generate_rect_mesh({0, 1}, {0, 1}, n, n));
}

}  // namespace

static void BM_IneqNewton(benchmark::State& state) {
  std::mt19937 rng(1);
  const auto p = random_qp(rng, 6, 4, alm::ConstraintKind::inequality);
  for (auto _ : state) benchmark::DoNotOptimize(alm::solve_ineq_newton(p, {}));
}
BENCHMARK(BM_IneqNewton);

static void BM_ActiveSetOracle(benchmark::State& state) {
  std::mt19937 rng(1);
  const auto p = random_qp(rng, 6, 4, alm::ConstraintKind::inequality);
  for (auto _ : state) benchmark::DoNotOptimize(alm::oracle_active_set(p));
}
BENCHMARK(BM_ActiveSetOracle);

static void BM_Uzawa(benchmark::State& state) {
  std::mt19937 rng(2);
  auto p = random_qp(rng, 10, 5, alm::ConstraintKind::equality);
  p.gamma = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(alm::uzawa_solve(p, p.gamma, alm::Vec::Zero(5), 1e-10, 100000));
}
BENCHMARK(BM_Uzawa)->Arg(1)->Arg(10)->Arg(100);

static void BM_PoissonDirichlet(benchmark::State& state) {
  poisson::PoissonConfig cfg;
  cfg.mesh = square(static_cast<int>(state.range(0)));
  cfg.f = [](const Point&) { return 1.0; };
  for (auto _ : state) benchmark::DoNotOptimize(poisson::solve_dirichlet_nitsche(cfg));
}
BENCHMARK(BM_PoissonDirichlet)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_PoissonUnilateral(benchmark::State& state) {
  const auto cfg = poisson::driven_membrane(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(poisson::solve_unilateral_nitsche(cfg));
}
BENCHMARK(BM_PoissonUnilateral)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_Stokes(benchmark::State& state) {
  stokes::StokesConfig cfg;
  cfg.mesh = square(static_cast<int>(state.range(0)));
  for (int t : {1, 2, 3}) cfg.dirichlet[t] = [](const Point&) { return Point{0.0, 0.0}; };
  cfg.dirichlet[4] = [](const Point&) { return Point{1.0, 0.0}; };
  for (auto _ : state) benchmark::DoNotOptimize(stokes::solve_stokes(cfg));
}
BENCHMARK(BM_Stokes)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_Cavitation(benchmark::State& state) {
  auto cfg = stokes::pocket_channel(32, 8);
  cfg.cavitation = true;
  for (auto _ : state) benchmark::DoNotOptimize(stokes::solve_cavitation(cfg));
}
BENCHMARK(BM_Cavitation)->Unit(benchmark::kMillisecond);

static void BM_DiscContact(benchmark::State& state) {
  const auto cfg = elasticity::disc_on_plane(static_cast<int>(state.range(0)), 1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(elasticity::solve_contact(cfg));
}
BENCHMARK(BM_DiscContact)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_Mindlin(benchmark::State& state) {
  const auto cfg = plate::obstacle_benchmark(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(plate::solve_mindlin_alm(cfg));
}
BENCHMARK(BM_Mindlin)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_PlateObstacle(benchmark::State& state) {
  const auto cfg = plate::obstacle_benchmark(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(plate::solve_plate_obstacle(cfg));
}
BENCHMARK(BM_PlateObstacle)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
