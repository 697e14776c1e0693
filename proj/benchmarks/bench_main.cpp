#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include <complex>
#include <random>

#include "tripend/analysis.hpp"
#include "tripend/care.hpp"
#include "tripend/config.hpp"
#include "tripend/dynamics.hpp"
#include "tripend/mu.hpp"
#include "tripend/sim.hpp"
#include "tripend/state_space.hpp"
#include "tripend/uncertainty.hpp"

namespace {

using namespace tripend;

// The hot paths of a full reproduction run, on the actual plant sizes.

void BM_ForwardDynamics(benchmark::State& state) {
  const PhysicalParameters p;
  const CompositeParameters c = derive_composites(p);
  PendulumState s;
  s.theta << 0.1, -0.05, 0.2;
  s.omega << 0.3, 0.1, -0.2;
  const Eigen::Vector2d tm(0.5, -0.3);
  const Eigen::Vector3d d(0.01, 0.02, -0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_dynamics(p, c, s, tm, d));
  }
}
BENCHMARK(BM_ForwardDynamics);

void BM_CareSolve(benchmark::State& state) {
  const PhysicalParameters p;
  const LinearPlant lp = linearize(p, derive_composites(p));
  const Eigen::MatrixXd A = lp.A;
  const Eigen::MatrixXd B = lp.Bu;
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(6, 6);
  const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(2, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(care_solve(A, B, Q, R));
  }
}
BENCHMARK(BM_CareSolve);

StateSpaceModel random_stable(int n, int m, int q, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  StateSpaceModel g;
  g.A.resize(n, n);
  g.B.resize(n, m);
  g.C.resize(q, n);
  g.D = Eigen::MatrixXd::Zero(q, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g.A(i, j) = nd(gen);
  g.A -= (g.A.cwiseAbs().rowwise().sum().maxCoeff() + 1.0) *
         Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) g.B(i, j) = nd(gen);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < n; ++j) g.C(i, j) = nd(gen);
  return g;
}

void BM_HinfNorm(benchmark::State& state) {
  const StateSpaceModel g = random_stable(12, 3, 3, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hinf_norm(g));
  }
}
BENCHMARK(BM_HinfNorm);

void BM_FreqResponseGrid(benchmark::State& state) {
  RunConfig cfg;
  const ActuatorModel act = cfg.actuator();
  const AugmentedPlant aug =
      build_uncertain_plant(cfg.params, cfg.unc, act, act, cfg.weights);
  const std::vector<double> grid = default_grid();
  for (auto _ : state) {
    benchmark::DoNotOptimize(freq_response(aug.sys, grid));
  }
}
BENCHMARK(BM_FreqResponseGrid);

void BM_MuUpperPoint(benchmark::State& state) {
  BlockStructure bs;
  for (int i = 0; i < 10; ++i) bs.blocks.push_back({BlockKind::RealScalar, 1, 1, ""});
  bs.blocks.push_back({BlockKind::ComplexFull, 9, 5, "perf"});
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXcd M(bs.z_dim(), bs.w_dim());
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      M(i, j) = std::complex<double>(nd(gen), nd(gen));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mu_upper(M, bs));
  }
}
BENCHMARK(BM_MuUpperPoint);

void BM_NonlinearStep(benchmark::State& state) {
  const PhysicalParameters p;
  const CompositeParameters c = derive_composites(p);
  auto f = [&](double, const Eigen::VectorXd& x) {
    PendulumState s;
    s.theta = x.head<3>();
    s.omega = x.tail<3>();
    Eigen::VectorXd dx(6);
    dx.head<3>() = s.omega;
    dx.tail<3>() =
        forward_dynamics(p, c, s, Eigen::Vector2d::Zero(), Eigen::Vector3d::Zero());
    return dx;
  };
  Eigen::VectorXd x0(6);
  x0 << 0.05, -0.02, 0.04, 0.0, 0.0, 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate_rk4(f, x0, 0.1, 1e-3));
  }
}
BENCHMARK(BM_NonlinearStep);

}  // namespace

BENCHMARK_MAIN();
