// Per-round learner cost (propose + observe) across problem sizes, driven
// against a fixed stationary market so the numbers isolate learner work.

#include <benchmark/benchmark.h>

#include <memory>
#include <string>

#include "pricelab/harness.hpp"
#include "pricelab/market_model.hpp"
#include "pricelab/regimes.hpp"
#include "pricelab/rng.hpp"

namespace {

using namespace pricelab;

struct Fixture {
  FeatureMatrix u{Eigen::MatrixXd::Ones(1, 1), 1};
  RevenueQuadratic quad;
  AttributeBox box{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1),
                   Eigen::VectorXd::Zero(1)};
  PriceBall ball;
  Eigen::VectorXd theta_base;
  Eigen::MatrixXd m;
  Eigen::VectorXd uz;
};

Fixture make_fixture(int n, int d) {
  Rng rng(1);
  // Ring block sizing: the largest block count <= d that divides n.
  int n_blocks = d;
  while (n % n_blocks != 0) --n_blocks;
  Fixture f;
  f.u = generate_feature_matrix(
      n, d,
      BlockStructure::ring(n_blocks, n / n_blocks, d, std::min(3, d), 0.7, 2),
      rng);
  RegimeSpec spec;
  spec.horizon = 1;
  spec.apply_defaults();
  EnvironmentTrajectory traj(spec, f.u);
  const MarketSnapshot& snap = traj.at(1);
  f.quad = revenue_quadratic(f.u, snap.state);
  f.theta_base = derive_theta_base(f.u, snap, 0.5);
  f.box = AttributeBox::symmetric(f.theta_base, 150.0);
  f.ball = PriceBall{prices_from_attributes(f.u, f.theta_base), 1500.0};
  const ElasticityOperator op =
      assemble_elasticity_operator(f.u, snap.state);
  f.m = op.m;
  f.uz = f.u.entries * snap.state.z;
  return f;
}

void run_learner(benchmark::State& state, const std::string& id) {
  const int n = static_cast<int>(state.range(0));
  const int d = static_cast<int>(state.range(1));
  const Fixture f = make_fixture(n, d);
  LearnerParams params;
  params.eta0 = 5e-5;
  params.eps0 = 150.0;
  const int horizon = 50000;
  std::unique_ptr<Learner> learner =
      make_learner(id, params, f.u, f.box, f.ball, horizon);
  Rng rng(2);
  for (auto _ : state) {
    const Eigen::VectorXd p = learner->propose(rng);
    const double revenue = p.dot(f.uz - f.m * p);
    learner->observe(revenue);
    benchmark::DoNotOptimize(revenue);
  }
}

void args(benchmark::internal::Benchmark* b) {
  b->Args({60, 6})->Args({100, 10})->Args({1000, 100});
}

void BM_Adept(benchmark::State& s) { run_learner(s, "adept"); }
void BM_Gdg(benchmark::State& s) { run_learner(s, "gdg"); }
void BM_Ee(benchmark::State& s) { run_learner(s, "ee"); }
void BM_Opok(benchmark::State& s) { run_learner(s, "opok"); }

BENCHMARK(BM_Adept)->Apply(args);
BENCHMARK(BM_Gdg)->Apply(args);
BENCHMARK(BM_Ee)->Apply(args);
BENCHMARK(BM_Opok)->Apply(args);

}  // namespace

BENCHMARK_MAIN();
