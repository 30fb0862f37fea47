// Microbenchmarks for the hot paths: learner fits, stacking, the bootstrap,
// and a full simulation cell.

#include <benchmark/benchmark.h>

#include <random>

#include "pattc/causal/compliance.hpp"
#include "pattc/infer/inference.hpp"
#include "pattc/learn/super_learner.hpp"
#include "pattc/sim/grid.hpp"

using namespace pattc;

namespace {

struct Problem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y, w;
};

Problem regression_problem(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  Problem pr;
  pr.X.resize(n, p);
  pr.y.resize(n);
  pr.w = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i) {
    double signal = 0;
    for (int j = 0; j < p; ++j) {
      pr.X(i, j) = g(rng);
      signal += (j % 2 ? 0.5 : -1.0) * pr.X(i, j);
    }
    pr.y(i) = signal + 0.5 * g(rng);
  }
  return pr;
}

}  // namespace

static void BM_GbtFit(benchmark::State& state) {
  const Problem pr = regression_problem(static_cast<int>(state.range(0)), 4, 1);
  const LearnerSpec spec = LearnerSpec::make_gbt(Family::gaussian, 100, 3, 0.1);
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_learner(spec, pr.X, pr.y, pr.w, 7));
}
BENCHMARK(BM_GbtFit)->Arg(1000)->Arg(5000);

static void BM_ElasticNetPath(benchmark::State& state) {
  const Problem pr = regression_problem(static_cast<int>(state.range(0)), 8, 2);
  const LearnerSpec spec = LearnerSpec::make_elastic_net(Family::gaussian, 0.5);
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_learner(spec, pr.X, pr.y, pr.w, 7));
}
BENCHMARK(BM_ElasticNetPath)->Arg(1000)->Arg(5000);

static void BM_RandomForestFit(benchmark::State& state) {
  const Problem pr = regression_problem(static_cast<int>(state.range(0)), 4, 3);
  const LearnerSpec spec = LearnerSpec::make_random_forest(Family::gaussian, 50, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_learner(spec, pr.X, pr.y, pr.w, 7));
}
BENCHMARK(BM_RandomForestFit)->Arg(1000);

static void BM_Nnls(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 1);
  const int n = static_cast<int>(state.range(0));
  Eigen::MatrixXd Z(n, 5);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    y(i) = g(rng);
    for (int j = 0; j < 5; ++j) Z(i, j) = y(i) + 0.5 * g(rng);
  }
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  for (auto _ : state) benchmark::DoNotOptimize(nnls_stack(Z, y, w));
}
BENCHMARK(BM_Nnls)->Arg(5000)->Arg(50000);

static void BM_SuperLearner(benchmark::State& state) {
  const Problem pr = regression_problem(2000, 4, 9);
  const std::vector<LearnerSpec> specs = {
      LearnerSpec::make_elastic_net(Family::gaussian, 0.5, 1e-3),
      LearnerSpec::make_gbt(Family::gaussian, 100, 3, 0.1),
      LearnerSpec::make_poly_ridge(Family::gaussian, 2, 1e-3),
  };
  for (auto _ : state) {
    const CVPlan plan = CVPlan::make(2000, 5, 11);
    benchmark::DoNotOptimize(fit_super_learner(specs, pr.X, pr.y, pr.w, plan, 11));
  }
}
BENCHMARK(BM_SuperLearner);

static void BM_ClusterBootstrap(benchmark::State& state) {
  SimParams p;
  p.population_size = 12000;
  p.draw_size = 2000;
  p.seed = 17;
  const Study study = generate_study(p);
  const Dataset rct = study.rct.to_dataset("rct");
  BootstrapPlan plan{static_cast<int>(state.range(0)), 3, 0.95};
  auto stat = [](const Dataset& d) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
      num += d.weight[i] * d.outcome[i];
      den += d.weight[i];
    }
    return num / den;
  };
  for (auto _ : state)
    benchmark::DoNotOptimize(cluster_bootstrap(stat, rct, plan));
}
BENCHMARK(BM_ClusterBootstrap)->Arg(200)->Arg(1000);

static void BM_SimulationCell(benchmark::State& state) {
  SimParams p;
  p.population_size = 30000;
  p.draw_size = 5000;
  p.seed = 21;
  const PipelineConfig pipeline;
  for (auto _ : state) benchmark::DoNotOptimize(run_cell(p, 1, pipeline));
}
BENCHMARK(BM_SimulationCell)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
