#include <benchmark/benchmark.h>

#include <vector>

#include "insample/agents.hpp"
#include "insample/harness.hpp"
#include "insample/operators.hpp"
#include "insample/solvers.hpp"

using namespace insample;

namespace {

void BM_LogSumExp(benchmark::State& state) {
  Rng rng = make_rng(0);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (double& x : v) x = 10 * uniform01(rng);
  for (auto _ : state) benchmark::DoNotOptimize(log_sum_exp(v));
}
BENCHMARK(BM_LogSumExp)->Arg(4)->Arg(64)->Arg(1024);

void BM_InSampleSoftBackup(benchmark::State& state) {
  const FourRooms env;
  const OfflineDataset data = make_recipe_dataset(env, "missing-action", 10000, 0);
  const EmpiricalBehavior b = estimate_behavior(data, env.n_states(), 4);
  const BackupKind kind =
      InSampleSoftMax{b.support(), Temperature(0.01), EmptySupport::BootstrapZero};
  const QTable q = QTable::constant(env.n_states(), 4, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(backup(env.mdp(), q, kind));
}
BENCHMARK(BM_InSampleSoftBackup);

void BM_HardValueIteration(benchmark::State& state) {
  const FourRooms env;
  const QTable zero = QTable::constant(env.n_states(), 4, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(value_iteration(env.mdp(), HardMax{}, zero, 1e-10));
}
BENCHMARK(BM_HardValueIteration)->Unit(benchmark::kMillisecond);

void BM_InACUpdate(benchmark::State& state) {
  const FourRooms env;
  const OfflineDataset data = make_recipe_dataset(env, "mixed", 10000, 0);
  TrainConfig config;
  InACAgent agent(env.n_states(), 4, env.mdp().gamma(), config);
  const std::vector<Transition> batch(data.transitions.begin(), data.transitions.begin() + 100);
  Rng rng = make_rng(1);
  for (auto _ : state) {
    agent.critic_update(batch);
    agent.baseline_update(batch, rng);
    agent.actor_update(batch);
    agent.update_targets();
  }
}
BENCHMARK(BM_InACUpdate)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
