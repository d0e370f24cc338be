#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

#include "rlip/forward_models.hpp"
#include "rlip/mdp.hpp"
#include "rlip/policy.hpp"
#include "rlip/random.hpp"
#include "rlip/reinforce.hpp"

namespace {

rlip::Vector bump(int d) {
  rlip::Vector x(d);
  for (int i = 0; i < d; ++i) {
    const double s = static_cast<double>(i) / (d - 1);
    x[i] = std::sin(3.14159265358979 * s) + 0.2;
  }
  return x;
}

void BM_AutoconvForward(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const rlip::AutoConvModel model(d);
  const rlip::Vector x = bump(d);
  for (auto _ : state) {
    rlip::Vector y = model.eval(x);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_AutoconvForward)->Arg(16)->Arg(64)->Arg(256);

void BM_MlpScore(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int horizon = 10;
  rlip::MlpPolicy policy(rlip::MlpArchitecture::for_state(d, {d, d, d}));
  policy.init_glorot(1);
  rlip::Rng rng = rlip::make_stream(2);
  std::normal_distribution<double> normal;
  rlip::Matrix states(d, horizon);
  rlip::Matrix actions(d, horizon);
  for (Eigen::Index i = 0; i < states.size(); ++i) {
    states.data()[i] = normal(rng);
    actions.data()[i] = normal(rng);
  }
  rlip::Vector g = rlip::Vector::Zero(policy.param_count());
  for (auto _ : state) {
    policy.accumulate_score_sum(states, actions, 1.0, g);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * horizon);
}
BENCHMARK(BM_MlpScore)->Arg(16)->Arg(64);

void BM_TrajectoryBatch(benchmark::State& state) {
  const int d = 16;
  const int count = static_cast<int>(state.range(0));
  auto model = std::make_shared<rlip::AutoConvModel>(d);
  rlip::RewardSpec spec;
  spec.alpha = 0.2;
  spec.regularizer = rlip::Regularizer::BoundaryAbs;
  const rlip::RewardEnv env(model, rlip::single_observation(model->eval(bump(d))), spec);
  rlip::MlpPolicy policy(rlip::MlpArchitecture::for_state(d, {32, 32, 32}, 3, 0.05));
  policy.init_glorot(1);
  const auto init = rlip::InitStateDist::fixed(rlip::Vector::Constant(d, 0.01));
  std::uint64_t n = 0;
  for (auto _ : state) {
    const auto batch = rlip::generate_batch(policy, init, 10, count, env, {3, rlip::stream::kTraining, n++}, 1);
    const rlip::Vector g = rlip::estimate_gradient(policy, batch, 1);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * count);
}
BENCHMARK(BM_TrajectoryBatch)->Arg(128)->Arg(1000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
