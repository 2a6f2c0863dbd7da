// Hot paths: environment steps, grammar sampling, the masked model, Gibbs
// sweeps, agent forward steps and full A2C updates.

#include <benchmark/benchmark.h>

#include "compgrid/agent.hpp"
#include "compgrid/analysis.hpp"
#include "compgrid/baselines.hpp"
#include "compgrid/env.hpp"
#include "compgrid/grammar.hpp"
#include "compgrid/nullgen.hpp"

using namespace compgrid;

namespace {

Board fixed_board() {
  Rng rng(1);
  return generate_board(Form::Tree, rng);
}

void BM_EnvRandomEpisode(benchmark::State& state) {
  const Board board = fixed_board();
  Rng rng(2);
  std::int64_t steps = 0;
  for (auto _ : state) {
    RevealState s = reset(board);
    while (!s.finished()) {
      benchmark::DoNotOptimize(apply(s, uniform_random_step(s, rng)));
      ++steps;
    }
  }
  state.counters["steps/s"] = benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_EnvRandomEpisode);

void BM_GenerateBoard(benchmark::State& state) {
  const Form form = kAllForms[static_cast<std::size_t>(state.range(0))];
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(generate_board(form, rng));
  state.SetLabel(std::string(to_string(form)));
}
BENCHMARK(BM_GenerateBoard)->DenseRange(0, static_cast<int>(kAllForms.size()) - 1);

void BM_MaskedConditional(benchmark::State& state) {
  const MaskedModel model = init_masked_model(4);
  const Board board = fixed_board();
  int tile = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(conditional(model, board.red, Pos::from_index(tile)));
    tile = (tile + 1) % kTileCount;
  }
}
BENCHMARK(BM_MaskedConditional);

void BM_GibbsSample(benchmark::State& state) {
  const MaskedModel model = init_masked_model(5);
  Rng rng(5);
  for (auto _ : state) benchmark::DoNotOptimize(gibbs_sample(model, static_cast<int>(state.range(0)), rng));
}
BENCHMARK(BM_GibbsSample)->Arg(1)->Arg(20)->Unit(benchmark::kMicrosecond);

void BM_IsingStats(benchmark::State& state) {
  const Board board = fixed_board();
  for (auto _ : state) benchmark::DoNotOptimize(ising_stats(board.red));
}
BENCHMARK(BM_IsingStats);

void BM_AgentAct(benchmark::State& state) {
  const AgentNet net = init_agent_net(static_cast<FrontEnd>(state.range(0)), 6);
  const RevealState s = reset(fixed_board());
  const Observation obs = encode_observation(s, -1, 0.0);
  const nn::LstmState h = nn::LstmState::zeros(kLstmUnits);
  Rng rng(6);
  for (auto _ : state) benchmark::DoNotOptimize(act(net, h, obs, rng, ActMode::Sample));
  state.SetLabel(std::string(to_string(net.front_end)));
}
BENCHMARK(BM_AgentAct)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_A2cUpdate(benchmark::State& state) {
  const AgentNet net = init_agent_net(FrontEnd::Dense, 7);
  const Board board = fixed_board();
  Rng rng(7);
  Rollout rollout;
  RevealState s = reset(board);
  int prev = -1;
  double prev_r = 0.0;
  for (int t = 0; t < state.range(0) && !s.finished(); ++t) {
    rollout.observations.push_back(encode_observation(s, prev, prev_r));
    const Pos p = uniform_random_step(s, rng);
    const int r = apply(s, p);
    rollout.actions.push_back(p.index());
    rollout.rewards.push_back(r);
    prev = p.index();
    prev_r = r;
  }
  const AgentConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(a2c_update(net, rollout, cfg, true));
  state.counters["steps"] = static_cast<double>(rollout.actions.size());
}
BENCHMARK(BM_A2cUpdate)->Arg(5)->Arg(20)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
