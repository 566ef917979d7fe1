#include <benchmark/benchmark.h>

#include <random>

#include "manidialog/actions.hpp"
#include "manidialog/eval.hpp"
#include "manidialog/toymodel.hpp"

using namespace manidialog;

namespace {

const std::string kSequence = "grasp(apple); confirm(grasp(knife); grasp(scissors); respond); respond";

void BM_ParseActions(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(parse_actions(kSequence));
}
BENCHMARK(BM_ParseActions);

void BM_SerializeActions(benchmark::State& state) {
  const ActionSequence s = parse_actions(kSequence);
  for (auto _ : state) benchmark::DoNotOptimize(serialize_actions(s));
}
BENCHMARK(BM_SerializeActions);

toy::TrainingExample example(int vocab, int length, std::mt19937_64& rng) {
  toy::TrainingExample ex;
  ex.tokens.push_back(1);
  for (int i = 1; i < length; ++i) ex.tokens.push_back(static_cast<int>(rng() % static_cast<unsigned>(vocab)));
  ex.action_mask.assign(ex.tokens.size(), false);
  ex.response_mask.assign(ex.tokens.size(), false);
  for (int i = length / 2; i < 3 * length / 4; ++i) ex.action_mask[static_cast<std::size_t>(i)] = true;
  for (int i = 3 * length / 4; i < length; ++i) ex.response_mask[static_cast<std::size_t>(i)] = true;
  return ex;
}

// args: vocabulary size, sequence length
void BM_ToyLossAndGradient(benchmark::State& state) {
  const int vocab = static_cast<int>(state.range(0));
  const int length = static_cast<int>(state.range(1));
  std::mt19937_64 rng(1);
  const auto params = toy::ModelParams::random({vocab, 24, 64}, 1);
  std::vector<toy::TrainingExample> batch;
  for (int i = 0; i < 16; ++i) batch.push_back(example(vocab, length, rng));
  for (auto _ : state) benchmark::DoNotOptimize(toy::loss_and_gradient(params, batch, 1.0));
  state.SetItemsProcessed(state.iterations() * 16 * length);
}
BENCHMARK(BM_ToyLossAndGradient)->Args({200, 64})->Args({800, 64})->Args({800, 256})->Unit(benchmark::kMillisecond);

void BM_OracleSuite(benchmark::State& state) {
  const std::string dir = MANIDIALOG_BENCH_DATA_DIR;
  const ScenarioStore store(load_scenarios(dir + "/scenarios.json"));
  const auto cases = load_suite(dir + "/suite.jsonl", store);
  OracleBackend oracle;
  SuiteOptions opt;
  opt.parallelism = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_single_turn_suite(oracle, store, cases, opt));
}
BENCHMARK(BM_OracleSuite)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
