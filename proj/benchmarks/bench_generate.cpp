#include <benchmark/benchmark.h>

#include "bcg/model.hpp"
#include "bcg/validate.hpp"

namespace {

bcg::Model load(const char* name) { return bcg::load_model(std::string(BCG_FIXTURE_DIR) + "/" + name + ".json"); }

const char* const kNames[] = {"fig2", "coding", "kalman"};

void BM_generate(benchmark::State& st) {
  const bcg::Model m = load(kNames[st.range(0)]);
  for (auto _ : st) benchmark::DoNotOptimize(bcg::generate(m));
  st.SetLabel(kNames[st.range(0)]);
}
BENCHMARK(BM_generate)->DenseRange(0, 2);

void BM_generate_unoptimized(benchmark::State& st) {
  const bcg::Model m = load("kalman");
  bcg::OptOptions none;
  none.dce = none.fold = none.forward = false;
  for (auto _ : st) benchmark::DoNotOptimize(bcg::generate(m, {}, none));
}
BENCHMARK(BM_generate_unoptimized);

void BM_simulate(benchmark::State& st) {
  const bcg::Model m = bcg::prepare(load(kNames[st.range(0)]));
  const auto in = bcg::random_stimuli(m, 100, 1);
  for (auto _ : st) benchmark::DoNotOptimize(bcg::simulate(m, in));
  st.SetItemsProcessed(st.iterations() * 100);
  st.SetLabel(kNames[st.range(0)]);
}
BENCHMARK(BM_simulate)->DenseRange(0, 2);

void BM_interpret(benchmark::State& st) {
  const bcg::Model m = bcg::prepare(load(kNames[st.range(0)]));
  const auto in = bcg::random_stimuli(m, 100, 1);
  const bcg::Program p = bcg::generate(m).program;
  for (auto _ : st) benchmark::DoNotOptimize(bcg::run_generated(p, in));
  st.SetItemsProcessed(st.iterations() * 100);
  st.SetLabel(kNames[st.range(0)]);
}
BENCHMARK(BM_interpret)->DenseRange(0, 2);

}  // namespace

BENCHMARK_MAIN();
