#include <benchmark/benchmark.h>

#include <vector>

#include "dnfpipe/pipeline.hpp"
#include "dnfpipe/templates.hpp"

using namespace dnfpipe;

namespace {

PipelineConfig bench_config() { return apply_bias_shift(PipelineConfig{}); }

const ClassifierWeights& bench_weights() {
  static const ClassifierWeights w = generate_template_weights(bench_config());
  return w;
}

// One 80x80 LIF population with a quarter of its neurons driven.
void BM_PopulationStep(benchmark::State& state) {
  Population pop({80, 80}, NeuronModel::LIF, bench_config().selective.field);
  std::vector<double> a(pop.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); i += 4) a[i] = 40.0;
  for (auto _ : state) benchmark::DoNotOptimize(pop.step(a).data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pop.size()));
}
BENCHMARK(BM_PopulationStep);

// Selective field with its kernel and inhibitor under a steady input disc.
void BM_SelectiveFieldStep(benchmark::State& state) {
  const PipelineConfig cfg = bench_config();
  Network net;
  const PopId input = net.add_population("input", source_population(cfg.selective.shape));
  const SelectiveDnf sel = build_selective_dnf(net, cfg.selective);
  net.add_projection({"input->selective", input, sel.field, 1,
                      SparseWeights::one_to_one(cfg.selective.shape.size(), cfg.w_input_to_selective)});
  for (auto _ : state) {
    for (std::size_t r = 18; r < 23; ++r)
      for (std::size_t c = 18; c < 23; ++c) net.inject_at(input, r * 80 + c, 1.0);
    net.step();
  }
  state.counters["synops/step"] =
      benchmark::Counter(static_cast<double>(net.total_synops()) / static_cast<double>(state.iterations()));
}
BENCHMARK(BM_SelectiveFieldStep);

// Whole pipeline from a fresh start; range(0) steps per iteration, assembly untimed.
void BM_PipelineSteps(benchmark::State& state) {
  const auto steps = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    state.PauseTiming();
    PipelineState st = assemble_pipeline(bench_config(), bench_weights());
    state.ResumeTiming();
    for (std::uint64_t t = 0; t < steps && !st.done(); ++t) st.step();
    benchmark::DoNotOptimize(st.report().total_spikes);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PipelineSteps)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_TemplateGeneration(benchmark::State& state) {
  const PipelineConfig cfg = bench_config();
  for (auto _ : state) benchmark::DoNotOptimize(generate_template_weights(cfg).layers.size());
}
BENCHMARK(BM_TemplateGeneration)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
