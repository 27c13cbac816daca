// Microbenchmarks for the three attention kernels over (batch, length).
// Counters report dot products and transient bytes per iteration.

#include <benchmark/benchmark.h>

#include "higenet/bench.hpp"

namespace {

using higenet::BenchKernel;

template <BenchKernel Kernel>
void attention(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto length = static_cast<std::size_t>(state.range(1));
  constexpr std::size_t heads = 8, dims = 64;
  higenet::Rng rng(0);
  const auto inputs = higenet::AttentionInputs::random(batch, length, heads, dims, rng);
  const auto weights = higenet::ImportanceWeights::random(heads, heads * dims, rng);
  higenet::Buffer out(inputs.elements());
  higenet::KernelRun last;
  for (auto _ : state) {
    last = higenet::run_attention_kernel(Kernel, inputs, weights, 5.0, rng, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["dot_products"] = static_cast<double>(last.budget.dot_products);
  state.counters["peak_bytes"] = static_cast<double>(last.peak_bytes);
}

void grid(benchmark::internal::Benchmark* b) {
  for (std::int64_t batch : {1, 16})
    for (std::int64_t length : {64, 256, 1024}) b->Args({batch, length});
  b->ArgNames({"batch", "L"})->Unit(benchmark::kMillisecond);
}

BENCHMARK(attention<BenchKernel::canonical>)->Name("canonical")->Apply(grid);
BENCHMARK(attention<BenchKernel::prob_sparse>)->Name("prob_sparse")->Apply(grid);
BENCHMARK(attention<BenchKernel::neural_sparse>)->Name("neural_sparse")->Apply(grid);

}  // namespace
BENCHMARK_MAIN();
