#include <benchmark/benchmark.h>

#include <vector>

#include "onexn/bsr.hpp"
#include "onexn/exec.hpp"
#include "onexn/model_io.hpp"
#include "onexn/pattern.hpp"

namespace {

using namespace onexn;

// Shared fixture data: a rows x m activation and an n x m layer pruned with
// 1xN blocks at the requested rate.
struct Problem {
  Activation x;
  WeightTensor pruned;
  BsrLayer bsr;
  ConvParams conv;
};

Problem make_problem(std::size_t rows, std::size_t m, std::size_t n, std::size_t kernel,
                     std::size_t width, double rate) {
  std::vector<float> w(n * m * kernel * kernel);
  fill_uniform(w, 1);
  const WeightTensor dense({n, m, kernel, kernel}, std::move(w));
  const PruneResult r = prune_tensor(dense, PatternKind::kBlock1xN, width, rate);
  const ActivationShape shape =
      kernel == 1 ? ActivationShape{rows, 1, 1, m} : ActivationShape{1, rows, rows, m};
  std::vector<float> x(shape.elements());
  fill_uniform(x, 2);
  return {Activation(shape, std::move(x)), r.pruned, bsr_encode(r.pruned, *r.block_mask),
          {1, kernel / 2}};
}

// Args: rows, m, n, kernel, N, rate in permille.
Problem problem_for(const benchmark::State& state) {
  return make_problem(state.range(0), state.range(1), state.range(2), state.range(3),
                      state.range(4), state.range(5) / 1000.0);
}

void set_flops(benchmark::State& state, const Problem& p) {
  const double macs = static_cast<double>(p.x.shape().rows()) * p.pruned.size();
  state.counters["dense_GFLOPs"] =
      benchmark::Counter(2.0 * macs * state.iterations() / 1e9, benchmark::Counter::kIsRate);
}

void BM_Dense(benchmark::State& state) {
  const Problem p = problem_for(state);
  const DenseLayer layer(p.pruned);
  for (auto _ : state) benchmark::DoNotOptimize(dense_forward(p.x, layer, p.conv));
  set_flops(state, p);
}

void BM_Csr(benchmark::State& state) {
  const Problem p = problem_for(state);
  const CsrLayer layer(p.pruned);
  for (auto _ : state) benchmark::DoNotOptimize(csr_forward(p.x, layer, p.conv));
  set_flops(state, p);
}

void BM_Bsr(benchmark::State& state) {
  const Problem p = problem_for(state);
  for (auto _ : state) benchmark::DoNotOptimize(bsr_forward(p.x, p.bsr, p.conv));
  set_flops(state, p);
}

void gemm_args(benchmark::internal::Benchmark* b) {
  b->ArgNames({"rows", "m", "n", "k", "N", "p_permille"});
  for (int rate : {500, 750, 875, 938}) b->Args({256, 512, 512, 1, 4, rate});
  for (int width : {2, 8, 16, 32}) b->Args({256, 512, 512, 1, width, 875});
  b->Args({28, 64, 64, 3, 4, 750});
  b->Unit(benchmark::kMillisecond);
}

BENCHMARK(BM_Dense)->Apply(gemm_args);
BENCHMARK(BM_Csr)->Apply(gemm_args);
BENCHMARK(BM_Bsr)->Apply(gemm_args);

}  // namespace

BENCHMARK_MAIN();
