#include <benchmark/benchmark.h>

#include "dygie/numeric/tape.hpp"
#include "dygie/rng.hpp"

using dygie::Rng;
using dygie::numeric::Tape;
using dygie::numeric::Tensor;

namespace {

template <class S>
Tensor<S> random_matrix(int rows, int cols, uint64_t seed) {
  Rng rng(seed);
  Tensor<S> t({rows, cols});
  for (auto& v : t.data) v = static_cast<S>(rng.uniform(-1, 1));
  return t;
}

}  // namespace

static void BM_MatmulForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto a = random_matrix<float>(n, n, 1);
  auto b = random_matrix<float>(n, n, 2);
  for (auto _ : state) {
    Tape<float> tape;
    auto c = tape.matmul(tape.input(a), tape.input(b));
    benchmark::DoNotOptimize(tape.value(c).data.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * int64_t(n) * n * n);
}
BENCHMARK(BM_MatmulForward)->Arg(64)->Arg(256)->Arg(1024);

static void BM_MatmulBackward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto a = random_matrix<float>(n, n, 1);
  auto b = random_matrix<float>(n, n, 2);
  for (auto _ : state) {
    Tape<float> tape;
    auto va = tape.input(a, true);
    auto vb = tape.input(b, true);
    auto loss = tape.sum_all(tape.matmul(va, vb));
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.grad(va).data.data());
  }
  state.SetItemsProcessed(state.iterations() * 4 * int64_t(n) * n * n);
}
BENCHMARK(BM_MatmulBackward)->Arg(64)->Arg(256);

static void BM_SoftmaxRows(benchmark::State& state) {
  auto x = random_matrix<float>(512, static_cast<int>(state.range(0)), 3);
  for (auto _ : state) {
    Tape<float> tape;
    auto p = tape.softmax_row(tape.input(x));
    benchmark::DoNotOptimize(tape.value(p).data.data());
  }
}
BENCHMARK(BM_SoftmaxRows)->Arg(16)->Arg(256);

static void BM_SpanAttend(benchmark::State& state) {
  const int tokens = 60;
  auto scores = random_matrix<float>(tokens, 1, 4);
  auto values = random_matrix<float>(tokens, 400, 5);
  std::vector<std::pair<int, int>> ranges;
  for (int s = 0; s < tokens; ++s)
    for (int w = 1; w <= 8 && s + w <= tokens; ++w) ranges.emplace_back(s, s + w - 1);
  for (auto _ : state) {
    Tape<float> tape;
    auto out = tape.span_attend(tape.input(scores), tape.input(values), ranges);
    benchmark::DoNotOptimize(tape.value(out).data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(ranges.size()));
}
BENCHMARK(BM_SpanAttend);
