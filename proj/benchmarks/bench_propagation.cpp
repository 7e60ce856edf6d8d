#include <benchmark/benchmark.h>

#include "dygie/graph/graph.hpp"
#include "dygie/rng.hpp"

using namespace dygie;

namespace {

struct Setup {
  model::Config cfg;
  model::ParamStore<float> params;
  numeric::Tensor<float> g0;
  graph::BeamSet beams;
  std::vector<std::pair<int, int>> ranges;

  Setup(int spans_per_sentence, int sentences, int b_c, int b_r) {
    cfg.schema.entity_labels = {"T0", "T1", "T2", "T3"};
    cfg.schema.relation_labels = {"R0", "R1", "R2"};
    cfg.graph.N = 2;
    cfg.graph.M = 2;
    params = model::init_params<float>(cfg, 64, 1);
    const int total = spans_per_sentence * sentences;
    Rng rng(7);
    g0 = numeric::Tensor<float>({total, cfg.span_dim()});
    for (auto& v : g0.data) v = static_cast<float>(rng.uniform(-1, 1));
    for (int i = 0; i < b_c; ++i) beams.coref.push_back(i * (total / b_c));
    beams.coref_candidates.resize(b_c);
    for (int i = 0; i < b_c; ++i)
      for (int j = std::max(0, i - cfg.graph.K); j < i; ++j)
        beams.coref_candidates[i].push_back(j);
    for (int s = 0; s < sentences; ++s) {
      std::vector<int> beam;
      for (int i = 0; i < b_r; ++i) beam.push_back(s * spans_per_sentence + i);
      beams.relation.push_back(std::move(beam));
      ranges.emplace_back(s * spans_per_sentence, (s + 1) * spans_per_sentence);
    }
  }
};

}  // namespace

static void BM_Propagate(benchmark::State& state) {
  Setup setup(36, 3, static_cast<int>(state.range(0)), 4);
  for (auto _ : state) {
    numeric::Tape<float> tape;
    model::ParamBank<float> bank(tape, setup.params);
    model::DropoutCtx ctx;
    graph::Propagator<float> prop(bank, setup.cfg, ctx);
    auto result = prop.propagate(tape.input(setup.g0), setup.beams, setup.ranges);
    benchmark::DoNotOptimize(tape.value(result.g_final).data.data());
  }
}
BENCHMARK(BM_Propagate)->Arg(4)->Arg(8)->Arg(16);

static void BM_PropagateBackward(benchmark::State& state) {
  Setup setup(36, 3, static_cast<int>(state.range(0)), 4);
  for (auto _ : state) {
    numeric::Tape<float> tape;
    model::ParamBank<float> bank(tape, setup.params);
    model::DropoutCtx ctx;
    graph::Propagator<float> prop(bank, setup.cfg, ctx);
    auto g0 = tape.input(setup.g0, true);
    auto result = prop.propagate(g0, setup.beams, setup.ranges);
    auto loss = tape.sum_all(tape.mul(result.g_final, result.g_final));
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.grad(g0).data.data());
  }
}
BENCHMARK(BM_PropagateBackward)->Arg(4)->Arg(8);
