#include <benchmark/benchmark.h>

#include "dygie/corpus/synthetic.hpp"
#include "dygie/model/model.hpp"
#include "dygie/train/adam.hpp"

using namespace dygie;

namespace {

struct DocSetup {
  model::Config cfg;
  corpus::Document doc;
  corpus::EmbeddingTable vocab;
  model::ParamStore<float> params;

  DocSetup() {
    cfg.schema.entity_labels = {"T0", "T1", "T2", "T3"};
    cfg.schema.relation_labels = {"R0", "R1", "R2"};
    cfg.synthetic.gen.schema = cfg.schema;
    corpus::GenConfig gen;
    gen.num_docs = 1;
    gen.sentences_per_doc = 2;
    gen.tokens_per_sentence = 8;
    gen.nesting_rate = 0.5;
    gen.pronoun_rate = 1.0;
    gen.schema = cfg.schema;
    doc = corpus::generate_synthetic(gen, 3)[0];
    vocab = corpus::build_vocabulary({doc}, cfg.net.embedding_dim);
    params = model::init_params<float>(cfg, vocab.row_count(), 1);
  }
};

}  // namespace

static void BM_DocumentForward(benchmark::State& state) {
  DocSetup setup;
  model::Model<float> m(&setup.cfg, &setup.vocab, &setup.params);
  for (auto _ : state) {
    numeric::Tape<float> tape;
    auto fwd = m.forward(tape, setup.doc, /*train=*/false, /*with_loss=*/true, 0);
    benchmark::DoNotOptimize(tape.value(fwd.loss.total).data[0]);
  }
}
BENCHMARK(BM_DocumentForward);

static void BM_DocumentTrainStep(benchmark::State& state) {
  DocSetup setup;
  model::Model<float> m(&setup.cfg, &setup.vocab, &setup.params);
  train::Adam<float> adam(setup.params);
  uint64_t step = 0;
  for (auto _ : state) {
    numeric::Tape<float> tape;
    auto fwd = m.forward(tape, setup.doc, /*train=*/true, /*with_loss=*/true, step++);
    tape.backward(fwd.loss.total);
    std::map<std::string, const numeric::Tensor<float>*> grads;
    for (const auto& [name, var] : fwd.bound_params) {
      const auto& g = tape.grad(var);
      if (!g.data.empty()) grads.emplace(name, &g);
    }
    adam.apply(setup.params, grads, setup.cfg.train);
  }
}
BENCHMARK(BM_DocumentTrainStep);

static void BM_Predict(benchmark::State& state) {
  DocSetup setup;
  model::Model<float> m(&setup.cfg, &setup.vocab, &setup.params);
  for (auto _ : state) {
    auto pred = m.predict(setup.doc);
    benchmark::DoNotOptimize(pred.entities.size());
  }
}
BENCHMARK(BM_Predict);

BENCHMARK_MAIN();
