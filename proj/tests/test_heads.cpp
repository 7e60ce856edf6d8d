#include <doctest.h>

#include <cmath>

#include "dygie/heads/heads.hpp"
#include "dygie/model/model.hpp"
#include "test_util.hpp"

using namespace dygie;
using numeric::Tape;
using numeric::Tensor;

namespace {

struct HeadsFixture {
  model::Config cfg;
  model::ParamStore<double> params;
  Tape<double> tape;
  model::ParamBank<double> bank;
  model::DropoutCtx ctx;

  HeadsFixture(int n_ent, int n_rel, uint64_t seed, bool zero = false)
      : cfg(testutil::tiny_config(n_ent, n_rel)),
        params(model::init_params<double>(cfg, 6, seed)),
        bank(tape, params) {
    if (zero) testutil::zero_store(params);
  }

  Tensor<double> random_g(int rows, uint64_t seed) {
    Rng rng(seed);
    Tensor<double> g({rows, cfg.span_dim()});
    for (auto& v : g.data) v = rng.uniform(-1, 1);
    return g;
  }
};

}  // namespace

TEST_CASE("zero-weight entity head is uniform over null plus 7 labels") {
  HeadsFixture fx(7, 2, 1, /*zero=*/true);
  auto g = fx.tape.input(fx.random_g(4, 2));
  auto p = fx.tape.value(heads::entity_distribution(fx.bank, g, fx.cfg, fx.ctx, 0));
  REQUIRE(p.cols() == 8);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 8; ++c) CHECK(p.at(r, c) == doctest::Approx(1.0 / 8).epsilon(1e-12));
}

TEST_CASE("single label with logit ln3 gives null 0.25") {
  HeadsFixture fx(1, 1, 1, /*zero=*/true);
  fx.params.get("head.entity.b2").at(0, 0) = std::log(3.0);
  auto g = fx.tape.input(fx.random_g(2, 3));
  auto p = fx.tape.value(heads::entity_distribution(fx.bank, g, fx.cfg, fx.ctx, 0));
  for (int r = 0; r < 2; ++r) {
    CHECK(p.at(r, 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p.at(r, 1) == doctest::Approx(0.75).epsilon(1e-12));
  }
}

TEST_CASE("entity distribution matches the scalar softmax oracle") {
  HeadsFixture fx(3, 2, 9);
  testutil::randomize_store(fx.params, 10);
  auto gt = fx.random_g(5, 11);
  auto p = fx.tape.value(heads::entity_distribution(fx.bank, fx.tape.input(gt), fx.cfg, fx.ctx, 0));
  for (int r = 0; r < 5; ++r) {
    std::vector<double> x(fx.cfg.span_dim());
    for (int c = 0; c < fx.cfg.span_dim(); ++c) x[c] = gt.at(r, c);
    auto logits = testutil::ffnn_oracle(fx.params, "head.entity", x);
    logits.insert(logits.begin(), 0.0);
    auto want = testutil::softmax_oracle(logits);
    for (int c = 0; c < 4; ++c) CHECK(p.at(r, c) == doctest::Approx(want[c]).epsilon(1e-10));
  }
}

TEST_CASE("zero-weight relation head is uniform over null plus 6 labels") {
  HeadsFixture fx(3, 6, 1, /*zero=*/true);
  auto g = fx.tape.input(fx.random_g(3, 5));
  auto p = fx.tape.value(heads::relation_distribution(fx.bank, g, fx.cfg, fx.ctx, 0));
  REQUIRE(p.cols() == 7);
  REQUIRE(p.rows() == 9);
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 7; ++c) CHECK(p.at(r, c) == doctest::Approx(1.0 / 7).epsilon(1e-12));
}

TEST_CASE("relation head treats pairs as ordered") {
  HeadsFixture fx(3, 2, 21);
  testutil::randomize_store(fx.params, 22);
  auto g = fx.tape.input(fx.random_g(2, 23));
  auto p = fx.tape.value(heads::relation_distribution(fx.bank, g, fx.cfg, fx.ctx, 0));
  // rows: 0 = (0,0), 1 = (0,1), 2 = (1,0), 3 = (1,1)
  double diff = 0;
  for (int c = 0; c < p.cols(); ++c) diff += std::fabs(p.at(1, c) - p.at(2, c));
  CHECK(diff > 1e-6);
}

TEST_CASE("coref distributions: no candidates, single zero-score candidate") {
  HeadsFixture fx(3, 2, 31, /*zero=*/true);
  graph::Propagator<double> prop(fx.bank, fx.cfg, fx.ctx);
  graph::BeamSet beams;
  beams.coref = {0, 1};
  beams.coref_candidates = {{}, {0}};
  auto g = fx.tape.input(fx.random_g(4, 32));
  auto dists = heads::coref_distributions(prop, g, beams, 0);
  REQUIRE(dists.dist.size() == 2);
  auto p0 = fx.tape.value(dists.dist[0]);
  REQUIRE(p0.cols() == 1);
  CHECK(p0.at(0, 0) == 1.0);  // epsilon only
  // zero parameters make V(1, 0) = 0, so [eps, cand] = [0.5, 0.5]
  auto p1 = fx.tape.value(dists.dist[1]);
  REQUIRE(p1.cols() == 2);
  CHECK(p1.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p1.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("coref distributions match a scalar oracle on random inputs") {
  HeadsFixture fx(3, 2, 41);
  testutil::randomize_store(fx.params, 42);
  graph::Propagator<double> prop(fx.bank, fx.cfg, fx.ctx);
  graph::BeamSet beams;
  const int b = 4;
  for (int i = 0; i < b; ++i) beams.coref.push_back(i);
  beams.coref_candidates.resize(b);
  for (int i = 0; i < b; ++i)
    for (int j = std::max(0, i - fx.cfg.graph.K); j < i; ++j)
      beams.coref_candidates[i].push_back(j);
  auto gt = fx.random_g(b, 43);
  auto dists = heads::coref_distributions(prop, fx.tape.input(gt), beams, 0);

  auto row_of = [&](int i) {
    std::vector<double> r(fx.cfg.span_dim());
    for (int c = 0; c < fx.cfg.span_dim(); ++c) r[c] = gt.at(i, c);
    return r;
  };
  for (int i = 1; i < b; ++i) {
    std::vector<double> scores{0.0};  // epsilon
    for (int j : beams.coref_candidates[i]) {
      auto gi = row_of(i), gj = row_of(j);
      std::vector<double> triple = gi;
      triple.insert(triple.end(), gj.begin(), gj.end());
      for (int c = 0; c < fx.cfg.span_dim(); ++c) triple.push_back(gi[c] * gj[c]);
      double v = testutil::ffnn_oracle(fx.params, "coref.pair", triple)[0] +
                 testutil::ffnn_oracle(fx.params, "coref.unary", gi)[0] +
                 testutil::ffnn_oracle(fx.params, "coref.unary", gj)[0];
      scores.push_back(v);
    }
    auto want = testutil::softmax_oracle(scores);
    auto got = fx.tape.value(dists.dist[i]);
    REQUIRE(got.cols() == static_cast<int>(want.size()));
    for (size_t c = 0; c < want.size(); ++c)
      CHECK(got.at(0, static_cast<int>(c)) == doctest::Approx(want[c]).epsilon(1e-9));
  }
}

TEST_CASE("all distributions are nonnegative and sum to one") {
  HeadsFixture fx(4, 3, 51);
  testutil::randomize_store(fx.params, 52);
  auto g = fx.tape.input(fx.random_g(6, 53));
  auto pe = fx.tape.value(heads::entity_distribution(fx.bank, g, fx.cfg, fx.ctx, 0));
  auto pr = fx.tape.value(heads::relation_distribution(fx.bank, g, fx.cfg, fx.ctx, 1));
  for (const auto& p : {pe, pr})
    for (int r = 0; r < p.rows(); ++r) {
      double sum = 0;
      for (int c = 0; c < p.cols(); ++c) {
        CHECK(p.at(r, c) >= 0.0);
        sum += p.at(r, c);
      }
      CHECK(std::fabs(sum - 1.0) <= 1e-9);
    }
}

// Builds a full forward over the toy document and returns the loss pieces.
namespace {
struct LossSetup {
  model::Config cfg;
  corpus::Document doc;
  corpus::EmbeddingTable vocab;
  model::ParamStore<double> params;

  explicit LossSetup(double lE = 1, double lR = 1, double lC = 1) : cfg(testutil::tiny_config()) {
    cfg.loss = {lE, lR, lC};
    doc = testutil::small_doc();
    vocab = corpus::build_vocabulary({doc}, cfg.net.embedding_dim);
    params = model::init_params<double>(cfg, vocab.row_count(), 3);
  }
};
}  // namespace

TEST_CASE("zero task weights give zero loss") {
  LossSetup setup(0, 0, 0);
  model::Model<double> m(&setup.cfg, &setup.vocab, &setup.params);
  Tape<double> tape;
  auto fwd = m.forward(tape, setup.doc, false, true, 0);
  CHECK(tape.value(fwd.loss.total).data[0] == 0.0);
}

TEST_CASE("uniform entity distribution over 8 classes costs ln 8 per span") {
  // one span only: a one-token sentence, zero parameters, 7 entity labels
  model::Config cfg = testutil::tiny_config(7, 2);
  cfg.net.max_span_width = 1;
  cfg.loss = {1, 0, 0};
  corpus::Document doc;
  doc.doc_id = "one";
  doc.sentences = {{"a"}};
  doc.finalize();
  auto vocab = corpus::build_vocabulary({doc}, cfg.net.embedding_dim);
  auto params = model::init_params<double>(cfg, vocab.row_count(), 1);
  testutil::zero_store(params);
  model::Model<double> m(&cfg, &vocab, &params);
  Tape<double> tape;
  auto fwd = m.forward(tape, doc, false, true, 0);
  CHECK(tape.value(fwd.loss.total).data[0] == doctest::Approx(std::log(8.0)).epsilon(1e-12));
}

TEST_CASE("joint loss matches an independent scalar recomputation") {
  LossSetup setup(0.7, 1.3, 0.9);
  model::Model<double> m(&setup.cfg, &setup.vocab, &setup.params);
  Tape<double> tape;
  auto fwd = m.forward(tape, setup.doc, false, true, 0);
  REQUIRE(fwd.has_loss);

  const auto& schema = setup.cfg.schema;
  // entity term from the extracted distribution values
  double want_entity = 0;
  auto pe = tape.value(fwd.entity_probs);
  for (size_t i = 0; i < fwd.spans.size(); ++i) {
    int target = 0;
    for (const auto& e : setup.doc.entities)
      if (e.span == fwd.spans[i]) {
        target = 1 + schema.entity_index(e.label);
        break;
      }
    want_entity += -std::log(pe.at(static_cast<int>(i), target));
  }
  CHECK(tape.value(fwd.loss.entity).data[0] == doctest::Approx(want_entity).epsilon(1e-10));

  // relation term over ordered beam pairs
  double want_rel = 0;
  int dropped = 0;
  for (size_t s = 0; s < fwd.sentence_ranges.size(); ++s) {
    const auto& beam = fwd.beams.relation[s];
    auto pr = tape.value(fwd.relation_probs[s]);
    const int b = static_cast<int>(beam.size());
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j) {
        if (i == j) continue;
        int target = 0;
        for (const auto& r : setup.doc.relations)
          if (r.arg1 == fwd.spans[beam[i]] && r.arg2 == fwd.spans[beam[j]])
            target = 1 + schema.relation_index(r.label);
        want_rel += -std::log(pr.at(i * b + j, target));
      }
  }
  for (const auto& r : setup.doc.relations) {
    bool found = false;
    for (size_t s = 0; s < fwd.beams.relation.size(); ++s) {
      const auto& beam = fwd.beams.relation[s];
      bool has1 = false, has2 = false;
      for (int idx : beam) {
        if (fwd.spans[idx] == r.arg1) has1 = true;
        if (fwd.spans[idx] == r.arg2) has2 = true;
      }
      if (has1 && has2) found = true;
    }
    if (!found) ++dropped;
  }
  CHECK(tape.value(fwd.loss.relation).data[0] == doctest::Approx(want_rel).epsilon(1e-10));
  CHECK(fwd.loss.dropped_gold_relations == dropped);

  // coref term: marginalized over gold cluster mates among candidates
  double want_coref = 0;
  for (size_t i = 0; i < fwd.coref.dist.size(); ++i) {
    auto pc = tape.value(fwd.coref.dist[i]);
    const auto& span_i = fwd.spans[fwd.beams.coref[i]];
    const auto& cands = fwd.beams.coref_candidates[i];
    int my_cluster = -1;
    for (size_t c = 0; c < setup.doc.clusters.size(); ++c)
      for (const auto& sp : setup.doc.clusters[c])
        if (sp == span_i) my_cluster = static_cast<int>(c);
    double p_gold = 0;
    bool any = false;
    for (size_t k = 0; k < cands.size(); ++k) {
      const auto& span_j = fwd.spans[fwd.beams.coref[cands[k]]];
      bool mate = false;
      if (my_cluster >= 0)
        for (const auto& sp : setup.doc.clusters[my_cluster])
          if (sp == span_j) mate = true;
      if (mate) {
        p_gold += pc.at(0, 1 + static_cast<int>(k));
        any = true;
      }
    }
    if (!any) p_gold = pc.at(0, 0);
    want_coref += -std::log(p_gold);
  }
  CHECK(tape.value(fwd.loss.coref).data[0] == doctest::Approx(want_coref).epsilon(1e-10));

  double want_total = 0.7 * want_entity + 1.3 * want_rel + 0.9 * want_coref;
  CHECK(tape.value(fwd.loss.total).data[0] == doctest::Approx(want_total).epsilon(1e-10));
  CHECK(tape.value(fwd.loss.total).data[0] >= 0.0);
}

TEST_CASE("adding a gold antecedent never increases the coref term") {
  Tape<double> tape;
  auto dist = tape.input(Tensor<double>::row({0.2, 0.5, 0.3}));
  Tensor<double> narrow({1, 3});
  narrow.at(0, 1) = 1;
  Tensor<double> wide({1, 3});
  wide.at(0, 1) = 1;
  wide.at(0, 2) = 1;
  auto loss_narrow = -std::log(0.5);
  auto loss_wide = -std::log(0.8);
  CHECK(loss_wide <= loss_narrow);
  // and through the tape ops used by the implementation
  auto nll = [&](Tensor<double> sel) {
    auto gold = tape.sum(tape.mul(dist, tape.constant(std::move(sel))), 1);
    return tape.value(tape.scale(tape.sum_all(tape.log(gold)), -1.0)).data[0];
  };
  CHECK(nll(wide) <= nll(narrow));
}

TEST_CASE("decoding breaks ties toward null and lower label index") {
  model::Config cfg = testutil::tiny_config(2, 2);
  corpus::Document doc;
  doc.doc_id = "tie";
  doc.sentences = {{"a"}};
  doc.finalize();
  graph::BeamSet beams;
  beams.coref = {0};
  beams.coref_candidates = {{}};
  beams.relation = {{0}};
  std::vector<corpus::Span> spans{{0, 0, 0}};
  Tensor<double> pe({1, 3});
  pe.at(0, 0) = 0.4;
  pe.at(0, 1) = 0.4;  // tie with null -> null wins
  pe.at(0, 2) = 0.2;
  auto pred = heads::decode<double>(doc, spans, beams, pe, {Tensor<double>({1, 3})},
                                    {Tensor<double>::row({1.0})}, cfg);
  CHECK(pred.entities.empty());
  CHECK(pred.antecedents.size() == 1);
  CHECK_FALSE(pred.antecedents[0].second.has_value());

  pe.at(0, 2) = 0.5;  // clear winner: label index 1
  auto pred2 = heads::decode<double>(doc, spans, beams, pe, {Tensor<double>({1, 3})},
                                     {Tensor<double>::row({1.0})}, cfg);
  REQUIRE(pred2.entities.size() == 1);
  CHECK(pred2.entities[0].second == "T1");
}
