#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dygie/graph/graph.hpp"
#include "test_util.hpp"

using namespace dygie;
using graph::BeamSet;
using graph::beam_size;
using graph::kScoreMask;
using graph::Propagator;
using graph::prune_top_k;
using numeric::Tape;
using numeric::Tensor;

namespace {

// Everything a propagation test needs: a tape, bound params, a Propagator
// and a random beam matrix.
struct Fixture {
  model::Config cfg;
  model::ParamStore<double> params;
  Tape<double> tape;
  model::ParamBank<double> bank;
  model::DropoutCtx ctx;
  Propagator<double> prop;

  explicit Fixture(uint64_t seed, int n_rel = 2, bool zero = false)
      : cfg(testutil::tiny_config(3, n_rel)),
        params(model::init_params<double>(cfg, 6, seed)),
        bank(tape, params),
        prop(bank, cfg, ctx) {
    if (zero)
      testutil::zero_store(params);
    else
      testutil::randomize_store(params, seed);
  }

  Tensor<double> random_g(int rows, uint64_t seed) {
    Rng rng(seed);
    Tensor<double> g({rows, cfg.span_dim()});
    for (auto& v : g.data) v = rng.uniform(-1, 1);
    return g;
  }

  static BeamSet contiguous_beam(int b, int K) {
    BeamSet beams;
    for (int i = 0; i < b; ++i) beams.coref.push_back(i);
    beams.coref_candidates.resize(b);
    for (int i = 0; i < b; ++i)
      for (int j = std::max(0, i - K); j < i; ++j) beams.coref_candidates[i].push_back(j);
    return beams;
  }
};

}  // namespace

TEST_CASE("beam sizes follow the ceiling rule") {
  CHECK(beam_size(0.3, 10, 100) == 3);   // ceil(3.0) exactly
  CHECK(beam_size(0.4, 5, 100) == 2);    // 0.4*5 is an exact 2 despite fp noise
  CHECK(beam_size(0.3, 11, 100) == 4);   // ceil(3.3)
  CHECK(beam_size(1.0, 7, 100) == 7);
  CHECK(beam_size(0.5, 3, 2) == 2);      // capped at span count
  CHECK(beam_size(0.01, 5, 100) == 1);   // at least one
}

TEST_CASE("pruning keeps the top scores with first-index ties") {
  // all equal: the first b in order
  CHECK(prune_top_k({1, 1, 1, 1, 1}, 3) == std::vector<int>{0, 1, 2});
  // mixed, returned in index order
  CHECK(prune_top_k({0.1, 5.0, -2.0, 5.0, 0.3}, 2) == std::vector<int>{1, 3});
  CHECK(prune_top_k({0.1, 5.0, -2.0, 5.0, 0.3}, 3) == std::vector<int>{1, 3, 4});
}

TEST_CASE("pruning matches a full-sort oracle on random scores") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + rng.below(40);
    int b = 1 + rng.below(n);
    std::vector<double> scores(n);
    for (auto& s : scores) s = rng.below(8) * 0.25;  // deliberate ties
    auto got = prune_top_k(scores, b);

    // oracle: full sort by (score desc, index asc), take b, sort ascending
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int c) {
      if (scores[a] != scores[c]) return scores[a] > scores[c];
      return a < c;
    });
    order.resize(b);
    std::sort(order.begin(), order.end());
    CHECK(got == order);
  }
}

TEST_CASE("coref scores: first row zeroed, rows softmax over valid slots") {
  Fixture fx(5);
  const int b = 5;
  auto g = fx.tape.input(fx.random_g(b, 77));
  auto beams = Fixture::contiguous_beam(b, fx.cfg.graph.K);
  auto scores = fx.prop.coref_scores(g, beams, 0);
  const auto& v = fx.tape.value(scores.v);
  const auto& p = fx.tape.value(scores.p);
  for (int j = 0; j < b; ++j) CHECK(p.at(0, j) == 0.0);  // no antecedents
  for (int i = 1; i < b; ++i) {
    double sum = 0;
    for (int j = 0; j < b; ++j) {
      CHECK(p.at(i, j) >= 0.0);
      if (j >= i) CHECK(p.at(i, j) == 0.0);  // only earlier beam elements
      sum += p.at(i, j);
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-9);
    // scalar exp / sum-exp recomputation over the valid slots
    double mx = -1e30;
    for (int j = 0; j < i; ++j) mx = std::max(mx, v.at(i, j));
    double z = 0;
    for (int j = 0; j < i; ++j) z += std::exp(v.at(i, j) - mx);
    for (int j = 0; j < i; ++j)
      CHECK(std::fabs(p.at(i, j) - std::exp(v.at(i, j) - mx) / z) <= 1e-12);
  }
}

TEST_CASE("softmax of [ln2, 0] is [2/3, 1/3]") {
  Tape<double> tape;
  auto p = tape.value(tape.softmax_row(tape.input(Tensor<double>::row({std::log(2.0), 0.0}))));
  CHECK(p.at(0, 0) == doctest::Approx(2.0 / 3).epsilon(1e-14));
  CHECK(p.at(0, 1) == doctest::Approx(1.0 / 3).epsilon(1e-14));
}

TEST_CASE("coref update: single antecedent copies it, symmetric pair cancels") {
  Fixture fx(6);
  const int d = fx.cfg.span_dim();
  // b = 2: element 1 has exactly one antecedent, so u(1) = g(0)
  auto g = fx.tape.input(fx.random_g(2, 5));
  auto beams = Fixture::contiguous_beam(2, fx.cfg.graph.K);
  auto scores = fx.prop.coref_scores(g, beams, 0);
  auto u = fx.tape.value(fx.prop.coref_update(scores, g));
  const auto& gv = fx.tape.value(g);
  for (int c = 0; c < d; ++c) CHECK(u.at(1, c) == doctest::Approx(gv.at(0, c)).epsilon(1e-12));

  // hand-built P = [0.5, 0.5] against g_j = v, g_k = -v
  Tape<double> tape;
  Tensor<double> p({3, 3});
  p.at(2, 0) = 0.5;
  p.at(2, 1) = 0.5;
  Tensor<double> gm({3, 4});
  for (int c = 0; c < 4; ++c) {
    gm.at(0, c) = 1.0 + c;
    gm.at(1, c) = -(1.0 + c);
  }
  auto uv = tape.value(tape.matmul(tape.input(p), tape.input(gm)));
  for (int c = 0; c < 4; ++c) CHECK(uv.at(2, c) == 0.0);
}

TEST_CASE("coref update matches the naive loop oracle") {
  for (int trial = 0; trial < 100; ++trial) {
    Fixture fx(300 + trial);
    int b = 2 + trial % 7;  // up to 8
    auto g = fx.tape.input(fx.random_g(b, 1000 + trial));
    auto beams = Fixture::contiguous_beam(b, fx.cfg.graph.K);
    auto scores = fx.prop.coref_scores(g, beams, 0);
    auto u = fx.tape.value(fx.prop.coref_update(scores, g));
    const auto& p = fx.tape.value(scores.p);
    const auto& gv = fx.tape.value(g);
    for (int i = 0; i < b; ++i)
      for (int c = 0; c < fx.cfg.span_dim(); ++c) {
        double want = 0;
        for (int j = 0; j < b; ++j) want += p.at(i, j) * gv.at(j, c);
        CHECK(std::fabs(u.at(i, c) - want) <= 1e-12);
      }
  }
}

TEST_CASE("relation scores are asymmetric and match a scalar FFNN oracle") {
  Fixture fx(8);
  const int b = 3, n_rel = fx.cfg.relation_label_count();
  auto gt = fx.random_g(b, 21);
  auto g = fx.tape.input(gt);
  auto v = fx.tape.value(fx.prop.relation_scores(g, 0));

  // scalar recomputation: FFNN([g_i, g_j]) + unary(i) + unary(j)
  auto row_of = [&](int i) {
    std::vector<double> r(fx.cfg.span_dim());
    for (int c = 0; c < fx.cfg.span_dim(); ++c) r[c] = gt.at(i, c);
    return r;
  };
  bool any_asymmetry = false;
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j) {
      if (i == j) {
        for (int r = 0; r < n_rel; ++r) CHECK(v.at(i * b + j, r) <= kScoreMask / 2);
        continue;
      }
      auto gi = row_of(i), gj = row_of(j);
      std::vector<double> pair = gi;
      pair.insert(pair.end(), gj.begin(), gj.end());
      auto scores = testutil::ffnn_oracle(fx.params, "rel.pair", pair);
      double ui = testutil::ffnn_oracle(fx.params, "rel.unary", gi)[0];
      double uj = testutil::ffnn_oracle(fx.params, "rel.unary", gj)[0];
      for (int r = 0; r < n_rel; ++r) {
        CHECK(std::fabs(v.at(i * b + j, r) - (scores[r] + ui + uj)) <= 1e-10);
        if (std::fabs(v.at(i * b + j, r) - v.at(j * b + i, r)) > 1e-9) any_asymmetry = true;
      }
    }
  CHECK(any_asymmetry);
}

TEST_CASE("relation update: all-negative scores give zero updates") {
  Fixture fx(9);
  const int b = 3, n_rel = fx.cfg.relation_label_count();
  auto g = fx.tape.input(fx.random_g(b, 4));
  Tensor<double> v({b * b, n_rel});
  for (auto& x : v.data) x = -0.5;
  auto u = fx.tape.value(fx.prop.relation_update(fx.tape.input(v), g));
  for (double x : u.data) CHECK(x == 0.0);
}

TEST_CASE("relation update: unit score and all-ones projection copy the neighbor") {
  Fixture fx(10);
  const int b = 2, n_rel = fx.cfg.relation_label_count();
  for (auto& x : fx.params.get("rel.proj").data) x = 1.0;
  auto gt = fx.random_g(b, 14);
  auto g = fx.tape.input(gt);
  Tensor<double> v = Tensor<double>::fill(b * b, n_rel, kScoreMask);
  v.at(0 * b + 1, 0) = 1.0;  // single live edge (0 <- 1), one relation type
  auto u = fx.tape.value(fx.prop.relation_update(fx.tape.input(v), g));
  for (int c = 0; c < fx.cfg.span_dim(); ++c) {
    CHECK(u.at(0, c) == doctest::Approx(gt.at(1, c)).epsilon(1e-12));
    CHECK(u.at(1, c) == 0.0);
  }
}

TEST_CASE("relation update matches a brute-force triple loop") {
  for (int trial = 0; trial < 100; ++trial) {
    int n_rel = 1 + trial % 4;  // up to 4 relation types
    Fixture fx(700 + trial, n_rel);
    int b = 2 + trial % 5;  // up to 6
    auto gt = fx.random_g(b, 900 + trial);
    auto g = fx.tape.input(gt);
    Rng rng(50 + trial);
    Tensor<double> v({b * b, n_rel});
    for (auto& x : v.data) x = rng.uniform(-1, 1);
    for (int i = 0; i < b; ++i)
      for (int r = 0; r < n_rel; ++r) v.at(i * b + i, r) = kScoreMask;
    auto u = fx.tape.value(fx.prop.relation_update(fx.tape.input(v), g));
    const auto& a_r = fx.params.get("rel.proj");
    for (int i = 0; i < b; ++i)
      for (int c = 0; c < fx.cfg.span_dim(); ++c) {
        double want = 0;
        for (int j = 0; j < b; ++j) {
          if (j == i) continue;
          for (int r = 0; r < n_rel; ++r) {
            double w = std::max(0.0, v.at(i * b + j, r));
            want += w * a_r.at(r, c) * gt.at(j, c);
          }
        }
        CHECK(std::fabs(u.at(i, c) - want) <= 1e-12);
      }
  }
}

TEST_CASE("ReLU masking: nudging dead scores leaves the update unchanged") {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    Fixture fx(1500 + trial % 13);
    int b = 2 + trial % 4;
    int n_rel = fx.cfg.relation_label_count();
    auto gt = fx.random_g(b, 40 + trial);
    Tensor<double> v({b * b, n_rel});
    for (auto& x : v.data) x = rng.uniform(-1, 1);
    // find a dead entry and perturb it within the dead zone
    int pick = -1;
    for (int i = 0; i < b * b && pick < 0; ++i)
      for (int r = 0; r < n_rel; ++r)
        if (v.at(i, r) <= 0 && i / b != i % b) {
          pick = i * n_rel + r;
          break;
        }
    if (pick < 0) continue;
    auto g = fx.tape.input(gt);
    auto u1 = fx.tape.value(fx.prop.relation_update(fx.tape.input(v), g));
    Tensor<double> v2 = v;
    v2.data[pick] = v2.data[pick] * rng.uniform(0.1, 0.9) - rng.uniform(0.0, 1.0);  // still <= 0
    auto u2 = fx.tape.value(fx.prop.relation_update(fx.tape.input(v2), g));
    CHECK(u1.data == u2.data);
  }
}

TEST_CASE("gated update: zero gate weights average, equal inputs fixed point") {
  Fixture fx(11, 2, /*zero=*/true);
  const int d = fx.cfg.span_dim();
  auto gt = fx.random_g(3, 8);
  auto ut = fx.random_g(3, 9);
  auto out = fx.tape.value(
      fx.prop.gated_update(fx.tape.input(gt), fx.tape.input(ut), "gate.coref.w"));
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < d; ++c)
      CHECK(out.at(i, c) == doctest::Approx((gt.at(i, c) + ut.at(i, c)) / 2).epsilon(1e-12));

  Fixture fx2(12);
  auto g2 = fx2.random_g(3, 8);
  auto out2 = fx2.tape.value(
      fx2.prop.gated_update(fx2.tape.input(g2), fx2.tape.input(g2), "gate.rel.w"));
  for (int64_t i = 0; i < out2.size(); ++i)
    CHECK(out2.data[i] == doctest::Approx(g2.data[i]).epsilon(1e-12));
}

TEST_CASE("gated update matches the scalar sigmoid recomputation") {
  Fixture fx(13);
  const int d = fx.cfg.span_dim();
  auto gt = fx.random_g(2, 31);
  auto ut = fx.random_g(2, 32);
  auto out = fx.tape.value(
      fx.prop.gated_update(fx.tape.input(gt), fx.tape.input(ut), "gate.coref.w"));
  const auto& w = fx.params.get("gate.coref.w");  // d x 2d
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < d; ++c) {
      double z = 0;
      for (int k = 0; k < d; ++k) z += w.at(c, k) * gt.at(i, k);
      for (int k = 0; k < d; ++k) z += w.at(c, d + k) * ut.at(i, k);
      double f = 1.0 / (1.0 + std::exp(-z));
      double want = f * gt.at(i, c) + (1 - f) * ut.at(i, c);
      CHECK(out.at(i, c) == doctest::Approx(want).epsilon(1e-11));
    }
}

TEST_CASE("gating convexity holds per coordinate") {
  for (int trial = 0; trial < 1000; ++trial) {
    Fixture fx(2000 + trial % 17);
    auto gt = fx.random_g(2, 3000 + trial);
    auto ut = fx.random_g(2, 4000 + trial);
    auto out = fx.tape.value(
        fx.prop.gated_update(fx.tape.input(gt), fx.tape.input(ut), "gate.rel.w"));
    for (int64_t i = 0; i < out.size(); ++i) {
      double lo = std::min(gt.data[i], ut.data[i]);
      double hi = std::max(gt.data[i], ut.data[i]);
      CHECK(out.data[i] >= lo - 1e-12);
      CHECK(out.data[i] <= hi + 1e-12);
    }
  }
}

TEST_CASE("antecedent causality: zeroing a later span never changes earlier updates") {
  for (int trial = 0; trial < 1000; ++trial) {
    Fixture fx(5000 + trial % 11);
    int b = 3 + trial % 5;
    auto gt = fx.random_g(b, 6000 + trial);
    auto beams = Fixture::contiguous_beam(b, fx.cfg.graph.K);

    auto compute_u = [&](const Tensor<double>& gm) {
      Tape<double> tape;
      model::ParamBank<double> bank(tape, fx.params);
      model::DropoutCtx ctx;
      Propagator<double> prop(bank, fx.cfg, ctx);
      auto g = tape.input(gm);
      auto scores = prop.coref_scores(g, beams, 0);
      return tape.value(prop.coref_update(scores, g));
    };
    auto base = compute_u(gt);
    int target = 1 + trial % (b - 1);
    Tensor<double> zeroed = gt;
    for (int c = 0; c < fx.cfg.span_dim(); ++c) zeroed.at(target, c) = 0.0;
    auto modified = compute_u(zeroed);
    // rows before `target` are unaffected: their antecedents and their own
    // pair scores involve only earlier beam elements
    for (int i = 0; i < target; ++i)
      for (int c = 0; c < fx.cfg.span_dim(); ++c)
        CHECK(base.at(i, c) == modified.at(i, c));
  }
}

TEST_CASE("propagate with N=0 M=0 returns g0 bitwise") {
  Fixture fx(14);
  fx.cfg.graph.N = 0;
  fx.cfg.graph.M = 0;
  auto g0t = fx.random_g(6, 61);
  auto g0 = fx.tape.input(g0t);
  BeamSet beams = Fixture::contiguous_beam(4, fx.cfg.graph.K);
  beams.relation = {{0, 1, 2, 3}};
  std::vector<std::pair<int, int>> ranges{{0, 6}};
  auto result = fx.prop.propagate(g0, beams, ranges);
  CHECK(fx.tape.value(result.g_final).data == g0t.data);
  CHECK(fx.tape.value(result.g_coref_out).data == g0t.data);
  CHECK(result.states.size() == 1);
}

TEST_CASE("propagate runs N then M and freezes beam membership") {
  Fixture fx(15);
  fx.cfg.graph.N = 2;
  fx.cfg.graph.M = 2;
  auto g0t = fx.random_g(6, 62);
  auto g0 = fx.tape.input(g0t);
  BeamSet beams = Fixture::contiguous_beam(3, fx.cfg.graph.K);
  beams.coref = {0, 2, 4};
  beams.relation = {{1, 2}, {4, 5}};
  std::vector<std::pair<int, int>> ranges{{0, 3}, {3, 6}};
  auto result = fx.prop.propagate(g0, beams, ranges);
  CHECK(result.states.size() == 5);  // initial + 2 coref + 2 relation
  // span 3 is in no beam: presents g0 to the heads
  const auto& final_g = fx.tape.value(result.g_final);
  for (int c = 0; c < fx.cfg.span_dim(); ++c)
    CHECK(final_g.at(3, c) == g0t.at(3, c));
  // beam members moved
  double delta = 0;
  for (int c = 0; c < fx.cfg.span_dim(); ++c)
    delta += std::fabs(final_g.at(2, c) - g0t.at(2, c));
  CHECK(delta > 0);
  // coref-stage output differs from the final output (relation stage follows)
  CHECK(fx.tape.value(result.g_coref_out).data != final_g.data);
  // first coref beam element has no antecedents: kept at g0 through the
  // coref stage
  const auto& coref_out = fx.tape.value(result.g_coref_out);
  for (int c = 0; c < fx.cfg.span_dim(); ++c) CHECK(coref_out.at(0, c) == g0t.at(0, c));
}

TEST_CASE("rel-first order equals manual composition") {
  Fixture fx(16);
  fx.cfg.graph.N = 1;
  fx.cfg.graph.M = 1;
  fx.cfg.graph.order = model::Order::kRelFirst;
  auto g0t = fx.random_g(5, 63);
  BeamSet beams = Fixture::contiguous_beam(3, fx.cfg.graph.K);
  beams.coref = {0, 1, 3};
  beams.relation = {{0, 1, 2}, {3, 4}};
  std::vector<std::pair<int, int>> ranges{{0, 3}, {3, 5}};

  auto g0 = fx.tape.input(g0t);
  auto result = fx.prop.propagate(g0, beams, ranges);

  // manual: relation step over each sentence, then coref step
  Tape<double> tape;
  model::ParamBank<double> bank(tape, fx.params);
  model::DropoutCtx ctx;
  Propagator<double> prop(bank, fx.cfg, ctx);
  auto cur = tape.input(g0t);
  {
    std::vector<int> all;
    std::vector<Tape<double>::Var> rows;
    for (const auto& beam : beams.relation) {
      auto gs = tape.gather_rows(cur, beam);
      auto v = prop.relation_scores(gs, 0);
      auto u = prop.relation_update(v, gs);
      rows.push_back(prop.gated_update(gs, u, "gate.rel.w"));
      all.insert(all.end(), beam.begin(), beam.end());
    }
    cur = tape.row_replace(cur, all, tape.concat(rows, 0));
  }
  {
    auto gb = tape.gather_rows(cur, beams.coref);
    auto scores = prop.coref_scores(gb, beams, 0);
    auto u = prop.coref_update(scores, gb);
    auto gated = prop.gated_update(gb, u, "gate.coref.w");
    // element 0 keeps its value
    Tensor<double> sel = Tensor<double>::zeros(3, fx.cfg.span_dim());
    Tensor<double> keep = Tensor<double>::zeros(3, fx.cfg.span_dim());
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < fx.cfg.span_dim(); ++c) {
        sel.at(i, c) = i == 0 ? 0.0 : 1.0;
        keep.at(i, c) = i == 0 ? 1.0 : 0.0;
      }
    auto merged = tape.add(tape.mul(tape.constant(sel), gated),
                           tape.mul(tape.constant(keep), gb));
    cur = tape.row_replace(cur, beams.coref, merged);
  }
  const auto& got = fx.tape.value(result.g_final);
  const auto& want = tape.value(cur);
  REQUIRE(got.shape == want.shape);
  for (int64_t i = 0; i < got.size(); ++i)
    CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
  CHECK(fx.tape.value(result.g_coref_out).data == got.data);
}

TEST_CASE("propagation gradients flow end to end") {
  Fixture fx(18);
  fx.cfg.graph.N = 1;
  fx.cfg.graph.M = 1;

  std::map<std::string, Tensor<double>*> param_ptrs;
  for (const auto& name : fx.params.names()) param_ptrs[name] = &fx.params.get(name);

  auto g0t = fx.random_g(5, 64);
  BeamSet beams = Fixture::contiguous_beam(3, fx.cfg.graph.K);
  beams.coref = {0, 1, 3};
  beams.relation = {{0, 1, 2}, {3, 4}};
  std::vector<std::pair<int, int>> ranges{{0, 3}, {3, 5}};

  auto build = [&](Tape<double>& tape) {
    model::ParamBank<double> bank(tape, fx.params);
    model::DropoutCtx ctx;
    Propagator<double> prop(bank, fx.cfg, ctx);
    auto result = prop.propagate(tape.input(g0t), beams, ranges);
    auto loss = tape.sum_all(tape.mul(result.g_final, result.g_final));
    return std::make_pair(loss, bank.bound());
  };
  std::map<std::string, Tensor<double>> analytic;
  {
    Tape<double> tape;
    auto [loss, bound] = build(tape);
    tape.backward(loss);
    for (const auto& [name, var] : bound)
      if (!tape.grad(var).data.empty()) analytic[name] = tape.grad(var);
  }
  auto f = [&]() {
    Tape<double> tape;
    return tape.value(build(tape).first).data[0];
  };
  auto report = numeric::grad_check(f, param_ptrs, analytic, 1e-4, 1e-3);
  if (!report.pass) MESSAGE(report.summary());
  CHECK(report.pass);
  // propagation parameters received gradient
  CHECK(analytic.count("gate.coref.w"));
  CHECK(analytic.count("gate.rel.w"));
  CHECK(analytic.count("rel.proj"));
  CHECK(analytic.count("coref.pair.w0"));
}

TEST_CASE("build_beams: sizes, document order, equal-score tie rule") {
  Fixture fx(40, 2, /*zero=*/true);  // zero params: all unary scores equal
  // 10 document tokens over two sentences, 12 candidate spans
  std::vector<std::pair<int, int>> ranges{{0, 7}, {7, 12}};
  std::vector<int> sentence_tokens{5, 5};
  auto g0 = fx.tape.input(fx.random_g(12, 71));
  auto beams = fx.prop.build_beams(g0, ranges, sentence_tokens, 10);
  // ceil(0.4 * 10) = 4, first four spans in document order on ties
  CHECK(beams.coref == std::vector<int>{0, 1, 2, 3});
  REQUIRE(beams.relation.size() == 2);
  // ceil(0.5 * 5) = 3 per sentence; ties resolve to the earliest spans
  CHECK(beams.relation[0] == std::vector<int>{0, 1, 2});
  CHECK(beams.relation[1] == std::vector<int>{7, 8, 9});
  // candidate windows: min(K, i) immediately preceding beam elements
  REQUIRE(beams.coref_candidates.size() == 4);
  CHECK(beams.coref_candidates[0].empty());
  CHECK(beams.coref_candidates[3] == std::vector<int>{0, 1, 2});
}

TEST_CASE("build_beams matches the sort oracle on random scores") {
  for (int trial = 0; trial < 20; ++trial) {
    Fixture fx(600 + trial);
    std::vector<std::pair<int, int>> ranges{{0, 9}};
    std::vector<int> sentence_tokens{6};
    auto g0t = fx.random_g(10, 80 + trial);
    auto g0 = fx.tape.input(g0t);
    auto beams = fx.prop.build_beams(g0, ranges, sentence_tokens, 6);

    // oracle: recompute the unary coref scores through the FFNN oracle and
    // take the top ceil(0.4 * 6) = 3 by (score desc, index asc)
    std::vector<std::pair<double, int>> scored;
    for (int i = 0; i < 10; ++i) {
      std::vector<double> row(fx.cfg.span_dim());
      for (int c = 0; c < fx.cfg.span_dim(); ++c) row[c] = g0t.at(i, c);
      scored.push_back({testutil::ffnn_oracle(fx.params, "coref.unary", row)[0], i});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::vector<int> want;
    for (int k = 0; k < 3; ++k) want.push_back(scored[k].second);
    std::sort(want.begin(), want.end());
    CHECK(beams.coref == want);
  }
}

TEST_CASE("paper_exact_scores strips the unary terms from pair scores") {
  Fixture fx(90);
  fx.cfg.graph.paper_exact_scores = true;
  const int b = 3;
  auto gt = fx.random_g(b, 91);
  auto g = fx.tape.input(gt);
  auto beams = Fixture::contiguous_beam(b, fx.cfg.graph.K);
  auto scores = fx.prop.coref_scores(g, beams, 0);
  const auto& v = fx.tape.value(scores.v);
  auto row_of = [&](int i) {
    std::vector<double> r(fx.cfg.span_dim());
    for (int c = 0; c < fx.cfg.span_dim(); ++c) r[c] = gt.at(i, c);
    return r;
  };
  for (int i = 1; i < b; ++i)
    for (int j = 0; j < i; ++j) {
      auto gi = row_of(i), gj = row_of(j);
      std::vector<double> triple = gi;
      triple.insert(triple.end(), gj.begin(), gj.end());
      for (int c = 0; c < fx.cfg.span_dim(); ++c) triple.push_back(gi[c] * gj[c]);
      double want = testutil::ffnn_oracle(fx.params, "coref.pair", triple)[0];
      CHECK(v.at(i, j) == doctest::Approx(want).epsilon(1e-10));
    }
}
