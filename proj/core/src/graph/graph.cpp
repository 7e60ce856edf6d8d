#include "dygie/graph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dygie/rng.hpp"

namespace dygie::graph {

int beam_size(double ratio, int token_count, int span_count) {
  const double x = ratio * token_count;
  const double floor_x = std::floor(x);
  int b = (x - floor_x <= 1e-9) ? static_cast<int>(floor_x) : static_cast<int>(floor_x) + 1;
  b = std::max(b, 1);
  return std::min(b, span_count);
}

std::vector<int> prune_top_k(const std::vector<double>& scores, int b) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
    if (scores[a] != scores[c]) return scores[a] > scores[c];
    return a < c;
  });
  order.resize(std::min<size_t>(b, order.size()));
  std::sort(order.begin(), order.end());
  return order;
}

template <class S>
typename numeric::Tape<S>::Var pair_rows(numeric::Tape<S>& tape,
                                         typename numeric::Tape<S>::Var g, int b) {
  std::vector<int> left(b * b), right(b * b);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j) {
      left[i * b + j] = i;
      right[i * b + j] = j;
    }
  return tape.concat({tape.gather_rows(g, left), tape.gather_rows(g, right)}, 1);
}

template <class S>
typename Propagator<S>::Var Propagator<S>::unary_scores(Var g, const std::string& prefix,
                                                        uint64_t instance) {
  return model::apply_ffnn(bank_, prefix, g, 2, config_.net.dropout_ffnn, ctx_, instance);
}

template <class S>
BeamSet Propagator<S>::build_beams(Var g0, const std::vector<std::pair<int, int>>& sentence_ranges,
                                   const std::vector<int>& sentence_tokens, int doc_tokens) {
  auto& tape = bank_.tape();
  const int num_spans = tape.value(g0).rows();

  auto coref_u = unary_scores(g0, "coref.unary", fnv1a("prune"));
  auto rel_u = unary_scores(g0, "rel.unary", fnv1a("prune"));
  const auto& cu = tape.value(coref_u);
  const auto& ru = tape.value(rel_u);

  BeamSet beams;
  std::vector<double> coref_scores(num_spans);
  for (int i = 0; i < num_spans; ++i) coref_scores[i] = static_cast<double>(cu.at(i, 0));
  const int b_c = beam_size(config_.graph.coref_ratio, doc_tokens, num_spans);
  beams.coref = prune_top_k(coref_scores, b_c);

  for (size_t s = 0; s < sentence_ranges.size(); ++s) {
    auto [begin, end] = sentence_ranges[s];
    std::vector<double> scores(end - begin);
    for (int i = begin; i < end; ++i) scores[i - begin] = static_cast<double>(ru.at(i, 0));
    const int b_r = beam_size(config_.graph.rel_ratio, sentence_tokens[s], end - begin);
    auto local = prune_top_k(scores, b_r);
    std::vector<int> global;
    for (int i : local) global.push_back(begin + i);
    beams.relation.push_back(std::move(global));
  }

  const int K = config_.graph.K;
  const int bc = static_cast<int>(beams.coref.size());
  beams.coref_candidates.resize(bc);
  for (int i = 0; i < bc; ++i)
    for (int j = std::max(0, i - K); j < i; ++j) beams.coref_candidates[i].push_back(j);
  return beams;
}

template <class S>
typename Propagator<S>::CorefScores Propagator<S>::coref_scores(Var g_beam, const BeamSet& beams,
                                                                uint64_t instance) {
  auto& tape = bank_.tape();
  const int b = tape.value(g_beam).rows();
  auto pairs_lr = pair_rows(tape, g_beam, b);
  const int d = tape.value(g_beam).cols();
  auto left = tape.slice(pairs_lr, 1, 0, d);
  auto right = tape.slice(pairs_lr, 1, d, d);
  auto triple = tape.concat({left, right, tape.mul(left, right)}, 1);
  auto raw = model::apply_ffnn(bank_, "coref.pair", triple, 2, config_.net.dropout_ffnn, ctx_,
                               instance);  // b*b x 1
  if (!config_.graph.paper_exact_scores) {
    auto unary = unary_scores(g_beam, "coref.unary", instance);  // b x 1
    std::vector<int> li(b * b), ri(b * b);
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j) {
        li[i * b + j] = i;
        ri[i * b + j] = j;
      }
    raw = tape.add(raw, tape.add(tape.gather_rows(unary, li), tape.gather_rows(unary, ri)));
  }
  auto v_square = tape.reshape(raw, b, b);

  numeric::Tensor<S> mask({b, b});
  numeric::Tensor<S> rowsel({b, b});
  for (int i = 0; i < b; ++i) {
    const auto& cands = beams.coref_candidates[i];
    for (int j = 0; j < b; ++j) {
      bool valid = !cands.empty() && j >= cands.front() && j <= cands.back();
      mask.at(i, j) = valid ? S(0) : S(kScoreMask);
      rowsel.at(i, j) = cands.empty() ? S(0) : S(1);
    }
  }
  CorefScores out;
  out.v = tape.add(v_square, tape.constant(std::move(mask)));
  out.p = tape.mul(tape.softmax_row(out.v), tape.constant(std::move(rowsel)));
  return out;
}

template <class S>
typename Propagator<S>::Var Propagator<S>::coref_update(const CorefScores& scores, Var g_beam) {
  return bank_.tape().matmul(scores.p, g_beam);
}

template <class S>
typename Propagator<S>::Var Propagator<S>::relation_scores(Var g_sent, uint64_t instance) {
  auto& tape = bank_.tape();
  const int b = tape.value(g_sent).rows();
  const int n_rel = config_.relation_label_count();
  auto pairs = pair_rows(tape, g_sent, b);
  auto raw = model::apply_ffnn(bank_, "rel.pair", pairs, 2, config_.net.dropout_ffnn, ctx_,
                               instance);  // b*b x L_R
  if (!config_.graph.paper_exact_scores) {
    auto unary = unary_scores(g_sent, "rel.unary", instance);  // b x 1
    std::vector<int> li(b * b), ri(b * b);
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j) {
        li[i * b + j] = i;
        ri[i * b + j] = j;
      }
    auto ones = tape.constant(numeric::Tensor<S>::fill(1, n_rel, S(1)));
    auto left_u = tape.matmul(tape.gather_rows(unary, li), ones);
    auto right_u = tape.matmul(tape.gather_rows(unary, ri), ones);
    raw = tape.add(raw, tape.add(left_u, right_u));
  }
  numeric::Tensor<S> diag_mask({b * b, n_rel});
  for (int i = 0; i < b; ++i)
    for (int r = 0; r < n_rel; ++r) diag_mask.at(i * b + i, r) = S(kScoreMask);
  return tape.add(raw, tape.constant(std::move(diag_mask)));
}

template <class S>
typename Propagator<S>::Var Propagator<S>::relation_update(Var v_rel, Var g_sent) {
  auto& tape = bank_.tape();
  const int b = tape.value(g_sent).rows();
  auto rectified = tape.relu(v_rel);                        // b*b x L_R
  auto projected = tape.matmul(rectified, bank_("rel.proj"));  // b*b x d
  std::vector<int> tile(b * b);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j) tile[i * b + j] = j;
  auto contributions = tape.mul(projected, tape.gather_rows(g_sent, tile));
  numeric::Tensor<S> selector({b, b * b});
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j) selector.at(i, i * b + j) = S(1);
  return tape.matmul(tape.constant(std::move(selector)), contributions);
}

template <class S>
typename Propagator<S>::Var Propagator<S>::gated_update(Var g, Var u, const std::string& gate_name) {
  auto& tape = bank_.tape();
  auto z = tape.concat({g, u}, 1);
  auto gate = tape.sigmoid(tape.matmul_nt(z, bank_(gate_name)));
  const auto& shape = tape.value(g).shape;
  auto ones = tape.constant(numeric::Tensor<S>::fill(shape[0], shape[1], S(1)));
  return tape.add(tape.mul(gate, g), tape.mul(tape.sub(ones, gate), u));
}

template <class S>
typename Propagator<S>::Var Propagator<S>::coref_step(Var g_beam, const BeamSet& beams,
                                                      uint64_t instance, CorefScores* out_scores) {
  auto& tape = bank_.tape();
  auto scores = coref_scores(g_beam, beams, instance);
  if (out_scores) *out_scores = scores;
  auto u = coref_update(scores, g_beam);
  auto gated = gated_update(g_beam, u, "gate.coref.w");
  // Spans with an empty antecedent set are excluded from the update.
  const auto& shape = tape.value(g_beam).shape;
  numeric::Tensor<S> sel({shape[0], shape[1]});
  numeric::Tensor<S> keep({shape[0], shape[1]});
  for (int i = 0; i < shape[0]; ++i) {
    const bool has = !beams.coref_candidates[i].empty();
    for (int c = 0; c < shape[1]; ++c) {
      sel.at(i, c) = has ? S(1) : S(0);
      keep.at(i, c) = has ? S(0) : S(1);
    }
  }
  return tape.add(tape.mul(tape.constant(std::move(sel)), gated),
                  tape.mul(tape.constant(std::move(keep)), g_beam));
}

template <class S>
typename Propagator<S>::Result Propagator<S>::propagate(
    Var g0, const BeamSet& beams, const std::vector<std::pair<int, int>>& sentence_ranges) {
  auto& tape = bank_.tape();
  const int K = config_.graph.K;
  auto cur = g0;
  int iteration = 0;

  Result result;
  {
    SpanGraphState<S> init;
    init.iteration = 0;
    init.g = tape.value(cur);
    result.states.push_back(std::move(init));
  }

  auto run_coref_stage = [&] {
    for (int t = 0; t < config_.graph.N; ++t) {
      auto g_beam = tape.gather_rows(cur, beams.coref);
      CorefScores scores;
      auto g_next = coref_step(g_beam, beams, static_cast<uint64_t>(++iteration), &scores);
      cur = tape.row_replace(cur, beams.coref, g_next);
      SpanGraphState<S> state;
      state.iteration = iteration;
      state.g = tape.value(cur);
      extract_coref_slots(tape.value(scores.v), tape.value(scores.p), K, &state.coref_v,
                          &state.coref_p);
      result.states.push_back(std::move(state));
    }
  };
  auto run_rel_stage = [&] {
    for (int t = 0; t < config_.graph.M; ++t) {
      ++iteration;
      SpanGraphState<S> state;
      state.iteration = iteration;
      std::vector<int> all_indices;
      std::vector<Var> all_rows;
      for (size_t s = 0; s < sentence_ranges.size(); ++s) {
        const auto& beam = beams.relation[s];
        auto g_sent = tape.gather_rows(cur, beam);
        auto v = relation_scores(g_sent, static_cast<uint64_t>(iteration) * 131 + s);
        auto u = relation_update(v, g_sent);
        auto g_next = gated_update(g_sent, u, "gate.rel.w");
        all_indices.insert(all_indices.end(), beam.begin(), beam.end());
        all_rows.push_back(g_next);
        state.relation_v.push_back(tape.value(v));
      }
      cur = tape.row_replace(cur, all_indices, tape.concat(all_rows, 0));
      state.g = tape.value(cur);
      result.states.push_back(std::move(state));
    }
  };

  if (config_.graph.order == model::Order::kCorefFirst) {
    run_coref_stage();
    result.g_coref_out = cur;
    run_rel_stage();
    result.g_final = cur;
  } else {
    run_rel_stage();
    run_coref_stage();
    result.g_final = cur;
    result.g_coref_out = cur;
  }
  return result;
}

template <class S>
void extract_coref_slots(const numeric::Tensor<S>& v_full, const numeric::Tensor<S>& p_full,
                         int max_antecedents, numeric::Tensor<S>* v_out,
                         numeric::Tensor<S>* p_out) {
  const int b = v_full.rows();
  const int K = max_antecedents;
  *v_out = numeric::Tensor<S>::fill(b, K, S(kScoreMask));
  *p_out = numeric::Tensor<S>::zeros(b, K);
  for (int i = 0; i < b; ++i) {
    const int m = std::min(K, i);
    const int first = i - m;
    for (int k = 0; k < m; ++k) {
      v_out->at(i, k) = v_full.at(i, first + k);
      p_out->at(i, k) = p_full.at(i, first + k);
    }
  }
}

template class Propagator<float>;
template class Propagator<double>;
template typename numeric::Tape<float>::Var pair_rows<float>(numeric::Tape<float>&,
                                                             typename numeric::Tape<float>::Var,
                                                             int);
template typename numeric::Tape<double>::Var pair_rows<double>(numeric::Tape<double>&,
                                                               typename numeric::Tape<double>::Var,
                                                               int);
template void extract_coref_slots<float>(const numeric::Tensor<float>&,
                                         const numeric::Tensor<float>&, int,
                                         numeric::Tensor<float>*, numeric::Tensor<float>*);
template void extract_coref_slots<double>(const numeric::Tensor<double>&,
                                          const numeric::Tensor<double>&, int,
                                          numeric::Tensor<double>*, numeric::Tensor<double>*);

}  // namespace dygie::graph
