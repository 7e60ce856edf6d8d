#include "dygie/heads/heads.hpp"

#include <map>
#include <set>

namespace dygie::heads {

namespace {

template <class S>
using Var = typename numeric::Tape<S>::Var;

// Prepend a zero null-logit column and softmax.
template <class S>
Var<S> with_null_softmax(numeric::Tape<S>& tape, Var<S> logits) {
  const int rows = tape.value(logits).rows();
  auto null_col = tape.constant(numeric::Tensor<S>::zeros(rows, 1));
  return tape.softmax_row(tape.concat({null_col, logits}, 1));
}

// -sum(log(sum(probs * onehot, axis 1))); `targets` marks one column per row.
template <class S>
Var<S> nll(numeric::Tape<S>& tape, Var<S> probs, numeric::Tensor<S> targets) {
  auto gold = tape.sum(tape.mul(probs, tape.constant(std::move(targets))), 1);
  return tape.scale(tape.sum_all(tape.log(gold)), S(-1));
}

int argmax_null_tied(const auto& row_view, int cols) {
  int best = 0;
  for (int c = 1; c < cols; ++c)
    if (row_view(c) > row_view(best)) best = c;
  return best;
}

}  // namespace

template <class S>
typename numeric::Tape<S>::Var entity_distribution(model::ParamBank<S>& bank,
                                                   typename numeric::Tape<S>::Var g,
                                                   const model::Config& config,
                                                   const model::DropoutCtx& ctx,
                                                   uint64_t instance) {
  auto logits = model::apply_ffnn(bank, "head.entity", g, 2, config.net.dropout_ffnn, ctx,
                                  instance);
  return with_null_softmax(bank.tape(), logits);
}

template <class S>
typename numeric::Tape<S>::Var relation_distribution(model::ParamBank<S>& bank,
                                                     typename numeric::Tape<S>::Var g_beam,
                                                     const model::Config& config,
                                                     const model::DropoutCtx& ctx,
                                                     uint64_t instance) {
  auto& tape = bank.tape();
  const int b = tape.value(g_beam).rows();
  auto pairs = graph::pair_rows(tape, g_beam, b);
  auto logits = model::apply_ffnn(bank, "head.relation", pairs, 2, config.net.dropout_ffnn, ctx,
                                  instance);
  if (!config.graph.paper_exact_scores) {
    // Fold the unary pruning scores into the pair logits so the relation
    // beam scorer trains end to end; without this, gold argument spans
    // never climb into the beam and every gold relation is dropped.
    auto unary = model::apply_ffnn(bank, "rel.unary", g_beam, 2, config.net.dropout_ffnn, ctx,
                                   instance + 1);
    std::vector<int> li(b * b), ri(b * b);
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j) {
        li[i * b + j] = i;
        ri[i * b + j] = j;
      }
    auto ones = tape.constant(
        numeric::Tensor<S>::fill(1, config.relation_label_count(), S(1)));
    logits = tape.add(logits, tape.add(tape.matmul(tape.gather_rows(unary, li), ones),
                                       tape.matmul(tape.gather_rows(unary, ri), ones)));
  }
  return with_null_softmax(tape, logits);
}

template <class S>
CorefDistributions<S> coref_distributions(graph::Propagator<S>& propagator,
                                          typename numeric::Tape<S>::Var g_coref_out,
                                          const graph::BeamSet& beams, uint64_t instance) {
  auto& tape = propagator.bank().tape();
  CorefDistributions<S> out;
  if (beams.coref.empty()) return out;
  auto g_beam = tape.gather_rows(g_coref_out, beams.coref);
  auto scores = propagator.coref_scores(g_beam, beams, instance);
  const int b = static_cast<int>(beams.coref.size());
  for (int i = 0; i < b; ++i) {
    const auto& cands = beams.coref_candidates[i];
    auto eps = tape.constant(numeric::Tensor<S>::zeros(1, 1));
    if (cands.empty()) {
      out.dist.push_back(tape.softmax_row(eps));
      continue;
    }
    auto row = tape.slice(scores.v, 0, i, 1);
    auto window = tape.slice(row, 1, cands.front(), static_cast<int>(cands.size()));
    out.dist.push_back(tape.softmax_row(tape.concat({eps, window}, 1)));
  }
  return out;
}

template <class S>
LossBreakdown<S> joint_loss(model::ParamBank<S>& bank, const corpus::Document& doc,
                            const std::vector<corpus::Span>& spans,
                            const std::vector<std::pair<int, int>>& sentence_ranges,
                            const graph::BeamSet& beams,
                            typename numeric::Tape<S>::Var entity_probs,
                            const std::vector<typename numeric::Tape<S>::Var>& relation_probs,
                            const CorefDistributions<S>& coref,
                            const model::Config& config) {
  auto& tape = bank.tape();
  const auto& schema = config.schema;
  auto zero = [&] { return tape.constant(numeric::Tensor<S>::scalar(S(0))); };

  LossBreakdown<S> out;

  // Entity term: every enumerated span, null when not gold (first gold wins).
  std::map<std::pair<int, int>, int> gold_entity;
  for (const auto& e : doc.entities) {
    int idx = schema.entity_index(e.label);
    if (idx >= 0) gold_entity.emplace(std::make_pair(e.span.start, e.span.end), idx);
  }
  {
    const int n = static_cast<int>(spans.size());
    numeric::Tensor<S> targets({n, 1 + schema.entity_count()});
    for (int i = 0; i < n; ++i) {
      auto it = gold_entity.find({spans[i].start, spans[i].end});
      targets.at(i, it == gold_entity.end() ? 0 : 1 + it->second) = S(1);
    }
    out.entity = nll(tape, entity_probs, std::move(targets));
  }

  // Relation term: ordered beam pairs per sentence, diagonal rows skipped.
  {
    std::map<std::tuple<int, int, int, int>, int> gold_rel;
    for (const auto& r : doc.relations) {
      int idx = schema.relation_index(r.label);
      if (idx >= 0)
        gold_rel.emplace(std::make_tuple(r.arg1.start, r.arg1.end, r.arg2.start, r.arg2.end), idx);
    }
    int matched = 0;
    std::vector<Var<S>> sentence_losses;
    for (size_t s = 0; s < sentence_ranges.size(); ++s) {
      const auto& beam = beams.relation[s];
      const int b = static_cast<int>(beam.size());
      if (b < 2) continue;
      std::vector<int> offdiag;
      numeric::Tensor<S> targets({b * b - b, 1 + schema.relation_count()});
      int row = 0;
      for (int i = 0; i < b; ++i)
        for (int j = 0; j < b; ++j) {
          if (i == j) continue;
          offdiag.push_back(i * b + j);
          const auto& si = spans[beam[i]];
          const auto& sj = spans[beam[j]];
          auto it = gold_rel.find(std::make_tuple(si.start, si.end, sj.start, sj.end));
          if (it != gold_rel.end()) {
            targets.at(row, 1 + it->second) = S(1);
            ++matched;
          } else {
            targets.at(row, 0) = S(1);
          }
          ++row;
        }
      auto pair_probs = tape.gather_rows(relation_probs[s], offdiag);
      sentence_losses.push_back(nll(tape, pair_probs, std::move(targets)));
    }
    out.dropped_gold_relations = static_cast<int>(gold_rel.size()) - matched;
    if (sentence_losses.empty()) {
      out.relation = zero();
    } else {
      auto acc = sentence_losses[0];
      for (size_t i = 1; i < sentence_losses.size(); ++i) acc = tape.add(acc, sentence_losses[i]);
      out.relation = acc;
    }
  }

  // Coref term: marginalize over gold cluster-mates among the candidates;
  // epsilon target when none is reachable.
  {
    std::map<std::pair<int, int>, int> cluster_of;
    for (size_t c = 0; c < doc.clusters.size(); ++c)
      for (const auto& sp : doc.clusters[c]) cluster_of[{sp.start, sp.end}] = static_cast<int>(c);

    std::vector<Var<S>> terms;
    for (size_t i = 0; i < coref.dist.size(); ++i) {
      const auto& cands = beams.coref_candidates[i];
      const auto& span_i = spans[beams.coref[i]];
      const int cols = 1 + static_cast<int>(cands.size());
      numeric::Tensor<S> sel({1, cols});
      auto it = cluster_of.find({span_i.start, span_i.end});
      bool any = false;
      if (it != cluster_of.end()) {
        for (size_t k = 0; k < cands.size(); ++k) {
          const auto& span_j = spans[beams.coref[cands[k]]];
          auto jt = cluster_of.find({span_j.start, span_j.end});
          if (jt != cluster_of.end() && jt->second == it->second) {
            sel.at(0, 1 + static_cast<int>(k)) = S(1);
            any = true;
          }
        }
      }
      if (!any) sel.at(0, 0) = S(1);  // epsilon
      terms.push_back(nll(tape, coref.dist[i], std::move(sel)));
    }
    if (terms.empty()) {
      out.coref = zero();
    } else {
      auto acc = terms[0];
      for (size_t i = 1; i < terms.size(); ++i) acc = tape.add(acc, terms[i]);
      out.coref = acc;
    }
  }

  out.total = tape.add(tape.add(tape.scale(out.entity, S(config.loss.lambda_E)),
                                tape.scale(out.relation, S(config.loss.lambda_R))),
                       tape.scale(out.coref, S(config.loss.lambda_C)));
  return out;
}

template <class S>
PredictedDoc decode(const corpus::Document& doc, const std::vector<corpus::Span>& spans,
                    const graph::BeamSet& beams, const numeric::Tensor<S>& entity_probs,
                    const std::vector<numeric::Tensor<S>>& relation_probs,
                    const std::vector<numeric::Tensor<S>>& coref_dists,
                    const model::Config& config) {
  PredictedDoc out;
  out.doc_id = doc.doc_id;
  const auto& schema = config.schema;

  for (size_t i = 0; i < spans.size(); ++i) {
    int best = argmax_null_tied([&](int c) { return entity_probs.at(static_cast<int>(i), c); },
                                1 + schema.entity_count());
    if (best > 0) out.entities.emplace_back(spans[i], schema.entity_labels[best - 1]);
  }

  for (size_t s = 0; s < relation_probs.size(); ++s) {
    const auto& beam = beams.relation[s];
    const int b = static_cast<int>(beam.size());
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j) {
        if (i == j) continue;
        const int row = i * b + j;
        int best = argmax_null_tied([&](int c) { return relation_probs[s].at(row, c); },
                                    1 + schema.relation_count());
        if (best > 0)
          out.relations.emplace_back(spans[beam[i]], spans[beam[j]],
                                     schema.relation_labels[best - 1]);
      }
  }

  for (size_t i = 0; i < coref_dists.size(); ++i) {
    const auto& cands = beams.coref_candidates[i];
    const int cols = 1 + static_cast<int>(cands.size());
    int best = argmax_null_tied([&](int c) { return coref_dists[i].at(0, c); }, cols);
    std::optional<corpus::Span> antecedent;
    if (best > 0) antecedent = spans[beams.coref[cands[best - 1]]];
    out.antecedents.emplace_back(spans[beams.coref[i]], antecedent);
  }
  return out;
}

#define DYGIE_INSTANTIATE_HEADS(S)                                                              \
  template typename numeric::Tape<S>::Var entity_distribution<S>(                               \
      model::ParamBank<S>&, typename numeric::Tape<S>::Var, const model::Config&,               \
      const model::DropoutCtx&, uint64_t);                                                      \
  template typename numeric::Tape<S>::Var relation_distribution<S>(                             \
      model::ParamBank<S>&, typename numeric::Tape<S>::Var, const model::Config&,               \
      const model::DropoutCtx&, uint64_t);                                                      \
  template CorefDistributions<S> coref_distributions<S>(graph::Propagator<S>&,                  \
                                                        typename numeric::Tape<S>::Var,        \
                                                        const graph::BeamSet&, uint64_t);       \
  template LossBreakdown<S> joint_loss<S>(                                                      \
      model::ParamBank<S>&, const corpus::Document&, const std::vector<corpus::Span>&,          \
      const std::vector<std::pair<int, int>>&, const graph::BeamSet&,                           \
      typename numeric::Tape<S>::Var, const std::vector<typename numeric::Tape<S>::Var>&,      \
      const CorefDistributions<S>&, const model::Config&);                                      \
  template PredictedDoc decode<S>(const corpus::Document&, const std::vector<corpus::Span>&,    \
                                  const graph::BeamSet&, const numeric::Tensor<S>&,             \
                                  const std::vector<numeric::Tensor<S>>&,                       \
                                  const std::vector<numeric::Tensor<S>>&, const model::Config&);

DYGIE_INSTANTIATE_HEADS(float)
DYGIE_INSTANTIATE_HEADS(double)

}  // namespace dygie::heads
