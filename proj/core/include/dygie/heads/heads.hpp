#pragma once

// Final prediction layer and the joint training objective. All label
// distributions are normalized against a null class whose logit is the
// constant zero, never a parameter: entity and relation distributions put
// null in column 0, the antecedent ranker scores epsilon as 0.

#include "dygie/graph/graph.hpp"
#include "dygie/model/params.hpp"
#include "dygie/predictions.hpp"

namespace dygie::heads {

// g_rows x (1 + entity labels); column 0 is the null class.
template <class S>
typename numeric::Tape<S>::Var entity_distribution(model::ParamBank<S>& bank,
                                                   typename numeric::Tape<S>::Var g,
                                                   const model::Config& config,
                                                   const model::DropoutCtx& ctx,
                                                   uint64_t instance);

// (b*b) x (1 + relation labels) over ordered beam pairs, row i*b + j.
// Diagonal rows are meaningless and skipped by loss and decoding.
template <class S>
typename numeric::Tape<S>::Var relation_distribution(model::ParamBank<S>& bank,
                                                     typename numeric::Tape<S>::Var g_beam,
                                                     const model::Config& config,
                                                     const model::DropoutCtx& ctx,
                                                     uint64_t instance);

// Antecedent ranking from the coreference-stage representations; reuses the
// graph module's pairwise scorer. dist[i] is 1 x (1 + m_i) with epsilon in
// column 0 and candidate slots in beam order.
template <class S>
struct CorefDistributions {
  std::vector<typename numeric::Tape<S>::Var> dist;
};

template <class S>
CorefDistributions<S> coref_distributions(graph::Propagator<S>& propagator,
                                          typename numeric::Tape<S>::Var g_coref_out,
                                          const graph::BeamSet& beams, uint64_t instance);

template <class S>
struct LossBreakdown {
  typename numeric::Tape<S>::Var total;
  typename numeric::Tape<S>::Var entity;
  typename numeric::Tape<S>::Var relation;
  typename numeric::Tape<S>::Var coref;
  int dropped_gold_relations = 0;  // gold relations whose arguments missed the beam
};

// Weighted negative log-likelihood of the gold structures. Entity loss runs
// over every enumerated span (null target when not gold); relation loss
// over ordered beam pairs; coref loss marginalizes over gold cluster-mates
// among the candidates, falling back to epsilon.
template <class S>
LossBreakdown<S> joint_loss(model::ParamBank<S>& bank, const corpus::Document& doc,
                            const std::vector<corpus::Span>& spans,
                            const std::vector<std::pair<int, int>>& sentence_ranges,
                            const graph::BeamSet& beams,
                            typename numeric::Tape<S>::Var entity_probs,
                            const std::vector<typename numeric::Tape<S>::Var>& relation_probs,
                            const CorefDistributions<S>& coref,
                            const model::Config& config);

// Greedy decoding from extracted probability values. Argmax ties break
// toward null, then the lowest label index.
template <class S>
PredictedDoc decode(const corpus::Document& doc, const std::vector<corpus::Span>& spans,
                    const graph::BeamSet& beams, const numeric::Tensor<S>& entity_probs,
                    const std::vector<numeric::Tensor<S>>& relation_probs,
                    const std::vector<numeric::Tensor<S>>& coref_dists,
                    const model::Config& config);

}  // namespace dygie::heads
