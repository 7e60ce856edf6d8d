#pragma once

// Dynamic span graph: beam pruning, coreference propagation, relation
// propagation, and gated span updates.
//
// Conventions:
//  - the candidate span list is in document order (sentence, start, end);
//    beams hold ascending indices into it, so beam order is document order.
//  - the coreference pair matrix V is b_c x b_c with row i scoring span i
//    against column j; slots outside the antecedent window
//    (i-K <= j <= i-1) carry the -1e9 sentinel, and softmax rows without
//    any valid slot are zeroed.
//  - the per-sentence relation tensor V_R (b_r x b_r x L_R) is stored as a
//    (b_r*b_r) x L_R matrix, row i*b_r + j scoring the ordered pair (i, j);
//    the diagonal carries the sentinel.

#include <utility>
#include <vector>

#include "dygie/corpus/types.hpp"
#include "dygie/model/params.hpp"

namespace dygie::graph {

inline constexpr double kScoreMask = -1e9;

// ceil(ratio * token_count), computed with an exact-integer guard so e.g.
// 0.4 * 5 gives 2; at least 1, capped at span_count.
int beam_size(double ratio, int token_count, int span_count);

// Indices of the b largest scores, ties broken toward the lower index,
// returned in ascending index order.
std::vector<int> prune_top_k(const std::vector<double>& scores, int b);

struct BeamSet {
  std::vector<int> coref;                          // global span indices
  std::vector<std::vector<int>> relation;          // per sentence, global span indices
  std::vector<std::vector<int>> coref_candidates;  // per beam position: antecedent beam positions
};

template <class S>
struct SpanGraphState {
  int iteration = 0;
  numeric::Tensor<S> g;                          // num_spans x d
  numeric::Tensor<S> coref_v;                    // b_c x K, invalid slots kScoreMask
  numeric::Tensor<S> coref_p;                    // b_c x K, invalid slots 0
  std::vector<numeric::Tensor<S>> relation_v;    // per sentence, (b*b) x L_R
};

template <class S>
class Propagator {
 public:
  using Var = typename numeric::Tape<S>::Var;

  Propagator(model::ParamBank<S>& bank, const model::Config& config,
             const model::DropoutCtx& ctx)
      : bank_(bank), config_(config), ctx_(ctx) {}

  // n x 1 unary scores through the named two-hidden-layer FFNN.
  Var unary_scores(Var g, const std::string& prefix, uint64_t instance);

  // Beam selection from g0 values. sentence_ranges gives [begin, end) into
  // the span list per sentence; sentence_tokens the token count per sentence.
  BeamSet build_beams(Var g0, const std::vector<std::pair<int, int>>& sentence_ranges,
                      const std::vector<int>& sentence_tokens, int doc_tokens);

  struct CorefScores {
    Var v;  // b x b, masked
    Var p;  // b x b row softmax, invalid slots ~0, candidate-free rows zeroed
  };
  CorefScores coref_scores(Var g_beam, const BeamSet& beams, uint64_t instance);
  // Coreference update: u(i) = sum_j P(i,j) g_j.
  Var coref_update(const CorefScores& scores, Var g_beam);

  // (b*b) x L_R masked scores for one sentence beam.
  Var relation_scores(Var g_sent, uint64_t instance);
  // Relation update: u(i) = sum_j relu(V(i,j,:)) A_R (*) g_j.
  Var relation_update(Var v_rel, Var g_sent);

  // Sigmoid-gated convex combination of g and u; gate weights are d x 2d.
  Var gated_update(Var g, Var u, const std::string& gate_name);

  struct Result {
    Var g_final;
    Var g_coref_out;  // input to the coreference prediction head
    std::vector<SpanGraphState<S>> states;  // state 0 = before propagation
  };
  Result propagate(Var g0, const BeamSet& beams,
                   const std::vector<std::pair<int, int>>& sentence_ranges);

  const model::Config& config() const { return config_; }
  model::ParamBank<S>& bank() { return bank_; }

 private:
  Var coref_step(Var g_beam, const BeamSet& beams, uint64_t instance, CorefScores* out_scores);

  model::ParamBank<S>& bank_;
  const model::Config& config_;
  const model::DropoutCtx& ctx_;
};

// (b*b) x 2d ordered-pair rows: row i*b + j = [g_i ; g_j].
template <class S>
typename numeric::Tape<S>::Var pair_rows(numeric::Tape<S>& tape,
                                         typename numeric::Tape<S>::Var g, int b);

// Extract the b_c x K antecedent-slot views from the full b x b matrices.
template <class S>
void extract_coref_slots(const numeric::Tensor<S>& v_full, const numeric::Tensor<S>& p_full,
                         int max_antecedents, numeric::Tensor<S>* v_out,
                         numeric::Tensor<S>* p_out);

extern template class Propagator<float>;
extern template class Propagator<double>;

}  // namespace dygie::graph
