#pragma once

// Ties encoder, graph and heads into the per-document computation graph.

#include "dygie/corpus/embeddings.hpp"
#include "dygie/encoder/encoder.hpp"
#include "dygie/graph/graph.hpp"
#include "dygie/heads/heads.hpp"
#include "dygie/numeric/grad_check.hpp"
#include "dygie/predictions.hpp"

namespace dygie::model {

template <class S>
struct DocumentForward {
  using Var = typename numeric::Tape<S>::Var;
  std::vector<corpus::Span> spans;                  // document order
  std::vector<std::pair<int, int>> sentence_ranges;  // [begin, end) into spans
  graph::BeamSet beams;
  Var g0, g_final, g_coref_out;
  Var entity_probs;                                  // num_spans x (1 + C)
  std::vector<Var> relation_probs;                   // per sentence, beam pairs
  heads::CorefDistributions<S> coref;
  heads::LossBreakdown<S> loss;
  bool has_loss = false;
  std::vector<graph::SpanGraphState<S>> states;
  std::map<std::string, Var> bound_params;  // tape leaves, for gradient readback
};

template <class S>
class Model {
 public:
  // All three referents must outlive the model.
  Model(const Config* config, const corpus::EmbeddingTable* vocab, const ParamStore<S>* params)
      : config_(config), vocab_(vocab), params_(params) {}

  DocumentForward<S> forward(numeric::Tape<S>& tape, const corpus::Document& doc, bool train,
                             bool with_loss, uint64_t step,
                             const graph::BeamSet* frozen_beams = nullptr) const;

  PredictedDoc predict(const corpus::Document& doc) const;

  const Config& config() const { return *config_; }
  const corpus::EmbeddingTable& vocab() const { return *vocab_; }
  const ParamStore<S>& params() const { return *params_; }

 private:
  const Config* config_;
  const corpus::EmbeddingTable* vocab_;
  const ParamStore<S>* params_;
};

// Full-model central-difference check on one document (64-bit, dropout off,
// beams frozen from the unperturbed forward so the probed function is the
// same piecewise-smooth branch the analytic gradients differentiate).
// `corrupt` perturbs one analytic gradient first; the report must then fail.
numeric::GradCheckReport model_grad_check(const Config& config, const corpus::Document& doc,
                                          double h, double tol, bool corrupt = false);

// Smallest |relu input| over a full forward+loss at the given config's
// initialization; the gradient-check seed is chosen so this sits far above
// the probe step.
double relu_kink_margin(const Config& config, const corpus::Document& doc);

// The built-in gradient-verification configuration: small dimensions, an
// O(1) objective, and a pinned seed whose relu kink margin clears the
// probe step by three orders of magnitude.
Config verification_config();
// The matching two-sentence document (nested pair + pronoun + relations).
corpus::Document verification_document();

extern template class Model<float>;
extern template class Model<double>;

}  // namespace dygie::model
