#include "dygie/model/model.hpp"

#include "dygie/rng.hpp"

namespace dygie::model {

template <class S>
DocumentForward<S> Model<S>::forward(numeric::Tape<S>& tape, const corpus::Document& doc,
                                     bool train, bool with_loss, uint64_t step,
                                     const graph::BeamSet* frozen_beams) const {
  const Config& cfg = *config_;
  DocumentForward<S> out;

  std::vector<int> sentence_tokens;
  for (int s = 0; s < doc.sentence_count(); ++s) {
    if (doc.sentence_length(s) == 0)
      throw std::runtime_error(doc.doc_id + ": empty sentence " + std::to_string(s));
    auto spans = encoder::enumerate_spans(s, doc.sentence_offsets[s], doc.sentence_length(s),
                                          cfg.net.max_span_width);
    out.sentence_ranges.emplace_back(static_cast<int>(out.spans.size()),
                                     static_cast<int>(out.spans.size() + spans.size()));
    out.spans.insert(out.spans.end(), spans.begin(), spans.end());
    sentence_tokens.push_back(doc.sentence_length(s));
  }
  if (out.spans.empty()) throw std::runtime_error(doc.doc_id + ": document has no spans");

  ParamBank<S> bank(tape, *params_);
  DropoutCtx ctx{train, cfg.train.seed, step};

  std::vector<typename numeric::Tape<S>::Var> sentence_reps;
  for (int s = 0; s < doc.sentence_count(); ++s) {
    std::vector<int> rows;
    for (const auto& tok : doc.sentences[s]) rows.push_back(vocab_->lookup(tok));
    auto tokens = encoder::encode_tokens(bank, rows, cfg, ctx, static_cast<uint64_t>(s));
    auto [begin, end] = out.sentence_ranges[s];
    std::vector<corpus::Span> sentence_spans(out.spans.begin() + begin, out.spans.begin() + end);
    sentence_reps.push_back(encoder::span_representations(
        bank, tokens, sentence_spans, doc.sentence_offsets[s], cfg, ctx,
        static_cast<uint64_t>(s)));
  }
  out.g0 = tape.concat(sentence_reps, 0);

  graph::Propagator<S> propagator(bank, cfg, ctx);
  out.beams = frozen_beams
                  ? *frozen_beams
                  : propagator.build_beams(out.g0, out.sentence_ranges, sentence_tokens,
                                           doc.total_tokens);
  auto prop = propagator.propagate(out.g0, out.beams, out.sentence_ranges);
  out.g_final = prop.g_final;
  out.g_coref_out = prop.g_coref_out;
  out.states = std::move(prop.states);

  out.entity_probs = heads::entity_distribution(bank, out.g_final, cfg, ctx, fnv1a("head.entity"));
  for (size_t s = 0; s < out.sentence_ranges.size(); ++s) {
    auto g_beam = tape.gather_rows(out.g_final, out.beams.relation[s]);
    out.relation_probs.push_back(
        heads::relation_distribution(bank, g_beam, cfg, ctx, fnv1a("head.relation") + s));
  }
  out.coref = heads::coref_distributions(propagator, out.g_coref_out, out.beams,
                                         fnv1a("head.coref"));

  if (with_loss) {
    out.loss = heads::joint_loss(bank, doc, out.spans, out.sentence_ranges, out.beams,
                                 out.entity_probs, out.relation_probs, out.coref, cfg);
    out.has_loss = true;
  }
  out.bound_params = bank.bound();
  return out;
}

template <class S>
PredictedDoc Model<S>::predict(const corpus::Document& doc) const {
  numeric::Tape<S> tape;
  auto fwd = forward(tape, doc, /*train=*/false, /*with_loss=*/false, /*step=*/0);
  std::vector<numeric::Tensor<S>> rel_values;
  for (auto v : fwd.relation_probs) rel_values.push_back(tape.value(v));
  std::vector<numeric::Tensor<S>> coref_values;
  for (auto v : fwd.coref.dist) coref_values.push_back(tape.value(v));
  return heads::decode<S>(doc, fwd.spans, fwd.beams, tape.value(fwd.entity_probs), rel_values,
                          coref_values, *config_);
}

numeric::GradCheckReport model_grad_check(const Config& config, const corpus::Document& doc,
                                          double h, double tol, bool corrupt) {
  Config cfg = config;
  cfg.precision = Precision::kFloat64;
  auto vocab = corpus::build_vocabulary({doc}, cfg.net.embedding_dim);
  auto params = init_params<double>(cfg, vocab.row_count(), cfg.train.seed);
  Model<double> model(&cfg, &vocab, &params);

  // Beams from the unperturbed parameters, reused for every evaluation.
  graph::BeamSet beams;
  {
    numeric::Tape<double> tape;
    beams = model.forward(tape, doc, /*train=*/false, /*with_loss=*/true, 0).beams;
  }

  std::map<std::string, numeric::Tensor<double>> analytic;
  {
    numeric::Tape<double> tape;
    auto fwd = model.forward(tape, doc, false, true, 0, &beams);
    tape.backward(fwd.loss.total);
    for (const auto& [name, var] : fwd.bound_params) {
      const auto& g = tape.grad(var);
      if (!g.data.empty()) analytic[name] = g;
    }
  }
  if (corrupt) {
    for (auto& [name, g] : analytic)
      if (!g.data.empty()) {
        g.data[0] = g.data[0] * 1.5 + 1.0;
        break;
      }
  }

  std::map<std::string, numeric::Tensor<double>*> param_ptrs;
  for (const auto& name : params.names()) param_ptrs[name] = &params.get(name);

  auto f = [&]() {
    numeric::Tape<double> tape;
    auto fwd = model.forward(tape, doc, false, true, 0, &beams);
    return static_cast<double>(tape.value(fwd.loss.total).data[0]);
  };
  return numeric::grad_check(f, param_ptrs, analytic, h, tol);
}

Config verification_config() {
  Config cfg;
  cfg.precision = Precision::kFloat64;
  cfg.net.embedding_dim = 5;
  cfg.net.hidden = 3;
  cfg.net.ffnn_hidden = 4;
  cfg.net.attn_hidden = 4;
  cfg.net.width_dim = 2;
  cfg.net.max_span_width = 3;
  cfg.graph.N = 2;
  cfg.graph.M = 2;
  cfg.graph.K = 3;
  cfg.graph.coref_ratio = 0.5;
  cfg.graph.rel_ratio = 0.5;
  cfg.schema.entity_labels = {"T0", "T1", "T2"};
  cfg.schema.relation_labels = {"R0", "R1"};
  cfg.synthetic.gen.schema = cfg.schema;
  // Small task weights keep the objective O(1), so central differences
  // resolve near-zero gradients against the guarded 1e-8 denominator.
  cfg.loss = {0.02, 0.02, 0.02};
  cfg.train.seed = 15;
  return cfg;
}

corpus::Document verification_document() {
  corpus::GenConfig gen;
  gen.num_docs = 1;
  gen.sentences_per_doc = 2;
  gen.tokens_per_sentence = 7;
  gen.nesting_rate = 1.0;
  gen.pronoun_rate = 1.0;
  gen.schema = verification_config().schema;
  return corpus::generate_synthetic(gen, 4242)[0];
}

double relu_kink_margin(const Config& config, const corpus::Document& doc) {
  Config cfg = config;
  cfg.precision = Precision::kFloat64;
  auto vocab = corpus::build_vocabulary({doc}, cfg.net.embedding_dim);
  auto params = init_params<double>(cfg, vocab.row_count(), cfg.train.seed);
  Model<double> model(&cfg, &vocab, &params);
  numeric::Tape<double> tape;
  model.forward(tape, doc, /*train=*/false, /*with_loss=*/true, 0);
  return tape.min_relu_input_magnitude();
}

template class Model<float>;
template class Model<double>;

}  // namespace dygie::model
